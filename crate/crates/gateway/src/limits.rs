use std::collections::HashMap;
use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

/// Counting semaphore for blocking callers.
#[derive(Debug)]
pub struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

/// Returns its slot on drop.
#[derive(Debug)]
pub struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    pub fn new(permits: usize) -> Self {
        Semaphore {
            free: Mutex::new(permits.max(1)),
            cv: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

/// Spaces requests at least `interval` apart, in the order callers arrive.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn per_minute(rpm: u32) -> Self {
        RateLimiter {
            interval: Duration::from_secs(60) / rpm.max(1),
            next: Mutex::new(None),
        }
    }

    /// Blocks until this caller's slot.
    pub fn wait(&self) {
        let slot = {
            let mut next = self.next.lock().unwrap_or_else(|e| e.into_inner());
            let now = Instant::now();
            let slot = next.map_or(now, |n| n.max(now));
            *next = Some(slot + self.interval);
            slot
        };
        let now = Instant::now();
        if slot > now {
            thread::sleep(slot - now);
        }
    }
}

/// Process-wide request limits: a bound on requests in flight across all sessions and
/// one rate limiter per endpoint.
#[derive(Debug)]
pub struct Limits {
    pub in_flight: Semaphore,
    endpoints: Mutex<HashMap<String, Arc<RateLimiter>>>,
}

impl Limits {
    pub fn new(max_in_flight: usize) -> Arc<Self> {
        Arc::new(Limits {
            in_flight: Semaphore::new(max_in_flight),
            endpoints: Mutex::new(HashMap::new()),
        })
    }

    /// The endpoint's limiter; the first caller's rate sticks.
    pub fn rate_limiter(&self, endpoint: &str, rpm: Option<u32>) -> Option<Arc<RateLimiter>> {
        let rpm = rpm?;
        let mut map = self.endpoints.lock().unwrap_or_else(|e| e.into_inner());
        Some(Arc::clone(
            map.entry(endpoint.to_string())
                .or_insert_with(|| Arc::new(RateLimiter::per_minute(rpm))),
        ))
    }
}
