use super::{logs, MetricError, MetricSample};

/// Wasserstein-1 distance between two empirical distributions with uniform weights,
/// computed exactly as the integral of |F⁻¹(u) − G⁻¹(u)| over u ∈ [0, 1].
pub fn wasserstein1(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as u64, b.len() as u64);
    // Quantile breakpoints i/n and j/m, compared exactly as i*m vs j*n.
    let (mut i, mut j) = (0u64, 0u64);
    let mut prev = 0u64; // in units of 1/(n*m)
    let mut total = 0.0;
    while i < n && j < m {
        let next_a = (i + 1) * m;
        let next_b = (j + 1) * n;
        let next = next_a.min(next_b);
        total += (next - prev) as f64 * (a[i as usize] - b[j as usize]).abs();
        prev = next;
        if next_a == next {
            i += 1;
        }
        if next_b == next {
            j += 1;
        }
    }
    Ok(total / (n * m) as f64)
}

/// Wasserstein-1 distance between the log step counts of two samples.
pub fn log_emd(a: &MetricSample, b: &MetricSample) -> Result<f64, MetricError> {
    log_emd_values(&a.values, &b.values)
}

pub fn log_emd_values(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    wasserstein1(&logs(a)?, &logs(b)?)
}
