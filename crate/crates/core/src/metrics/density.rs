use serde::{Deserialize, Serialize};

use super::{logs, quantile, sample_std, MetricError, MetricSample};

/// Peak-normalized Gaussian KDE of log step counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeCurve {
    /// Evaluation points on the log axis.
    pub grid: Vec<f64>,
    /// Density divided by its maximum over the grid.
    pub density: Vec<f64>,
    pub bandwidth: f64,
    /// The maximum that was divided out.
    pub peak: f64,
}

/// Silverman's rule on already-transformed data:
/// `0.9 · min(σ, IQR/1.34) · n^(-1/5)`, using σ alone when the IQR is 0 and 0.1 when σ is 0.
pub fn silverman_bandwidth(x: &[f64]) -> f64 {
    let sigma = sample_std(x);
    if sigma == 0.0 {
        return 0.1;
    }
    let iqr = quantile(x, 0.75).unwrap_or(0.0) - quantile(x, 0.25).unwrap_or(0.0);
    let spread = if iqr > 0.0 {
        sigma.min(iqr / 1.34)
    } else {
        sigma
    };
    0.9 * spread * (x.len() as f64).powf(-0.2)
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Evaluates the KDE of `ln(values)` on `grid` (a log-axis grid) and scales it to peak 1.
pub fn kde_curve(sample: &MetricSample, grid: &[f64]) -> Result<KdeCurve, MetricError> {
    let x = logs(&sample.values)?;
    if grid.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let h = silverman_bandwidth(&x);
    let norm = 1.0 / (x.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let raw: Vec<f64> = grid
        .iter()
        .map(|g| {
            norm * x
                .iter()
                .map(|xi| (-0.5 * ((g - xi) / h).powi(2)).exp())
                .sum::<f64>()
        })
        .collect();
    let peak = raw.iter().copied().fold(0.0, f64::max);
    let density = if peak > 0.0 {
        raw.iter().map(|d| d / peak).collect()
    } else {
        raw
    };
    Ok(KdeCurve {
        grid: grid.to_vec(),
        density,
        bandwidth: h,
        peak,
    })
}
