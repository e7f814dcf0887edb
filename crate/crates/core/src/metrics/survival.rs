use serde::{Deserialize, Serialize};

use super::{KmObservation, MetricError};

/// Kaplan-Meier estimate of P(level solved by step t), as a right-continuous step
/// function: the value at `steps[i]` holds until `steps[i + 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmCurve {
    pub steps: Vec<f64>,
    pub solved: Vec<f64>,
}

impl KmCurve {
    pub fn solved_at(&self, t: f64) -> f64 {
        match self.steps.iter().rposition(|&s| s <= t) {
            Some(i) => self.solved[i],
            None => 0.0,
        }
    }
}

/// Product-limit estimator with solves as events and unsolved observations as right
/// censoring. At tied steps solves are counted before censorings. Starts at (0, 0).
pub fn km_curve(observations: &[KmObservation]) -> Result<KmCurve, MetricError> {
    if observations.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    if observations
        .iter()
        .any(|o| !(o.step > 0.0 && o.step.is_finite()))
    {
        return Err(MetricError::InvalidValue);
    }
    let mut obs = observations.to_vec();
    obs.sort_by(|a, b| a.step.total_cmp(&b.step).then(b.solved.cmp(&a.solved)));
    let mut curve = KmCurve {
        steps: vec![0.0],
        solved: vec![0.0],
    };
    let mut at_risk = obs.len();
    let mut survival = 1.0;
    let mut i = 0;
    while i < obs.len() {
        let t = obs[i].step;
        let tied = obs[i..].iter().take_while(|o| o.step == t).count();
        let events = obs[i..i + tied].iter().filter(|o| o.solved).count();
        if events > 0 {
            survival *= 1.0 - events as f64 / at_risk as f64;
            curve.steps.push(t);
            curve.solved.push(1.0 - survival);
        }
        at_risk -= tied;
        i += tied;
    }
    Ok(curve)
}
