//! Combining two self-normalized estimators drawn from different trials.

use serde::Serialize;

use super::{asymptotic_variance, snis, EstimateRecord, EstimatorKind};
use crate::error::{invalid, Result};
use crate::functions::TestFn;
use crate::targets::{weight, Target, Trial};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultipleIsPlan {
    /// Weight on the `Q_X` estimate.
    pub t: f64,
    /// Asymptotic fraction of samples drawn from `Q_X`.
    pub delta: f64,
    pub trial_x: Trial,
    pub trial_y: Trial,
    pub n_x: usize,
    pub n_y: usize,
}

impl MultipleIsPlan {
    /// Splits `n` samples as `round(delta n)` from `Q_X` and the rest from `Q_Y`.
    pub fn new(t: f64, delta: f64, trial_x: Trial, trial_y: Trial, n: usize) -> Result<Self> {
        if !(t > 0.0 && t < 1.0) {
            return Err(invalid(format!("combination weight t = {t} must lie in (0, 1)")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid(format!("sample fraction delta = {delta} must lie in (0, 1)")));
        }
        if n < 2 {
            return Err(invalid("need at least one sample from each trial"));
        }
        let n_x = ((delta * n as f64).round() as usize).clamp(1, n - 1);
        Ok(Self { t, delta, trial_x, trial_y, n_x, n_y: n - n_x })
    }

    pub fn n(&self) -> usize {
        self.n_x + self.n_y
    }
}

/// `t Π̃_X(f) + (1-t) Π̃_Y(f)`.
pub fn combined_multiple_is<F: TestFn + ?Sized>(
    plan: &MultipleIsPlan,
    target: &Target,
    samples_x: &[f64],
    samples_y: &[f64],
    f: &F,
) -> Result<EstimateRecord> {
    if samples_x.len() != plan.n_x || samples_y.len() != plan.n_y {
        return Err(invalid(format!(
            "plan expects {} + {} samples, got {} + {}",
            plan.n_x,
            plan.n_y,
            samples_x.len(),
            samples_y.len()
        )));
    }
    let ex = snis(samples_x, f, &weight(&plan.trial_x, target)?)?;
    let ey = snis(samples_y, f, &weight(&plan.trial_y, target)?)?;
    let value = plan.t * ex.value + (1.0 - plan.t) * ey.value;
    Ok(EstimateRecord::new(value, plan.n(), EstimatorKind::CombinedMultiple))
}

/// `(t²/δ) σ²(Q_X, f) + ((1-t)²/(1-δ)) σ²(Q_Y, f)`.
pub fn multiple_is_asym_variance<F: TestFn + ?Sized>(plan: &MultipleIsPlan, target: &Target, f: &F) -> Result<f64> {
    let vx = asymptotic_variance(&plan.trial_x, target, f)?;
    let vy = asymptotic_variance(&plan.trial_y, target, f)?;
    let (t, d) = (plan.t, plan.delta);
    Ok(t * t / d * vx + (1.0 - t) * (1.0 - t) / (1.0 - d) * vy)
}
