//! Importance-sampling estimators and asymptotic variances.

mod multiple;
mod risk;

pub use multiple::{combined_multiple_is, multiple_is_asym_variance, MultipleIsPlan};
pub use risk::{
    concentrated_set_trial, minimax_trial_atom, set_trial_bound, trial_family_risk, two_point_test_function,
    worst_case_risk_finite, EventSet, RiskCase, RiskReport, SetTrialReport, TwoPointFn, TIE_REL_TOL,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functions::{integrate_target, TestFn};
use crate::sampler::JumpPath;
use crate::targets::{weight, Normalization, Target, Trial, WeightFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EstimatorKind {
    Plain,
    SelfNormalized,
    CtmcTimeAverage,
    CombinedMultiple,
}

/// One replicate's estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRecord {
    pub value: f64,
    pub n: usize,
    pub kind: EstimatorKind,
    pub seed: u64,
    pub init_state: Option<f64>,
}

impl EstimateRecord {
    pub fn new(value: f64, n: usize, kind: EstimatorKind) -> Self {
        Self { value, n, kind, seed: 0, init_state: None }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_init(mut self, x0: f64) -> Self {
        self.init_state = Some(x0);
        self
    }
}

/// `Σ f_i e^{l_i} / Σ e^{l_i}` via the max-shift trick.
///
/// Points with infinite log weight dominate every finite one, so they are
/// averaged among themselves.
pub fn weighted_mean_log(fvals: &[f64], log_w: &[f64]) -> Result<f64> {
    debug_assert_eq!(fvals.len(), log_w.len());
    if fvals.is_empty() {
        return Err(Error::Empty("weighted batch"));
    }
    if let Some(l) = log_w.iter().find(|l| l.is_nan()) {
        return Err(Error::NonFinite(*l));
    }
    let m = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return Err(Error::DegenerateBatch { n: fvals.len() });
    }
    let (mut num, mut den) = (0.0, 0.0);
    if m == f64::INFINITY {
        for (f, l) in fvals.iter().zip(log_w) {
            if *l == f64::INFINITY {
                num += f;
                den += 1.0;
            }
        }
    } else {
        for (f, l) in fvals.iter().zip(log_w) {
            let e = (l - m).exp();
            if e > 0.0 {
                num += f * e;
            }
            den += e;
        }
    }
    Ok(num / den)
}

/// Plain importance sampling `(1/n) Σ f(X_i) w(X_i)`; needs exact weights.
pub fn plain_is<F: TestFn + ?Sized>(samples: &[f64], f: &F, w: &WeightFunction) -> Result<EstimateRecord> {
    if samples.is_empty() {
        return Err(Error::Empty("samples"));
    }
    let mut sum = 0.0;
    for &x in samples {
        let lw = w.log_w(x)?;
        let fx = f.eval(x);
        if lw > f64::NEG_INFINITY && fx != 0.0 {
            sum += fx * lw.exp();
        }
    }
    Ok(EstimateRecord::new(sum / samples.len() as f64, samples.len(), EstimatorKind::Plain))
}

/// Self-normalized importance sampling `Σ f w / Σ w`.
pub fn snis<F: TestFn + ?Sized>(samples: &[f64], f: &F, w: &WeightFunction) -> Result<EstimateRecord> {
    let fvals: Vec<f64> = samples.iter().map(|&x| f.eval(x)).collect();
    let log_w: Vec<f64> = samples.iter().map(|&x| w.log_w_unnorm(x)).collect();
    let value = weighted_mean_log(&fvals, &log_w)?;
    Ok(EstimateRecord::new(value, samples.len(), EstimatorKind::SelfNormalized))
}

/// Time average of `f` along a continuous-time path.
pub fn snis_ctmc<F: TestFn + ?Sized>(path: &JumpPath, f: &F) -> Result<EstimateRecord> {
    if path.is_empty() {
        return Err(Error::Empty("jump path"));
    }
    let fvals: Vec<f64> = path.states.iter().map(|&x| f.eval(x)).collect();
    let log_w: Vec<f64> = path.holding_times.iter().map(|w| w.ln()).collect();
    let value = weighted_mean_log(&fvals, &log_w)?;
    Ok(EstimateRecord::new(value, path.len(), EstimatorKind::CtmcTimeAverage))
}

/// Asymptotic variance `Π([f - Π(f)]² w)` of the self-normalized estimator.
/// Divergent integrals come back as `+inf`.
pub fn asymptotic_variance<F: TestFn + ?Sized>(trial: &Trial, target: &Target, f: &F) -> Result<f64> {
    let w = weight(trial, target)?.normalized()?;
    let mean = crate::functions::expectation(target, f)?;
    if !mean.is_finite() {
        return Ok(f64::INFINITY);
    }
    variance_with_weight(&w, f, mean)
}

pub(crate) fn variance_with_weight<F: TestFn + ?Sized>(w: &WeightFunction, f: &F, mean: f64) -> Result<f64> {
    let log_zratio = match w.normalization() {
        Normalization::Exact { log_zratio } => log_zratio,
        Normalization::SelfNormalized => return Err(Error::NormalizerRequired),
    };
    let integrand = |x: f64| {
        let d = f.eval(x) - mean;
        if d == 0.0 {
            0.0
        } else {
            d * d * (w.log_w_unnorm(x) + log_zratio).exp()
        }
    };
    let mut breaks = f.breakpoints();
    if let Trial::SetMixture { set, .. } = w.trial() {
        breaks.extend([set.lo, set.hi]);
    }
    integrate_target(w.target(), integrand, &breaks)
}

/// `σ²(Q, f) / σ²(Π, f)`.
pub fn variance_ratio<F: TestFn + ?Sized>(trial: &Trial, target: &Target, f: &F) -> Result<f64> {
    Ok(asymptotic_variance(trial, target, f)? / asymptotic_variance(&Trial::tempered(1.0), target, f)?)
}
