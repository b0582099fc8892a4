use serde::Serialize;

use crate::error::{invalid, Result};
use crate::rng::run_replicates;
use crate::sampler::{hitting_time, Hit, RwmhKernel};

/// Jump budget per trajectory before a hitting time is declared censored.
pub const HIT_BUDGET: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErgodicityVerdict {
    pub gamma: f64,
    pub beta: f64,
    pub uniformly_ergodic: bool,
    /// `(1/γ, (γ-2)/γ)`, empty unless `γ > 3`.
    pub window: Option<(f64, f64)>,
}

/// Whether the tempered jump process on a target with tail index `gamma` is
/// uniformly ergodic at inverse temperature `beta`.
pub fn ergodicity_window(gamma: f64, beta: f64) -> Result<ErgodicityVerdict> {
    if !(gamma.is_finite() && gamma > 1.0) {
        return Err(invalid(format!("tail index gamma = {gamma} must exceed 1")));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(invalid(format!("beta = {beta} must lie in (0, 1]")));
    }
    let window = if gamma > 3.0 { Some((1.0 / gamma, (gamma - 2.0) / gamma)) } else { None };
    let uniformly_ergodic = window.is_some_and(|(lo, hi)| lo < beta && beta < hi);
    Ok(ErgodicityVerdict { gamma, beta, uniformly_ergodic, window })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HittingReport {
    /// Monte Carlo estimate of `E[exp(α τ_D)]`.
    pub mean: f64,
    pub stderr: f64,
    pub n_rep: usize,
    /// Trajectories that exhausted the jump budget; they enter the mean at
    /// their elapsed time, so the estimate is then a lower bound.
    pub censored: usize,
}

/// `E_{x0}[exp(α τ_D)]` with `τ_D` the first entry time into `[-d, d]`,
/// measured on the normalized clock.
pub fn hitting_time_moment(
    kernel: &RwmhKernel,
    x0: f64,
    d: f64,
    alpha: f64,
    n_rep: usize,
    master_seed: u64,
) -> Result<HittingReport> {
    hitting_time_moment_with_budget(kernel, x0, d, alpha, n_rep, master_seed, HIT_BUDGET)
}

pub(crate) fn hitting_time_moment_with_budget(
    kernel: &RwmhKernel,
    x0: f64,
    d: f64,
    alpha: f64,
    n_rep: usize,
    master_seed: u64,
    budget: usize,
) -> Result<HittingReport> {
    if n_rep == 0 {
        return Err(invalid("n_rep must be positive"));
    }
    if !(d > 0.0) || !x0.is_finite() || !(alpha >= 0.0) {
        return Err(invalid(format!(
            "hitting moment needs D > 0, finite x0 and alpha >= 0 (D = {d}, x0 = {x0}, alpha = {alpha})"
        )));
    }
    let scale = kernel.log_time_scale()?.exp();
    let hits = run_replicates(master_seed, n_rep, |_, rng| hitting_time(kernel, x0, d, budget, rng));
    let mut censored = 0;
    let vals: Vec<f64> = hits
        .iter()
        .map(|h| {
            let t = match *h {
                Hit::At(t) => t,
                Hit::Censored(t) => {
                    censored += 1;
                    t
                }
            };
            if alpha == 0.0 {
                1.0
            } else {
                (alpha * scale * t).exp()
            }
        })
        .collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let stderr = if vals.len() > 1 {
        (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt()
    } else {
        0.0
    };
    Ok(HittingReport { mean, stderr, n_rep, censored })
}
