//! Tempered random-walk Metropolis-Hastings and its continuous-time jump
//! process.
//!
//! The chain targets `q ∝ π^β`. In the jump process each visited state is
//! held for an exponential time with mean `π(x)^(1-β)` (unnormalized `π`),
//! so time averages recover `Π`. Multiplying times by
//! [`RwmhKernel::log_time_scale`] converts to the normalized clock in which
//! the holding mean is the exact weight `π/q`.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimators::{weighted_mean_log, EstimateRecord, EstimatorKind};
use crate::functions::TestFn;
use crate::harness::fmt_real;
use crate::targets::{Target, Trial};

/// Bound on `|log W|`; holding times beyond it are clamped and counted.
pub const LOG_HOLD_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Proposal {
    /// Increments `N(0, sd²)`.
    Gaussian { sd: f64 },
    /// Increments `N(0, xi²)` conditioned on `|z| <= xi`.
    Truncated { xi: f64 },
}

impl Proposal {
    pub fn scale(&self) -> f64 {
        match *self {
            Proposal::Gaussian { sd } => sd,
            Proposal::Truncated { xi } => xi,
        }
    }

    pub fn is_truncated(&self) -> bool {
        matches!(self, Proposal::Truncated { .. })
    }

    /// Support half-width used when integrating against the increment law.
    pub fn reach(&self) -> f64 {
        match *self {
            Proposal::Gaussian { sd } => 12.0 * sd,
            Proposal::Truncated { xi } => xi,
        }
    }

    /// Density of the increment `z`.
    pub fn density(&self, z: f64) -> f64 {
        let phi = |u: f64| (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
        match *self {
            Proposal::Gaussian { sd } => phi(z / sd) / sd,
            Proposal::Truncated { xi } => {
                if z.abs() > xi {
                    0.0
                } else {
                    // 2Φ(1) - 1
                    let mass = libm::erf(std::f64::consts::FRAC_1_SQRT_2);
                    phi(z / xi) / (xi * mass)
                }
            }
        }
    }

    #[inline]
    pub fn sample_increment<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Proposal::Gaussian { sd } => {
                let z: f64 = StandardNormal.sample(rng);
                sd * z
            }
            Proposal::Truncated { xi } => loop {
                let z: f64 = StandardNormal.sample(rng);
                if z.abs() <= 1.0 {
                    break xi * z;
                }
            },
        }
    }
}

/// Random-walk Metropolis-Hastings kernel with stationary law `∝ π^β`.
#[derive(Debug, Clone)]
pub struct RwmhKernel {
    target: Target,
    beta: f64,
    proposal: Proposal,
}

impl RwmhKernel {
    pub fn new(target: Target, beta: f64, proposal: Proposal) -> Result<Self> {
        if target.is_discrete() {
            return Err(invalid("the random-walk kernel needs a continuous target"));
        }
        Trial::tempered(beta).validate(&target)?;
        let s = proposal.scale();
        if !(s.is_finite() && s > 0.0) {
            return Err(invalid(format!("proposal scale {s} must be positive")));
        }
        Ok(Self { target, beta, proposal })
    }

    pub fn target(&self) -> &Target {
        &self.target
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn proposal(&self) -> Proposal {
        self.proposal
    }

    /// `x + z` with `z` drawn from the increment law.
    #[inline]
    pub fn propose<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> f64 {
        x + self.proposal.sample_increment(rng)
    }

    /// Acceptance probability `min(1, (π(y)/π(x))^β)`.
    pub fn accept_prob(&self, x: f64, y: f64) -> f64 {
        (self.beta * (self.target.log_pi(y) - self.target.log_pi(x))).exp().min(1.0)
    }

    /// One Metropolis-Hastings move; returns the next state and whether the
    /// proposal was accepted.
    pub fn mh_step<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> (f64, bool) {
        let lx = self.target.log_pi(x);
        let (y, _, acc) = self.step_cached(x, lx, rng);
        (y, acc)
    }

    /// Like [`mh_step`](Self::mh_step) with `log π(x)` supplied; also returns
    /// `log π` at the new state.
    #[inline]
    fn step_cached<R: Rng + ?Sized>(&self, x: f64, log_pi_x: f64, rng: &mut R) -> (f64, f64, bool) {
        let y = self.propose(x, rng);
        let ly = self.target.log_pi(y);
        let log_ratio = self.beta * (ly - log_pi_x);
        let u: f64 = rng.random();
        if log_ratio >= 0.0 || u.ln() < log_ratio {
            (y, ly, true)
        } else {
            (x, log_pi_x, false)
        }
    }

    /// Log mean holding time `(1-β) log π(x)` on the simulation clock.
    #[inline]
    pub fn log_hold_mean(&self, x: f64) -> f64 {
        (1.0 - self.beta) * self.target.log_pi(x)
    }

    /// Log of the factor turning simulation time into the normalized clock.
    pub fn log_time_scale(&self) -> Result<f64> {
        Ok(self.target.log_tempered_normalizer(self.beta)? - self.target.log_normalizer())
    }

    /// Draws a holding time from its log mean; returns `(W, clamped)`.
    #[inline]
    fn draw_hold<R: Rng + ?Sized>(&self, log_mean: f64, rng: &mut R) -> (f64, bool) {
        let e: f64 = Exp1.sample(rng);
        let lw = log_mean + e.ln();
        if lw > LOG_HOLD_LIMIT {
            (LOG_HOLD_LIMIT.exp(), true)
        } else if lw < -LOG_HOLD_LIMIT || lw.is_nan() {
            ((-LOG_HOLD_LIMIT).exp(), true)
        } else {
            (lw.exp(), false)
        }
    }
}

/// `n` successive states of the chain started at `x0`; `x0` itself is not included.
pub fn simulate_jump_chain<R: Rng + ?Sized>(kernel: &RwmhKernel, x0: f64, n: usize, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut x = x0;
    let mut lx = kernel.target.log_pi(x0);
    for _ in 0..n {
        let (y, ly, _) = kernel.step_cached(x, lx, rng);
        x = y;
        lx = ly;
        out.push(x);
    }
    out
}

/// When to stop a continuous-time path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    /// This many visited states, the initial one included.
    Jumps(usize),
    /// Run until the holding interval containing `t_max` is drawn.
    Time(f64),
}

/// A continuous-time trajectory: state `states[k]` occupies
/// `[jump_times[k], jump_times[k] + holding_times[k])`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct JumpPath {
    pub states: Vec<f64>,
    pub holding_times: Vec<f64>,
    pub jump_times: Vec<f64>,
    pub seed: u64,
    /// Number of holding times clamped to stay representable.
    pub clamped: usize,
}

impl JumpPath {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// End of the last holding interval.
    pub fn end_time(&self) -> f64 {
        match (self.jump_times.last(), self.holding_times.last()) {
            (Some(t), Some(w)) => t + w,
            _ => 0.0,
        }
    }

    /// Writes `k, X_k, W_k, T_k` rows, `k` counted from 1.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "X_k", "W_k", "T_k"])?;
        for k in 0..self.len() {
            w.write_record([
                (k + 1).to_string(),
                fmt_real(self.states[k]),
                fmt_real(self.holding_times[k]),
                fmt_real(self.jump_times[k]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Simulates the jump process from `x0` at time 0.
pub fn simulate_ctmc<R: Rng + ?Sized>(kernel: &RwmhKernel, x0: f64, horizon: Horizon, rng: &mut R) -> Result<JumpPath> {
    if !x0.is_finite() {
        return Err(Error::NonFinite(x0));
    }
    match horizon {
        Horizon::Jumps(0) => return Err(invalid("horizon must contain at least one jump")),
        Horizon::Time(t) if !(t > 0.0 && t.is_finite()) => return Err(invalid(format!("time horizon {t}"))),
        _ => {}
    }
    let mut path = JumpPath::default();
    let (mut x, mut lx, mut t) = (x0, kernel.target.log_pi(x0), 0.0);
    loop {
        let (w, clamped) = kernel.draw_hold((1.0 - kernel.beta) * lx, rng);
        path.clamped += clamped as usize;
        path.states.push(x);
        path.holding_times.push(w);
        path.jump_times.push(t);
        t += w;
        let done = match horizon {
            Horizon::Jumps(n) => path.len() >= n,
            Horizon::Time(t_max) => t > t_max,
        };
        if done {
            return Ok(path);
        }
        let (y, ly, _) = kernel.step_cached(x, lx, rng);
        x = y;
        lx = ly;
    }
}

/// State occupied at time `t`.
pub fn state_at(path: &JumpPath, t: f64) -> Result<f64> {
    let end = path.end_time();
    if !(t >= 0.0 && t < end) {
        return Err(Error::OutsideHorizon { t, end });
    }
    let k = path.jump_times.partition_point(|&s| s <= t);
    Ok(path.states[k - 1])
}

/// States at each of the sorted `times`, simulated on the fly without
/// storing the path.
pub fn states_at_times<R: Rng + ?Sized>(kernel: &RwmhKernel, x0: f64, times: &[f64], rng: &mut R) -> Vec<f64> {
    debug_assert!(times.windows(2).all(|w| w[0] <= w[1]));
    let mut out = Vec::with_capacity(times.len());
    let (mut x, mut lx, mut t) = (x0, kernel.target.log_pi(x0), 0.0);
    let mut next = 0;
    while next < times.len() {
        let (w, _) = kernel.draw_hold((1.0 - kernel.beta) * lx, rng);
        t += w;
        while next < times.len() && times[next] < t {
            out.push(x);
            next += 1;
        }
        if next == times.len() {
            break;
        }
        let (y, ly, _) = kernel.step_cached(x, lx, rng);
        x = y;
        lx = ly;
    }
    out
}

/// Outcome of running until first entry into `[-d, d]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Hit {
    /// Entry time on the simulation clock.
    At(f64),
    /// The jump budget ran out first; carries the elapsed time.
    Censored(f64),
}

/// Runs the jump process from `x0` until it first lies in `[-d, d]`.
pub fn hitting_time<R: Rng + ?Sized>(kernel: &RwmhKernel, x0: f64, d: f64, budget: usize, rng: &mut R) -> Hit {
    let (mut x, mut lx, mut t) = (x0, kernel.target.log_pi(x0), 0.0);
    for _ in 0..budget {
        if x.abs() <= d {
            return Hit::At(t);
        }
        let (w, _) = kernel.draw_hold((1.0 - kernel.beta) * lx, rng);
        t += w;
        let (y, ly, _) = kernel.step_cached(x, lx, rng);
        x = y;
        lx = ly;
    }
    if x.abs() <= d {
        Hit::At(t)
    } else {
        Hit::Censored(t)
    }
}

/// Self-normalized estimate with weights `π(X_i)^(1-β)` over a jump chain.
pub fn snis_beta<F: TestFn + ?Sized>(chain: &[f64], target: &Target, beta: f64, f: &F) -> Result<EstimateRecord> {
    if chain.is_empty() {
        return Err(Error::Empty("chain"));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(invalid(format!("beta {beta} must lie in (0, 1]")));
    }
    let fvals: Vec<f64> = chain.iter().map(|&x| f.eval(x)).collect();
    let log_w: Vec<f64> = chain.iter().map(|&x| (1.0 - beta) * target.log_pi(x)).collect();
    let value = weighted_mean_log(&fvals, &log_w)?;
    Ok(EstimateRecord::new(value, chain.len(), EstimatorKind::SelfNormalized))
}

/// Writes `i, X_i, log_weight_unnorm` rows for a chain, `i` counted from 1.
pub fn write_chain_csv<W: Write>(chain: &[f64], target: &Target, beta: f64, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["i", "X_i", "log_weight_unnorm"])?;
    for (i, &x) in chain.iter().enumerate() {
        w.write_record([(i + 1).to_string(), fmt_real(x), fmt_real((1.0 - beta) * target.log_pi(x))])?;
    }
    w.flush()?;
    Ok(())
}

/// Transition matrix of the kernel restricted to an evenly spaced grid, with
/// proposal masses `κ(x_j - x_i)·h` (rescaled so no row exceeds one).
pub fn grid_transition_matrix(kernel: &RwmhKernel, grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    if grid.len() < 2 {
        return Err(invalid("grid needs at least two points"));
    }
    let h = grid[1] - grid[0];
    let n = grid.len();
    let mut k: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 0.0 } else { kernel.proposal.density(grid[j] - grid[i]) * h }).collect())
        .collect();
    let max_row = k.iter().map(|r| r.iter().sum::<f64>()).fold(0.0, f64::max);
    if max_row > 1.0 {
        k.iter_mut().flatten().for_each(|v| *v /= max_row);
    }
    for (i, row) in k.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            if i != j {
                *v *= kernel.accept_prob(grid[i], grid[j]);
            }
        }
        let off: f64 = row.iter().sum();
        row[i] = 1.0 - off;
    }
    Ok(k)
}
