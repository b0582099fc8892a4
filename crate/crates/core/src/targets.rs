//! Target densities, trial densities and importance weights.
//!
//! Everything is kept in log space. A target exposes an unnormalized log
//! density `log_pi`; the log normalizer is known in closed form for every
//! kind here, but samplers and self-normalized estimators never need it.
//!
//! Finite discrete targets live on the atom indices `0, 1, ..., N-1`,
//! represented as `f64` so that the same interfaces serve both cases.

use libm::{erfc, lgamma as ln_gamma};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::{self, Tolerance};

/// Absolute tolerance of quadrature-backed CDFs.
pub const CDF_TOL: f64 = 1e-10;

/// Tolerance for finite probability vectors summing to one.
pub const PROB_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TargetKind {
    Gaussian {
        mean: f64,
        sd: f64,
    },
    StudentT {
        dof: f64,
    },
    /// `(gamma-1)/2 * (1+|x|)^(-gamma)`, already normalized.
    PolyTail {
        gamma: f64,
    },
    /// `exp(-a |x|^omega)` up to a constant.
    SuperExp {
        a: f64,
        omega: f64,
    },
    FiniteDiscrete {
        probs: Vec<f64>,
    },
}

/// A target distribution on the real line or on a finite set of atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    kind: TargetKind,
    log_probs: Vec<f64>,
}

/// A closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(invalid(format!("interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

pub(crate) fn check_probs(probs: &[f64], what: &str) -> Result<()> {
    if probs.is_empty() {
        return Err(invalid(format!("{what}: empty probability vector")));
    }
    if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        return Err(invalid(format!("{what}: probabilities must be > 0, got {p}")));
    }
    let s: f64 = probs.iter().sum();
    if (s - 1.0).abs() > PROB_SUM_TOL {
        return Err(invalid(format!("{what}: probabilities sum to {s}, not 1")));
    }
    Ok(())
}

/// Index of an atom, if `x` names one of `n` atoms.
pub(crate) fn atom_index(x: f64, n: usize) -> Option<usize> {
    if x >= 0.0 && x.fract() == 0.0 && (x as usize) < n {
        Some(x as usize)
    } else {
        None
    }
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

impl Target {
    pub fn gaussian(mean: f64, sd: f64) -> Result<Self> {
        if !mean.is_finite() || !(sd.is_finite() && sd > 0.0) {
            return Err(invalid(format!("gaussian({mean}, {sd})")));
        }
        Ok(Self::from_kind(TargetKind::Gaussian { mean, sd }))
    }

    pub fn student_t(dof: f64) -> Result<Self> {
        if !(dof.is_finite() && dof > 0.0) {
            return Err(invalid(format!("student_t dof {dof}")));
        }
        Ok(Self::from_kind(TargetKind::StudentT { dof }))
    }

    pub fn poly_tail(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 1.0) {
            return Err(invalid(format!("poly_tail gamma {gamma} must exceed 1")));
        }
        Ok(Self::from_kind(TargetKind::PolyTail { gamma }))
    }

    pub fn super_exp(a: f64, omega: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0 && omega.is_finite() && omega > 0.0) {
            return Err(invalid(format!("super_exp({a}, {omega})")));
        }
        Ok(Self::from_kind(TargetKind::SuperExp { a, omega }))
    }

    pub fn finite(probs: Vec<f64>) -> Result<Self> {
        check_probs(&probs, "finite target")?;
        let log_probs = probs.iter().map(|p| p.ln()).collect();
        Ok(Self { kind: TargetKind::FiniteDiscrete { probs }, log_probs })
    }

    pub fn from_kind_checked(kind: TargetKind) -> Result<Self> {
        match kind {
            TargetKind::Gaussian { mean, sd } => Self::gaussian(mean, sd),
            TargetKind::StudentT { dof } => Self::student_t(dof),
            TargetKind::PolyTail { gamma } => Self::poly_tail(gamma),
            TargetKind::SuperExp { a, omega } => Self::super_exp(a, omega),
            TargetKind::FiniteDiscrete { probs } => Self::finite(probs),
        }
    }

    fn from_kind(kind: TargetKind) -> Self {
        Self { kind, log_probs: Vec::new() }
    }

    pub fn kind(&self) -> &TargetKind {
        &self.kind
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.kind, TargetKind::FiniteDiscrete { .. })
    }

    /// Atom probabilities of a finite target.
    pub fn probs(&self) -> Option<&[f64]> {
        match &self.kind {
            TargetKind::FiniteDiscrete { probs } => Some(probs),
            _ => None,
        }
    }

    /// Unchecked unnormalized log density; `-inf` off the support.
    #[inline]
    pub fn log_pi(&self, x: f64) -> f64 {
        match self.kind {
            TargetKind::Gaussian { mean, sd } => {
                let z = (x - mean) / sd;
                -0.5 * z * z
            }
            TargetKind::StudentT { dof } => -0.5 * (dof + 1.0) * (x * x / dof).ln_1p(),
            TargetKind::PolyTail { gamma } => (0.5 * (gamma - 1.0)).ln() - gamma * x.abs().ln_1p(),
            TargetKind::SuperExp { a, omega } => -a * x.abs().powf(omega),
            TargetKind::FiniteDiscrete { .. } => match atom_index(x, self.log_probs.len()) {
                Some(i) => self.log_probs[i],
                None => f64::NEG_INFINITY,
            },
        }
    }

    /// Log of the unnormalized density at `x`, rejecting non-finite inputs
    /// and points outside the support.
    pub fn log_density(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::NonFinite(x));
        }
        let v = self.log_pi(x);
        if v == f64::NEG_INFINITY {
            return Err(invalid(format!("{x} is not in the support")));
        }
        Ok(v)
    }

    /// `log ∫ π_u^beta`, the log normalizer of the tempered density.
    pub fn log_tempered_normalizer(&self, beta: f64) -> Result<f64> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(invalid(format!("beta {beta} must be positive")));
        }
        match self.kind {
            TargetKind::Gaussian { sd, .. } => Ok(sd.ln() + 0.5 * (2.0 * std::f64::consts::PI / beta).ln()),
            TargetKind::StudentT { dof } => {
                // ∫ (1 + x²/ν)^(-s) dx = √ν · B(1/2, s - 1/2)
                let s = 0.5 * beta * (dof + 1.0);
                if s <= 0.5 {
                    return Err(invalid(format!("student_t({dof})^{beta} is not integrable")));
                }
                Ok(0.5 * dof.ln() + ln_beta(0.5, s - 0.5))
            }
            TargetKind::PolyTail { gamma } => {
                if gamma * beta <= 1.0 {
                    return Err(invalid(format!("beta {beta} <= 1/gamma = {}: Z_beta is infinite", 1.0 / gamma)));
                }
                Ok(beta * (0.5 * (gamma - 1.0)).ln() + (2.0 / (gamma * beta - 1.0)).ln())
            }
            TargetKind::SuperExp { a, omega } => {
                Ok(std::f64::consts::LN_2 + ln_gamma(1.0 / omega) - omega.ln() - (a * beta).ln() / omega)
            }
            TargetKind::FiniteDiscrete { .. } => Ok(log_sum_exp(self.log_probs.iter().map(|l| beta * l))),
        }
    }

    /// `log ∫ π_u`.
    pub fn log_normalizer(&self) -> f64 {
        self.log_tempered_normalizer(1.0).expect("beta = 1 is always integrable")
    }

    /// Normalized density at `x` (probability mass for finite targets).
    pub fn density(&self, x: f64) -> f64 {
        (self.log_pi(x) - self.log_normalizer()).exp()
    }

    /// Polynomial tail index `gamma` with `π(x) ~ |x|^(-gamma)`, if any.
    pub fn tail_index(&self) -> Option<f64> {
        match self.kind {
            TargetKind::PolyTail { gamma } => Some(gamma),
            TargetKind::StudentT { dof } => Some(dof + 1.0),
            _ => None,
        }
    }

    /// Points where the density is not smooth, plus the mode.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self.kind {
            TargetKind::Gaussian { mean, .. } => vec![mean],
            TargetKind::FiniteDiscrete { .. } => Vec::new(),
            _ => vec![0.0],
        }
    }

    /// A length scale for quadrature windows.
    pub fn scale(&self) -> f64 {
        match self.kind {
            TargetKind::Gaussian { mean, sd } => mean.abs() + 8.0 * sd,
            TargetKind::StudentT { dof } => 4.0 * dof.sqrt(),
            TargetKind::PolyTail { .. } => 4.0,
            TargetKind::SuperExp { a, omega } => 4.0 * a.powf(-1.0 / omega),
            TargetKind::FiniteDiscrete { .. } => 1.0,
        }
    }

    /// Cumulative distribution function.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::NonFinite(x));
        }
        if x == f64::INFINITY {
            return Ok(1.0);
        }
        if x == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        match &self.kind {
            TargetKind::Gaussian { mean, sd } => Ok(0.5 * erfc(-(x - mean) / (sd * std::f64::consts::SQRT_2))),
            TargetKind::PolyTail { gamma } => {
                let tail = 0.5 * (1.0 + x.abs()).powf(-(gamma - 1.0));
                Ok(if x >= 0.0 { 1.0 - tail } else { tail })
            }
            TargetKind::StudentT { .. } | TargetKind::SuperExp { .. } => {
                // symmetric about 0: F(x) = 1/2 + sign(x) ∫_0^|x| π
                let log_z = self.log_normalizer();
                let dens = |y: f64| (self.log_pi(y) - log_z).exp();
                // geometric breaks keep the adaptive rule from missing the bulk
                let mut breaks = Vec::new();
                let mut b = 0.25 * self.scale();
                while b < x.abs() {
                    breaks.push(b);
                    b *= 2.0;
                }
                let tol = Tolerance::new(CDF_TOL, 1e-13);
                let half = quadrature::integrate_with_breaks(&dens, 0.0, x.abs(), &breaks, tol)?.value;
                Ok((0.5 + x.signum() * half).clamp(0.0, 1.0))
            }
            TargetKind::FiniteDiscrete { probs } => {
                if x < 0.0 {
                    return Ok(0.0);
                }
                let k = (x.floor() as usize).min(probs.len() - 1);
                Ok(probs[..=k].iter().sum::<f64>().min(1.0))
            }
        }
    }

    /// Draws an exact sample from the target, where that is cheap.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match &self.kind {
            TargetKind::Gaussian { mean, sd } => Ok(Normal::new(*mean, *sd).expect("validated").sample(rng)),
            TargetKind::FiniteDiscrete { probs } => Ok(sample_categorical(probs, rng) as f64),
            other => Err(Error::Unsupported(format!("exact sampling of {other:?}"))),
        }
    }
}

pub(crate) fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// `log Σ exp(v)`, `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Trial (proposal) distribution relative to a target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Trial {
    /// `q ∝ π^beta`.
    Tempered { beta: f64 },
    /// Explicit probabilities over the atoms of a finite target.
    ExplicitFinite { probs: Vec<f64> },
    /// Mass `c` on one atom, the rest spread proportionally to `π`.
    AtomMixture { atom: usize, c: f64 },
    /// Mass `c` on the set `A` and `1-c` on its complement, each ∝ `π`.
    /// `mass` is `Π(A)` for the target the trial was built against.
    SetMixture { set: Interval, c: f64, mass: f64 },
}

impl Trial {
    pub fn tempered(beta: f64) -> Self {
        Trial::Tempered { beta }
    }

    /// Checks the trial is well defined against `target`.
    pub fn validate(&self, target: &Target) -> Result<()> {
        match self {
            Trial::Tempered { beta } => {
                if !(*beta > 0.0 && *beta <= 1.0) {
                    return Err(invalid(format!("tempered trial needs 0 < beta <= 1, got {beta}")));
                }
                if let Some(gamma) = target.tail_index() {
                    if *beta * gamma <= 1.0 {
                        return Err(invalid(format!(
                            "beta {beta} must exceed 1/gamma = {} for a tail index {gamma}",
                            1.0 / gamma
                        )));
                    }
                }
                Ok(())
            }
            Trial::ExplicitFinite { probs } => {
                let n = target.probs().ok_or_else(|| invalid("explicit finite trial needs a finite target"))?.len();
                if probs.len() != n {
                    return Err(invalid(format!("trial has {} atoms, target has {n}", probs.len())));
                }
                if probs.iter().any(|q| !(q.is_finite() && *q >= 0.0)) {
                    return Err(invalid("trial probabilities must be finite and >= 0"));
                }
                let s: f64 = probs.iter().sum();
                if (s - 1.0).abs() > PROB_SUM_TOL {
                    return Err(invalid(format!("trial probabilities sum to {s}")));
                }
                Ok(())
            }
            Trial::AtomMixture { atom, c } => {
                let probs = target.probs().ok_or_else(|| invalid("atom mixture needs a finite target"))?;
                if *atom >= probs.len() {
                    return Err(invalid(format!("atom {atom} out of range")));
                }
                if probs.len() < 2 {
                    return Err(invalid("atom mixture needs at least two atoms"));
                }
                if !(*c > 0.0 && *c < 1.0) {
                    return Err(invalid(format!("atom mass c = {c} must lie in (0, 1)")));
                }
                Ok(())
            }
            Trial::SetMixture { c, mass, .. } => {
                if target.is_discrete() {
                    return Err(invalid("set mixture needs a continuous target"));
                }
                if !(*c > 0.0 && *c < 1.0) {
                    return Err(invalid(format!("set mass c = {c} must lie in (0, 1)")));
                }
                if !(*mass > 0.0 && *mass < 1.0) {
                    return Err(invalid(format!("Π(A) = {mass} must lie in (0, 1)")));
                }
                Ok(())
            }
        }
    }

    /// Unnormalized log trial density. For every kind except `Tempered` the
    /// value is normalized.
    pub fn log_q(&self, target: &Target, x: f64) -> f64 {
        match self {
            Trial::Tempered { beta } => beta * target.log_pi(x),
            Trial::ExplicitFinite { probs } => match atom_index(x, probs.len()) {
                Some(i) => probs[i].ln(),
                None => f64::NEG_INFINITY,
            },
            Trial::AtomMixture { atom, c } => {
                let probs = target.probs().expect("validated finite target");
                match atom_index(x, probs.len()) {
                    Some(i) if i == *atom => c.ln(),
                    Some(i) => (1.0 - c).ln() + probs[i].ln() - (1.0 - probs[*atom]).ln(),
                    None => f64::NEG_INFINITY,
                }
            }
            Trial::SetMixture { set, c, mass } => {
                let lp = target.log_pi(x) - target.log_normalizer();
                if set.contains(x) {
                    lp + c.ln() - mass.ln()
                } else {
                    lp + (1.0 - c).ln() - (1.0 - mass).ln()
                }
            }
        }
    }

    /// Normalized trial probabilities over the atoms of a finite target.
    pub fn finite_probs(&self, target: &Target) -> Result<Vec<f64>> {
        let n = target.probs().ok_or_else(|| invalid("finite_probs needs a finite target"))?.len();
        let logs: Vec<f64> = (0..n).map(|i| self.log_q(target, i as f64)).collect();
        let lz = log_sum_exp(logs.iter().copied());
        Ok(logs.iter().map(|l| (l - lz).exp()).collect())
    }

    /// Draws one exact sample from the trial where that is cheap: tempered
    /// Gaussians (a Gaussian with sd/√β) and any trial on a finite target.
    pub fn sample<R: Rng + ?Sized>(&self, target: &Target, rng: &mut R) -> Result<f64> {
        match (self, target.kind()) {
            (Trial::Tempered { beta }, TargetKind::Gaussian { mean, sd }) => {
                Ok(Normal::new(*mean, sd / beta.sqrt()).expect("validated").sample(rng))
            }
            (_, TargetKind::FiniteDiscrete { .. }) => {
                let q = self.finite_probs(target)?;
                Ok(sample_categorical(&q, rng) as f64)
            }
            _ => Err(Error::Unsupported(format!("exact sampling of {self:?} for {:?}", target.kind()))),
        }
    }
}

/// Whether the weight normalizer is known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    SelfNormalized,
    /// `log w = log_w_unnorm + log_zratio` is the exact density ratio `π/q`.
    Exact {
        log_zratio: f64,
    },
}

/// Importance weight `w = π/q`, in log space and up to a constant unless
/// the normalization is exact.
#[derive(Debug, Clone)]
pub struct WeightFunction {
    target: Target,
    trial: Trial,
    normalization: Normalization,
}

/// Builds the weight function of `trial` against `target`. Tempered trials
/// start out self-normalized; call [`WeightFunction::normalized`] to attach
/// the exact constant.
pub fn weight(trial: &Trial, target: &Target) -> Result<WeightFunction> {
    trial.validate(target)?;
    let normalization = match trial {
        Trial::Tempered { .. } => Normalization::SelfNormalized,
        // explicit trials are normalized, so only the target constant remains
        _ => Normalization::Exact { log_zratio: -target.log_normalizer() },
    };
    Ok(WeightFunction { target: target.clone(), trial: trial.clone(), normalization })
}

impl WeightFunction {
    pub fn target(&self) -> &Target {
        &self.target
    }

    pub fn trial(&self) -> &Trial {
        &self.trial
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// `log π_u(x) - log q_u(x)`; for tempered trials exactly `(1-β) log π_u(x)`.
    #[inline]
    pub fn log_w_unnorm(&self, x: f64) -> f64 {
        match self.trial {
            Trial::Tempered { beta } => (1.0 - beta) * self.target.log_pi(x),
            _ => {
                let lp = self.target.log_pi(x);
                let lq = self.trial.log_q(&self.target, x);
                if lq == f64::NEG_INFINITY && lp > f64::NEG_INFINITY {
                    f64::INFINITY
                } else {
                    lp - lq
                }
            }
        }
    }

    /// Attaches the exact normalizing constant.
    pub fn normalized(mut self) -> Result<Self> {
        if let Trial::Tempered { beta } = self.trial {
            let log_zratio = self.target.log_tempered_normalizer(beta)? - self.target.log_normalizer();
            self.normalization = Normalization::Exact { log_zratio };
        }
        Ok(self)
    }

    /// Exact `log w(x)`; requires a known normalizer.
    pub fn log_w(&self, x: f64) -> Result<f64> {
        match self.normalization {
            Normalization::Exact { log_zratio } => Ok(self.log_w_unnorm(x) + log_zratio),
            Normalization::SelfNormalized => Err(Error::NormalizerRequired),
        }
    }
}
