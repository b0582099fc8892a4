//! Worst-case risk over `L²(Π)` and minimax trial constructions.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::functions::TestFn;
use crate::targets::{check_probs, Interval, Target, Trial, PROB_SUM_TOL};

/// Relative gap below which the two largest weights count as tied.
pub const TIE_REL_TOL: f64 = 1e-10;

const ROOT_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RiskCase {
    InfiniteWeight,
    TiedTop,
    LambdaRoot,
    NoAtomEssSup,
    LargeAtomClosedForm,
}

/// Worst-case ratio of the self-normalized asymptotic variance to the target
/// variance, with the maximizing test function when it exists.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskReport {
    pub risk: f64,
    pub case: RiskCase,
    pub lambda: Option<f64>,
    /// Values of a maximizing `f` on each atom, with `Π(f) = 0`, `Π(f²) = 1`.
    pub witness: Option<Vec<f64>>,
}

fn check_trial_probs(q: &[f64], n: usize) -> Result<()> {
    if q.len() != n {
        return Err(invalid(format!("trial has {} atoms, target has {n}", q.len())));
    }
    if q.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(invalid("trial probabilities must be finite and >= 0"));
    }
    let s: f64 = q.iter().sum();
    if (s - 1.0).abs() > PROB_SUM_TOL {
        return Err(invalid(format!("trial probabilities sum to {s}")));
    }
    Ok(())
}

/// Worst-case risk `sup Π(f² w)` over `Π(f) = 0`, `Π(f²) = 1` for a finite
/// target `pi` and trial `q`.
pub fn worst_case_risk_finite(pi: &[f64], q: &[f64]) -> Result<RiskReport> {
    check_probs(pi, "target")?;
    if pi.len() < 2 {
        return Err(invalid("need at least two atoms"));
    }
    check_trial_probs(q, pi.len())?;
    let w: Vec<f64> = pi.iter().zip(q).map(|(p, q)| if *q == 0.0 { f64::INFINITY } else { p / q }).collect();

    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| w[b].total_cmp(&w[a]));
    let (i1, i2) = (order[0], order[1]);
    let (w1, w2) = (w[i1], w[i2]);

    if w1 == f64::INFINITY {
        return Ok(RiskReport { risk: f64::INFINITY, case: RiskCase::InfiniteWeight, lambda: None, witness: None });
    }
    if w1 - w2 <= TIE_REL_TOL * w1 {
        // any mean-zero f carried by the two tied atoms attains w1
        let (p1, p2) = (pi[i1], pi[i2]);
        let mut f = vec![0.0; pi.len()];
        f[i1] = (p2 / (p1 * (p1 + p2))).sqrt();
        f[i2] = -(p1 / (p2 * (p1 + p2))).sqrt();
        return Ok(RiskReport { risk: w1, case: RiskCase::TiedTop, lambda: None, witness: Some(f) });
    }

    let g = |lam: f64| pi.iter().zip(&w).map(|(p, wi)| p / (wi - lam)).sum::<f64>();
    let eps = 1e-12 * (w1 - w2);
    let (mut lo, mut hi) = (w2 + eps, w1 - eps);
    // g increases from -inf to +inf across the interval
    if g(lo) >= 0.0 {
        hi = lo;
    } else if g(hi) <= 0.0 {
        lo = hi;
    }
    while hi - lo > ROOT_REL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);

    let raw: Vec<f64> = w.iter().map(|wi| 1.0 / (wi - lambda)).collect();
    let mean: f64 = pi.iter().zip(&raw).map(|(p, r)| p * r).sum();
    let centered: Vec<f64> = raw.iter().map(|r| r - mean).collect();
    let norm = pi.iter().zip(&centered).map(|(p, c)| p * c * c).sum::<f64>().sqrt();
    let witness = centered.iter().map(|c| c / norm).collect();

    Ok(RiskReport { risk: lambda, case: RiskCase::LambdaRoot, lambda: Some(lambda), witness: Some(witness) })
}

/// Minimax trial for a finite target whose atom `atom` carries mass `p > 1/2`:
/// half the mass on the atom, the rest proportional to the target.
pub fn minimax_trial_atom(target: &Target, atom: usize) -> Result<(Trial, RiskReport)> {
    let probs = target.probs().ok_or_else(|| invalid("minimax_trial_atom needs a finite target"))?;
    let p = *probs.get(atom).ok_or_else(|| invalid(format!("atom {atom} out of range")))?;
    if p <= 0.5 {
        return Err(invalid(format!(
            "atom mass p = {p} <= 1/2: no atom exceeds one half, so the target itself is minimax optimal"
        )));
    }
    let trial = Trial::AtomMixture { atom, c: 0.5 };
    trial.validate(target)?;
    let report =
        RiskReport { risk: 4.0 * p * (1.0 - p), case: RiskCase::LargeAtomClosedForm, lambda: None, witness: None };
    Ok((trial, report))
}

/// Risk `p(1-p)/(c(1-c))` of the trial putting mass `c` on an atom of mass `p`.
pub fn trial_family_risk(p: f64, c: f64) -> Result<f64> {
    if !(p > 0.5 && p < 1.0) {
        return Err(invalid(format!("atom mass p = {p} must lie in (1/2, 1)")));
    }
    if !(c > 0.0 && c < 1.0) {
        return Err(invalid(format!("trial mass c = {c} must lie in (0, 1)")));
    }
    Ok(p * (1.0 - p) / (c * (1.0 - c)))
}

/// Upper bound `4p(1-p) + (p - 1/2) p² r²` on the risk of the half-mass set
/// trial over functions whose oscillation on the set is at most `r`.
pub fn set_trial_bound(p: f64, r: f64) -> f64 {
    4.0 * p * (1.0 - p) + (p - 0.5) * p * p * r * r
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetTrialReport {
    pub trial: Trial,
    /// `Π(A)`.
    pub mass: f64,
    /// Whether `1 - Π(A) < c < Π(A)`.
    pub in_efficiency_window: bool,
    /// Risk over all of `L²(Π)`, i.e. the essential supremum of the weight.
    pub l2_risk: RiskReport,
    /// Bound over the oscillation class, when `c = 1/2`, `Π(A) > 1/2` and `r` is given.
    pub bound: Option<f64>,
}

/// Trial with mass `c` on `A` and `1 - c` off it, each part proportional to
/// the target.
pub fn concentrated_set_trial(target: &Target, set: Interval, c: f64, r: Option<f64>) -> Result<SetTrialReport> {
    if target.is_discrete() {
        return Err(invalid("concentrated_set_trial needs a continuous target"));
    }
    let mass = target.cdf(set.hi)? - target.cdf(set.lo)?;
    let trial = Trial::SetMixture { set, c, mass };
    trial.validate(target)?;
    if let Some(r) = r {
        if !(r.is_finite() && r >= 0.0) {
            return Err(invalid(format!("oscillation bound r = {r} must be finite and >= 0")));
        }
    }
    let ess_sup = (mass / c).max((1.0 - mass) / (1.0 - c));
    let l2_risk = RiskReport { risk: ess_sup, case: RiskCase::NoAtomEssSup, lambda: None, witness: None };
    let bound = match r {
        Some(r) if c == 0.5 && mass > 0.5 => Some(set_trial_bound(mass, r)),
        _ => None,
    };
    Ok(SetTrialReport { trial, mass, in_efficiency_window: 1.0 - mass < c && c < mass, l2_risk, bound })
}

/// A set of atoms or an interval.
#[derive(Debug, Clone, PartialEq)]
pub enum EventSet {
    Atoms(Vec<usize>),
    Interval(Interval),
}

impl EventSet {
    pub fn contains(&self, x: f64) -> bool {
        match self {
            EventSet::Atoms(a) => x >= 0.0 && x.fract() == 0.0 && a.contains(&(x as usize)),
            EventSet::Interval(i) => i.contains(x),
        }
    }

    /// `Π(E)`.
    pub fn mass(&self, target: &Target) -> Result<f64> {
        match (self, target.probs()) {
            (EventSet::Atoms(a), Some(probs)) => {
                if let Some(i) = a.iter().find(|&&i| i >= probs.len()) {
                    return Err(invalid(format!("atom {i} out of range")));
                }
                Ok(probs.iter().enumerate().filter(|(i, _)| a.contains(i)).map(|(_, p)| p).sum())
            }
            (EventSet::Interval(_), Some(probs)) => {
                Ok(probs.iter().enumerate().filter(|(i, _)| self.contains(*i as f64)).map(|(_, p)| p).sum())
            }
            (EventSet::Interval(i), None) => Ok(target.cdf(i.hi)? - target.cdf(i.lo)?),
            (EventSet::Atoms(_), None) => Err(invalid("atom sets need a finite target")),
        }
    }
}

/// `√((1-p)/p)` on `E` and `-√(p/(1-p))` off it.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPointFn {
    pub set: EventSet,
    pub on: f64,
    pub off: f64,
}

impl TestFn for TwoPointFn {
    fn eval(&self, x: f64) -> f64 {
        if self.set.contains(x) {
            self.on
        } else {
            self.off
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match &self.set {
            EventSet::Interval(i) => vec![i.lo, i.hi],
            EventSet::Atoms(_) => Vec::new(),
        }
    }
}

/// Mean-zero, unit-variance two-level function for an event of mass `p`.
pub fn two_point_test_function(set: EventSet, p: f64) -> Result<TwoPointFn> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("event mass p = {p} must lie in (0, 1)")));
    }
    Ok(TwoPointFn { set, on: ((1.0 - p) / p).sqrt(), off: -(p / (1.0 - p)).sqrt() })
}
