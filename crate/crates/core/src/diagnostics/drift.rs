//! Numerical evaluation of the jump-process generator on drift functions.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::functions::TestFn;
use crate::quadrature::{integrate_with_breaks, Tolerance};
use crate::sampler::{Proposal, RwmhKernel};
use crate::targets::Target;

/// Slack absorbing quadrature error in reported margins.
pub const DRIFT_SLACK: f64 = 1e-8;

const INNER_TOL: Tolerance = Tolerance::new(1e-10, 1e-10);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DriftFn {
    /// `2 - exp(-|x|/xi)`.
    Exponential {
        xi: f64,
    },
    /// `1 + xi^(-nu) - max(|x|, xi)^(-nu)`.
    Polynomial {
        xi: f64,
        nu: f64,
    },
    /// `log(1 + |x|)`.
    Log,
    Constant(f64),
}

impl DriftFn {
    /// Supremum of `V`, when bounded.
    pub fn max(&self) -> Option<f64> {
        match *self {
            DriftFn::Exponential { .. } => Some(2.0),
            DriftFn::Polynomial { xi, nu } => Some(1.0 + xi.powf(-nu)),
            DriftFn::Log => None,
            DriftFn::Constant(c) => Some(c),
        }
    }

    /// `V''(x)` away from the kinks.
    pub fn second_derivative(&self, x: f64) -> f64 {
        let a = x.abs();
        match *self {
            DriftFn::Exponential { xi } => -(-a / xi).exp() / (xi * xi),
            DriftFn::Polynomial { xi, nu } => {
                if a <= xi {
                    0.0
                } else {
                    -nu * (nu + 1.0) * a.powf(-nu - 2.0)
                }
            }
            DriftFn::Log => -1.0 / ((1.0 + a) * (1.0 + a)),
            DriftFn::Constant(_) => 0.0,
        }
    }

    /// `inf |V''|` over `[x - xi, x + xi]` for `x >= 2 xi`, in closed form.
    pub fn phi(&self, x: f64) -> Result<f64> {
        match *self {
            DriftFn::Exponential { xi } => Ok((-(x + xi) / xi).exp() / (xi * xi)),
            DriftFn::Polynomial { xi, nu } => Ok(nu * (nu + 1.0) / (x + xi).powf(2.0 + nu)),
            other => Err(Error::Unsupported(format!("no curvature bound for {other:?}"))),
        }
    }
}

impl TestFn for DriftFn {
    fn eval(&self, x: f64) -> f64 {
        let a = x.abs();
        match *self {
            DriftFn::Exponential { xi } => 2.0 - (-a / xi).exp(),
            DriftFn::Polynomial { xi, nu } => 1.0 + xi.powf(-nu) - a.max(xi).powf(-nu),
            DriftFn::Log => a.ln_1p(),
            DriftFn::Constant(c) => c,
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match *self {
            DriftFn::Polynomial { xi, .. } => vec![-xi, xi],
            DriftFn::Constant(_) => Vec::new(),
            _ => vec![0.0],
        }
    }
}

/// Log of `Z_β π(x)^(1-β)` with `π` normalized.
fn log_generator_scale(kernel: &RwmhKernel, x: f64) -> Result<f64> {
    Ok(kernel.log_time_scale()? + kernel.log_hold_mean(x))
}

/// `(𝒜V)(x)`: the expected increment of `V` over one Metropolis-Hastings
/// move from `x`, divided by the normalized mean holding time at `x`.
pub fn generator_apply<V: TestFn + ?Sized>(kernel: &RwmhKernel, v: &V, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite(x));
    }
    let target = kernel.target();
    let beta = kernel.beta();
    let proposal = kernel.proposal();
    let (lx, vx) = (target.log_pi(x), v.eval(x));
    let integrand = |y: f64| {
        let dv = v.eval(y) - vx;
        if dv == 0.0 {
            return 0.0;
        }
        let acc = (beta * (target.log_pi(y) - lx)).exp().min(1.0);
        dv * acc * proposal.density(y - x)
    };
    let reach = proposal.reach();
    let mut breaks = vec![x, -x];
    breaks.extend(target.breakpoints());
    breaks.extend(v.breakpoints());
    let integral = integrate_with_breaks(&integrand, x - reach, x + reach, &breaks, INNER_TOL)?.value;
    Ok(integral / log_generator_scale(kernel, x)?.exp())
}

/// `ᾱ(x) = φ(x) ξ³ κ(ξ) / (3 V_max Z_β π(x)^(1-β))` for a truncated kernel.
pub fn pointwise_rate(kernel: &RwmhKernel, v: &DriftFn, x: f64) -> Result<f64> {
    let xi = match kernel.proposal() {
        Proposal::Truncated { xi } => xi,
        Proposal::Gaussian { .. } => {
            return Err(Error::Unsupported("the rate bound needs a truncated proposal".into()))
        }
    };
    let v_max = v.max().ok_or_else(|| Error::Unsupported("the rate bound needs a bounded V".into()))?;
    let kappa_xi = kernel.proposal().density(xi);
    let num = v.phi(x)? * xi.powi(3) * kappa_xi / (3.0 * v_max);
    Ok(num / log_generator_scale(kernel, x)?.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DriftDirection {
    /// `(𝒜V)(x) <= -α(x) V(x)`.
    UpperBound,
    /// `(𝒜V)(x) >= -α`.
    LowerBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DriftRate {
    Constant(f64),
    /// The pointwise rate of [`pointwise_rate`].
    Pointwise,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftCheckSpec {
    pub v: DriftFn,
    pub d: f64,
    pub alpha: DriftRate,
    pub direction: DriftDirection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftPoint {
    pub x: f64,
    pub generator: f64,
    pub alpha: f64,
    /// Non-negative when the claimed inequality holds.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftReport {
    pub points: Vec<DriftPoint>,
    pub min_margin: f64,
    /// Every margin is at least `-DRIFT_SLACK`.
    pub holds: bool,
}

/// Evaluates the claimed drift inequality at every grid point.
pub fn verify_drift(spec: &DriftCheckSpec, kernel: &RwmhKernel, x_grid: &[f64]) -> Result<DriftReport> {
    if x_grid.is_empty() {
        return Err(Error::Empty("drift grid"));
    }
    if let Some(x) = x_grid.iter().find(|x| x.abs() < spec.d) {
        return Err(invalid(format!("grid point {x} lies inside (-D, D) with D = {}", spec.d)));
    }
    let mut points = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        let generator = generator_apply(kernel, &spec.v, x)?;
        let alpha = match spec.alpha {
            DriftRate::Constant(a) => a,
            DriftRate::Pointwise => pointwise_rate(kernel, &spec.v, x.abs())?,
        };
        let margin = match spec.direction {
            DriftDirection::UpperBound => -alpha * spec.v.eval(x) - generator,
            DriftDirection::LowerBound => generator + alpha,
        };
        points.push(DriftPoint { x, generator, alpha, margin });
    }
    let min_margin = points.iter().map(|p| p.margin).fold(f64::INFINITY, f64::min);
    Ok(DriftReport { points, min_margin, holds: min_margin >= -DRIFT_SLACK })
}

/// A kernel, a drift claim and the grid it is checked on.
#[derive(Debug, Clone)]
pub struct DriftScenario {
    pub name: &'static str,
    pub kernel: RwmhKernel,
    pub spec: DriftCheckSpec,
    pub grid: Vec<f64>,
}

impl DriftScenario {
    pub fn verify(&self) -> Result<DriftReport> {
        verify_drift(&self.spec, &self.kernel, &self.grid)
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Super-exponential target `exp(-a|x|^ω)` with the exponential drift
/// function and the constant rate `(β^(1/ω)/49) exp[a(1-β)D^ω - D/ξ]`,
/// on 20 points of `[D, 5D]`.
pub fn superexp_scenario(a: f64, omega: f64, beta: f64, xi: f64) -> Result<DriftScenario> {
    if !(omega > 1.0) || !(beta > 0.0 && beta < 1.0) {
        return Err(invalid(format!("need omega > 1 and 0 < beta < 1, got omega = {omega}, beta = {beta}")));
    }
    let kernel = RwmhKernel::new(Target::super_exp(a, omega)?, beta, Proposal::Truncated { xi })?;
    let d = xi.max((a * xi * omega * (1.0 - beta)).powf(-1.0 / (omega - 1.0)));
    let alpha = beta.powf(1.0 / omega) / 49.0 * (a * (1.0 - beta) * d.powf(omega) - d / xi).exp();
    Ok(DriftScenario {
        name: "superexp_exponential_v",
        kernel,
        spec: DriftCheckSpec {
            v: DriftFn::Exponential { xi },
            d,
            alpha: DriftRate::Constant(alpha),
            direction: DriftDirection::UpperBound,
        },
        grid: linspace(d, 5.0 * d, 20),
    })
}

/// Polynomial-tail target inside the ergodic window with the polynomial
/// drift function (`ν = γ(1-β) - 2`) and the pointwise rate bound, on 20
/// points of `[D, 10D]`.
pub fn polytail_scenario(gamma: f64, beta: f64, xi: f64, d: f64) -> Result<DriftScenario> {
    if !(gamma > 3.0 && beta > 1.0 / gamma && beta < (gamma - 2.0) / gamma) {
        return Err(invalid(format!("beta = {beta} is outside (1/gamma, (gamma-2)/gamma) for gamma = {gamma}")));
    }
    if d < 2.0 * xi {
        return Err(invalid(format!("D = {d} must be at least 2 xi = {}", 2.0 * xi)));
    }
    let kernel = RwmhKernel::new(Target::poly_tail(gamma)?, beta, Proposal::Truncated { xi })?;
    let nu = gamma * (1.0 - beta) - 2.0;
    Ok(DriftScenario {
        name: "polytail_polynomial_v",
        kernel,
        spec: DriftCheckSpec {
            v: DriftFn::Polynomial { xi, nu },
            d,
            alpha: DriftRate::Pointwise,
            direction: DriftDirection::UpperBound,
        },
        grid: linspace(d, 10.0 * d, 20),
    })
}

/// Polynomial-tail target outside the ergodic window, `V = log(1+|x|)` and the
/// lower bound `-α` with
/// `α = (γβ-1)(γβ+2)ξ² / (5(γ-1)(1+D)^(2-γ(1-β)))`, on 20 points of `[D, 10D]`.
pub fn polytail_lower_scenario(gamma: f64, beta: f64, xi: f64, d: f64) -> Result<DriftScenario> {
    if !(gamma > 1.0 && beta >= (gamma - 2.0) / gamma && beta > 1.0 / gamma && beta <= 1.0) {
        return Err(invalid(format!("need beta >= (gamma-2)/gamma, got gamma = {gamma}, beta = {beta}")));
    }
    if d < 2.0 * xi {
        return Err(invalid(format!("D = {d} must be at least 2 xi = {}", 2.0 * xi)));
    }
    let kernel = RwmhKernel::new(Target::poly_tail(gamma)?, beta, Proposal::Truncated { xi })?;
    let gb = gamma * beta;
    let alpha = (gb - 1.0) * (gb + 2.0) * xi * xi / (5.0 * (gamma - 1.0) * (1.0 + d).powf(2.0 - gamma * (1.0 - beta)));
    Ok(DriftScenario {
        name: "polytail_log_v_lower",
        kernel,
        spec: DriftCheckSpec {
            v: DriftFn::Log,
            d,
            alpha: DriftRate::Constant(alpha),
            direction: DriftDirection::LowerBound,
        },
        grid: linspace(d, 10.0 * d, 20),
    })
}
