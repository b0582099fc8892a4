//! Adaptive Gauss–Kronrod quadrature.
//!
//! Bounded intervals use globally adaptive bisection driven by the 21-point
//! Kronrod rule (with its embedded 10-point Gauss rule as the error
//! estimate). Integrals over the whole real line are computed on expanding
//! symmetric windows `[-L, L]`: `L` doubles until the newest pair of shells
//! contributes less than [`SHELL_REL_TOL`] of the running total. An integral
//! that is still growing once `L` exceeds [`DIVERGENCE_HALFWIDTH`] is
//! reported as divergent.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

pub const SHELL_REL_TOL: f64 = 1e-10;
pub const DIVERGENCE_HALFWIDTH: f64 = 1e6;

const MAX_INTERVALS: usize = 4000;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Tolerances for a single adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-14, rel: 1e-11 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_err: f64,
    pub intervals: usize,
}

/// One application of the 21-point Kronrod rule. Returns (estimate, error).
pub fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(10).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += wk * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (value, err)
}

#[derive(Debug)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive integration of `f` over `[a, b]`.
///
/// Fails if the integrand produces a non-finite value or the error target is
/// not met within the interval budget.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: Tolerance) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature(format!("non-finite bounds [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadResult { value: 0.0, abs_err: 0.0, intervals: 0 });
    }
    if a > b {
        let r = integrate(f, b, a, tol)?;
        return Ok(QuadResult { value: -r.value, ..r });
    }
    let (v, e) = gk21(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value: v, err: e });
    let mut total = v;
    let mut total_err = e;
    loop {
        if !total.is_finite() {
            return Err(Error::Quadrature(format!("non-finite integrand on [{a}, {b}]")));
        }
        if total_err <= tol.abs.max(tol.rel * total.abs()) {
            break;
        }
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature(format!(
                "error {total_err:e} above target after {MAX_INTERVALS} intervals on [{a}, {b}]"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval cannot be split further in floating point
            heap.push(worst);
            if total_err <= 1e3 * tol.abs.max(tol.rel * total.abs()) {
                break;
            }
            return Err(Error::Quadrature(format!("interval underflow near {mid}")));
        }
        let (v1, e1) = gk21(f, worst.a, mid);
        let (v2, e2) = gk21(f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Piece { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, err: e2 });
    }
    // re-sum to shed accumulated cancellation in the running totals
    let (value, abs_err) = heap.iter().fold((0.0, 0.0), |(s, e), p| (s + p.value, e + p.err));
    Ok(QuadResult { value, abs_err, intervals: heap.len() })
}

/// Integrates over `[a, b]`, splitting at every breakpoint that falls strictly
/// inside the interval (kinks, jumps, integrable singularities).
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<QuadResult> {
    let mut pts: Vec<f64> = std::iter::once(a)
        .chain(breaks.iter().copied().filter(|&p| p > a && p < b))
        .chain(std::iter::once(b))
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut out = QuadResult { value: 0.0, abs_err: 0.0, intervals: 0 };
    for w in pts.windows(2) {
        let r = integrate(f, w[0], w[1], tol)?;
        out.value += r.value;
        out.abs_err += r.abs_err;
        out.intervals += r.intervals;
    }
    Ok(out)
}

/// Outcome of an integral over the whole real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineIntegral {
    Converged { value: f64, halfwidth: f64 },
    Divergent,
}

impl LineIntegral {
    /// The value, with divergence mapped to `+inf`.
    pub fn value_or_inf(self) -> f64 {
        match self {
            LineIntegral::Converged { value, .. } => value,
            LineIntegral::Divergent => f64::INFINITY,
        }
    }
}

/// Integrates `f` over the real line on expanding windows.
///
/// `scale` sets the initial half-width (it is raised to cover every
/// breakpoint). Intended for integrands whose tails are eventually monotone
/// in `|x|`, which is all this crate needs.
pub fn integrate_line<F: Fn(f64) -> f64>(f: &F, breaks: &[f64], scale: f64, tol: Tolerance) -> Result<LineIntegral> {
    let max_break = breaks.iter().fold(0.0f64, |m, b| m.max(b.abs()));
    let mut half = scale.max(1.0).max(2.0 * max_break);
    let mut total = integrate_with_breaks(f, -half, half, breaks, tol)?.value;
    loop {
        let next = 2.0 * half;
        let upper = integrate_with_breaks(f, half, next, breaks, tol)?.value;
        let lower = integrate_with_breaks(f, -next, -half, breaks, tol)?.value;
        let shell = upper + lower;
        total += shell;
        half = next;
        if !total.is_finite() {
            return Ok(LineIntegral::Divergent);
        }
        let small = shell.abs() <= SHELL_REL_TOL * total.abs() || (shell == 0.0 && total == 0.0);
        if small {
            return Ok(LineIntegral::Converged { value: total, halfwidth: half });
        }
        if half > DIVERGENCE_HALFWIDTH {
            return Ok(LineIntegral::Divergent);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let r = integrate(&|x: f64| x.powi(5) - 3.0 * x * x + 1.0, -1.0, 2.0, Tolerance::default()).unwrap();
        // antiderivative x^6/6 - x^3 + x
        let exact = (64.0 / 6.0 - 8.0 + 2.0) - (1.0 / 6.0 + 1.0 - 1.0);
        assert!((r.value - exact).abs() < 1e-13);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let t = Tolerance::default();
        let a = integrate(&f64::exp, 0.0, 1.0, t).unwrap().value;
        let b = integrate(&f64::exp, 1.0, 0.0, t).unwrap().value;
        assert_eq!(a, -b);
        assert!((a - (1f64.exp() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn log_singularity_at_endpoint() {
        // int_0^1 ln(x)^2 dx = 2
        let r = integrate(&|x: f64| x.ln().powi(2), 0.0, 1.0, Tolerance::default()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn jump_handled_by_breakpoint() {
        let step = |x: f64| if x.abs() <= 2.0 { 1.0 } else { 0.0 };
        let r = integrate_with_breaks(&step, -5.0, 5.0, &[-2.0, 2.0], Tolerance::default()).unwrap();
        assert!((r.value - 4.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_over_line() {
        let g = |x: f64| (-0.5 * x * x).exp();
        let r = integrate_line(&g, &[], 1.0, Tolerance::default()).unwrap();
        let v = r.value_or_inf();
        assert!((v - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-11, "{v}");
    }

    #[test]
    fn polynomial_tail_converges() {
        // int (1+|x|)^-5 = 2/4
        let g = |x: f64| (1.0 + x.abs()).powi(-5);
        let v = integrate_line(&g, &[0.0], 1.0, Tolerance::default()).unwrap().value_or_inf();
        assert!((v - 0.5).abs() < 1e-9, "{v}");
    }

    #[test]
    fn cauchy_like_tail_is_divergent() {
        let g = |x: f64| 1.0 / (1.0 + x.abs());
        assert_eq!(integrate_line(&g, &[0.0], 1.0, Tolerance::default()).unwrap(), LineIntegral::Divergent);
    }

    #[test]
    fn nan_integrand_is_an_error() {
        assert!(integrate(&|_x: f64| f64::NAN, 0.0, 1.0, Tolerance::default()).is_err());
    }
}
