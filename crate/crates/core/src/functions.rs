//! Test functions `f` whose expectations are estimated.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance};
use crate::targets::Target;

/// A real test function, with optional points of non-smoothness that
/// quadrature should split at.
pub trait TestFn: Sync {
    fn eval(&self, x: f64) -> f64;

    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl<F: Fn(f64) -> f64 + Sync> TestFn for F {
    fn eval(&self, x: f64) -> f64 {
        self(x)
    }
}

/// Test functions addressable by name from configs and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum NamedFn {
    Indicator { a: f64, b: f64 },
    Power(i32),
    LogAbs,
    SqrtAbs,
    Identity,
}

impl NamedFn {
    /// The five functions of the Gaussian variance table.
    pub fn table1_set() -> Vec<NamedFn> {
        vec![
            NamedFn::Indicator { a: -2.0, b: 2.0 },
            NamedFn::Power(2),
            NamedFn::Power(3),
            NamedFn::Power(4),
            NamedFn::LogAbs,
        ]
    }

    /// The functions used for the Student-t variance curves.
    pub fn t4_set() -> Vec<NamedFn> {
        vec![
            NamedFn::Indicator { a: -2.0, b: 2.0 },
            NamedFn::Indicator { a: -4.0, b: 4.0 },
            NamedFn::SqrtAbs,
            NamedFn::Identity,
        ]
    }
}

impl TestFn for NamedFn {
    #[inline]
    fn eval(&self, x: f64) -> f64 {
        match *self {
            NamedFn::Indicator { a, b } => {
                if a <= x && x <= b {
                    1.0
                } else {
                    0.0
                }
            }
            NamedFn::Power(k) => x.powi(k),
            NamedFn::LogAbs => x.abs().ln(),
            NamedFn::SqrtAbs => x.abs().sqrt(),
            NamedFn::Identity => x,
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match *self {
            NamedFn::Indicator { a, b } => vec![a, b],
            NamedFn::LogAbs | NamedFn::SqrtAbs => vec![0.0],
            _ => Vec::new(),
        }
    }
}

impl fmt::Display for NamedFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NamedFn::Indicator { a, b } => write!(f, "indicator({a},{b})"),
            NamedFn::Power(k) => write!(f, "power({k})"),
            NamedFn::LogAbs => f.write_str("log_abs"),
            NamedFn::SqrtAbs => f.write_str("sqrt_abs"),
            NamedFn::Identity => f.write_str("identity"),
        }
    }
}

/// Splits `name(a,b,...)` into the name and its trimmed arguments.
pub(crate) fn split_call(s: &str) -> Result<(&str, Vec<&str>)> {
    let s = s.trim();
    match s.find('(') {
        None => Ok((s, Vec::new())),
        Some(open) => {
            let inner =
                s[open + 1..].strip_suffix(')').ok_or_else(|| Error::Config(format!("missing ')' in `{s}`")))?;
            let args = if inner.trim().is_empty() { Vec::new() } else { inner.split(',').map(str::trim).collect() };
            Ok((s[..open].trim(), args))
        }
    }
}

pub(crate) fn parse_num<T: FromStr>(s: &str, ctx: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Config(format!("`{s}` is not a valid number in `{ctx}`")))
}

impl FromStr for NamedFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = split_call(s)?;
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::Config(format!("`{name}` takes {n} argument(s), got {}", args.len())))
            }
        };
        match name {
            "indicator" => {
                arity(2)?;
                let (a, b) = (parse_num(args[0], s)?, parse_num(args[1], s)?);
                if !(a <= b) {
                    return Err(Error::Config(format!("indicator bounds out of order in `{s}`")));
                }
                Ok(NamedFn::Indicator { a, b })
            }
            "power" => {
                arity(1)?;
                Ok(NamedFn::Power(parse_num(args[0], s)?))
            }
            "log_abs" => arity(0).map(|_| NamedFn::LogAbs),
            "sqrt_abs" => arity(0).map(|_| NamedFn::SqrtAbs),
            "identity" => arity(0).map(|_| NamedFn::Identity),
            other => Err(Error::Config(format!(
                "unknown function `{other}` (expected indicator(a,b), power(k), log_abs, sqrt_abs or identity)"
            ))),
        }
    }
}

impl TryFrom<String> for NamedFn {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<NamedFn> for String {
    fn from(f: NamedFn) -> String {
        f.to_string()
    }
}

/// `∫ g dΠ` for a continuous target, or the atom sum for a finite one.
/// Divergence is reported as `+inf`.
pub fn integrate_target<G: Fn(f64) -> f64>(target: &Target, g: G, extra_breaks: &[f64]) -> Result<f64> {
    if let Some(probs) = target.probs() {
        return Ok(probs.iter().enumerate().map(|(i, p)| p * g(i as f64)).sum());
    }
    let log_z = target.log_normalizer();
    let h = |x: f64| {
        let d = (target.log_pi(x) - log_z).exp();
        if d == 0.0 {
            0.0
        } else {
            d * g(x)
        }
    };
    let mut breaks = target.breakpoints();
    breaks.extend_from_slice(extra_breaks);
    let tol = Tolerance::new(1e-13, 1e-11);
    Ok(quadrature::integrate_line(&h, &breaks, target.scale(), tol)?.value_or_inf())
}

/// `Π(f)`.
pub fn expectation<F: TestFn + ?Sized>(target: &Target, f: &F) -> Result<f64> {
    integrate_target(target, |x| f.eval(x), &f.breakpoints())
}
