//! Minimax importance sampling and importance-tempered Metropolis-Hastings
//! on the real line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod functions;
pub mod harness;
pub mod quadrature;
pub mod rng;
pub mod sampler;
pub mod targets;

pub use error::{Error, Result};
pub use functions::{NamedFn, TestFn};
pub use targets::{weight, Interval, Normalization, Target, TargetKind, Trial, WeightFunction};
