//! Convergence and theory-verification instruments.

mod drift;
mod ergodicity;
mod ks;
mod variance;

pub use drift::{
    generator_apply, pointwise_rate, polytail_lower_scenario, polytail_scenario, superexp_scenario, verify_drift,
    DriftCheckSpec, DriftDirection, DriftFn, DriftPoint, DriftRate, DriftReport, DriftScenario, DRIFT_SLACK,
};
pub use ergodicity::{ergodicity_window, hitting_time_moment, ErgodicityVerdict, HittingReport, HIT_BUDGET};
pub use ks::{geometric_grid, ks_curve, ks_statistic, merge_times, KsCurvePoint, MergeReport};
pub use variance::{replicate_variance, VarianceEstimate};
