use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::EstimateRecord;

/// Scaled mean-squared error with a Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceEstimate {
    pub value: f64,
    pub stderr: f64,
}

/// `(n/N) Σ (estimate - truth)²` over `N` replicates of sample size `n`.
///
/// The standard error is that of a sample mean of the `n (estimate - truth)²`
/// terms.
pub fn replicate_variance(records: &[EstimateRecord], n: usize, truth: f64) -> Result<VarianceEstimate> {
    if records.is_empty() {
        return Err(Error::Empty("replicate records"));
    }
    if let Some(r) = records.iter().find(|r| r.n != n) {
        return Err(Error::MixedSampleSize { expected: n, found: r.n });
    }
    let terms: Vec<f64> = records.iter().map(|r| n as f64 * (r.value - truth).powi(2)).collect();
    let k = terms.len() as f64;
    let value = terms.iter().sum::<f64>() / k;
    let stderr = if terms.len() > 1 {
        (terms.iter().map(|t| (t - value).powi(2)).sum::<f64>() / (k - 1.0)).sqrt() / k.sqrt()
    } else {
        f64::NAN
    };
    Ok(VarianceEstimate { value, stderr })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::EstimatorKind;
    use crate::rng::replicate_rng;
    use rand_distr::{Distribution, Normal};

    fn rec(value: f64, n: usize) -> EstimateRecord {
        EstimateRecord::new(value, n, EstimatorKind::SelfNormalized)
    }

    #[test]
    fn exact_estimates_have_zero_variance() {
        let r = vec![rec(1.5, 10); 5];
        assert_eq!(replicate_variance(&r, 10, 1.5).unwrap().value, 0.0);
    }

    #[test]
    fn alternating_errors() {
        let r: Vec<_> = (0..6).map(|i| rec(if i % 2 == 0 { 2.1 } else { 1.9 }, 50)).collect();
        assert!((replicate_variance(&r, 50, 2.0).unwrap().value - 50.0 * 0.01).abs() < 1e-12);
    }

    #[test]
    fn mixed_sizes_rejected() {
        let r = vec![rec(1.0, 10), rec(1.0, 11)];
        assert_eq!(replicate_variance(&r, 10, 1.0), Err(Error::MixedSampleSize { expected: 10, found: 11 }));
    }

    #[test]
    fn recovers_gaussian_scale() {
        let (n, s) = (400, 1.7);
        let d = Normal::new(3.0, s / (n as f64).sqrt()).unwrap();
        let mut rng = replicate_rng(4, 0);
        let r: Vec<_> = (0..2000).map(|_| rec(d.sample(&mut rng), n)).collect();
        let v = replicate_variance(&r, n, 3.0).unwrap();
        assert!((v.value - s * s).abs() < 3.0 * v.stderr, "{v:?}");
    }
}
