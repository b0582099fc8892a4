use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::rng::run_replicates;
use crate::sampler::{states_at_times, RwmhKernel};

/// One-sample Kolmogorov-Smirnov statistic `sup |F_n - F|` against a
/// continuous CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    ks_with_left_limits(samples, &cdf, &cdf)
}

/// The same statistic when `F` may jump: `left(x)` is `F(x-)`.
pub(crate) fn ks_with_left_limits<F: Fn(f64) -> f64, L: Fn(f64) -> f64>(
    samples: &[f64],
    cdf: F,
    left: L,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("samples"));
    }
    if let Some(x) = samples.iter().find(|x| x.is_nan()) {
        return Err(Error::NonFinite(*x));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        // F_n jumps from i/n to (i+1)/n at the (i+1)-th order statistic
        d = d.max((i + 1) as f64 / n - cdf(x)).max(left(x) - i as f64 / n);
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsCurvePoint {
    pub init: f64,
    pub t: f64,
    pub ks: f64,
}

/// KS distance between the law of `Y_t` (estimated from `n_rep` paths) and
/// the target, for every start in `inits` and time in `time_grid`.
///
/// Replicate `i` uses the same random stream for every start.
pub fn ks_curve(
    kernel: &RwmhKernel,
    inits: &[f64],
    n_rep: usize,
    time_grid: &[f64],
    master_seed: u64,
) -> Result<Vec<KsCurvePoint>> {
    if n_rep < 100 {
        return Err(invalid(format!("ks_curve needs at least 100 replicates, got {n_rep}")));
    }
    if time_grid.is_empty() || time_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(invalid("time grid must be non-empty, finite and non-negative"));
    }
    if time_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("time grid must be strictly increasing"));
    }
    let target = kernel.target();
    let mut out = Vec::with_capacity(inits.len() * time_grid.len());
    for &x0 in inits {
        let paths = run_replicates(master_seed, n_rep, |_, rng| states_at_times(kernel, x0, time_grid, rng));
        let ks: Vec<Result<f64>> = (0..time_grid.len())
            .into_par_iter()
            .map(|j| {
                let col: Vec<f64> = paths.iter().map(|p| p[j]).collect();
                let mut cdfs = Vec::with_capacity(col.len());
                for &x in &col {
                    cdfs.push(target.cdf(x)?);
                }
                // pair each sample with its CDF value so quadrature runs once per sample
                let mut idx: Vec<usize> = (0..col.len()).collect();
                idx.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
                let n = col.len() as f64;
                Ok(idx
                    .iter()
                    .enumerate()
                    .fold(0.0f64, |d, (i, &k)| d.max((i + 1) as f64 / n - cdfs[k]).max(cdfs[k] - i as f64 / n)))
            })
            .collect();
        for (j, v) in ks.into_iter().enumerate() {
            out.push(KsCurvePoint { init: x0, t: time_grid[j], ks: v? });
        }
    }
    Ok(out)
}

/// When KS curves from different starts become indistinguishable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MergeReport {
    /// `2/√n_rep`.
    pub threshold: f64,
    /// The start of smallest magnitude, used as the reference curve.
    pub reference_init: f64,
    /// For each start, the first grid time from which its gap to the
    /// reference stays below the threshold; `None` if that never happens.
    pub per_init: Vec<(f64, Option<f64>)>,
    /// First grid time from which every pairwise gap stays below the threshold.
    pub all_merged: Option<f64>,
}

fn first_stable_time(times: &[f64], ok: impl Fn(usize) -> bool) -> Option<f64> {
    let mut first = None;
    for j in (0..times.len()).rev() {
        if ok(j) {
            first = Some(times[j]);
        } else {
            break;
        }
    }
    first
}

/// Merge times of the curves produced by [`ks_curve`].
pub fn merge_times(points: &[KsCurvePoint], n_rep: usize) -> Result<MergeReport> {
    let mut inits: Vec<f64> = Vec::new();
    for p in points {
        if !inits.contains(&p.init) {
            inits.push(p.init);
        }
    }
    if inits.is_empty() {
        return Err(Error::Empty("KS curves"));
    }
    let curve = |x0: f64| points.iter().filter(|p| p.init == x0).collect::<Vec<_>>();
    let times: Vec<f64> = curve(inits[0]).iter().map(|p| p.t).collect();
    let curves: Vec<Vec<f64>> = inits
        .iter()
        .map(|&x0| {
            let c = curve(x0);
            if c.iter().map(|p| p.t).ne(times.iter().copied()) {
                return Err(invalid("KS curves are on different time grids"));
            }
            Ok(c.iter().map(|p| p.ks).collect())
        })
        .collect::<Result<_>>()?;
    let threshold = 2.0 / (n_rep as f64).sqrt();
    let r = (0..inits.len()).min_by(|&a, &b| inits[a].abs().total_cmp(&inits[b].abs())).unwrap();
    let per_init = inits
        .iter()
        .enumerate()
        .map(|(i, &x0)| (x0, first_stable_time(&times, |j| (curves[i][j] - curves[r][j]).abs() < threshold)))
        .collect();
    let all_merged = first_stable_time(&times, |j| {
        let col = curves.iter().map(|c| c[j]);
        let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
        hi - lo < threshold
    });
    Ok(MergeReport { threshold, reference_init: inits[r], per_init, all_merged })
}

/// `n` points spaced geometrically from `t_min` to `t_max`, preceded by 0.
pub fn geometric_grid(t_min: f64, t_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && t_max > t_min && n >= 2) {
        return Err(invalid(format!("geometric grid ({t_min}, {t_max}, {n})")));
    }
    let r = (t_max / t_min).ln() / (n - 1) as f64;
    Ok(std::iter::once(0.0).chain((0..n).map(|i| t_min * (r * i as f64).exp())).collect())
}
