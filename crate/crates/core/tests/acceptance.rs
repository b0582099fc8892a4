//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::*;
use rand::Rng;
use tempered_is::diagnostics::{
    ergodicity_window, hitting_time_moment, ks_curve, merge_times, polytail_lower_scenario, polytail_scenario,
    replicate_variance, superexp_scenario, DriftRate,
};
use tempered_is::estimators::{
    asymptotic_variance, minimax_trial_atom, multiple_is_asym_variance, snis, two_point_test_function, variance_ratio,
    worst_case_risk_finite, EstimateRecord, EstimatorKind, EventSet, MultipleIsPlan,
};
use tempered_is::harness::{ground_truth, mcmc_cell, ExperimentConfig, ExperimentKind};
use tempered_is::rng::{replicate_rng, run_replicates};
use tempered_is::sampler::{Proposal, RwmhKernel};
use tempered_is::{weight, NamedFn, Target, Trial};

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn is_columns() -> Outcome {
    let g = Target::gaussian(0.0, 1.0).unwrap();
    let expected = [(0.4, [0.358, 0.576, 0.305, 0.234, 1.31]), (0.7, [0.546, 0.648, 0.477, 0.383, 1.06])];
    let mut ok = true;
    let mut detail = Vec::new();
    for (beta, want) in expected {
        let got: Vec<f64> =
            NamedFn::table1_set().iter().map(|f| variance_ratio(&Trial::tempered(beta), &g, f).unwrap()).collect();
        ok &= got.iter().zip(want).all(|(g, w)| (g - w).abs() <= 0.005);
        detail.push(format!("beta={beta}: {}", got.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", ")));
    }
    (ok, detail.join("; "))
}

fn mcmc_columns() -> Outcome {
    let g = Target::gaussian(0.0, 1.0).unwrap();
    let fns = NamedFn::table1_set();
    let truths: Vec<f64> = fns.iter().map(|f| ground_truth(&g, f).unwrap().0).collect();
    let sigma2: Vec<f64> = fns.iter().map(|f| asymptotic_variance(&Trial::tempered(1.0), &g, f).unwrap()).collect();
    let seed = ExperimentConfig::preset(ExperimentKind::Table1Mcmc).master_seed;
    let ratios = |beta: f64, x0: f64| -> Vec<f64> {
        let k = RwmhKernel::new(g.clone(), beta, Proposal::Gaussian { sd: 2.0 }).unwrap();
        let cell = mcmc_cell(&k, x0, 1000, 2000, seed, &fns, &truths).unwrap();
        cell.estimates.iter().zip(&sigma2).map(|(e, s)| e.unwrap().value / s).collect()
    };
    let (it0, it10) = (ratios(0.7, 0.01), ratios(0.7, 10.0));
    let (rw0, rw10) = (ratios(1.0, 0.01), ratios(1.0, 10.0));
    let a = (0..4).all(|j| (1.0..=4.0).contains(&it0[j]) && (1.0..=4.0).contains(&it10[j]))
        && (0..5).all(|j| (it10[j] - it0[j]).abs() <= 0.5 * it0[j]);
    let b = rw10[3] > 1e3;
    let c = rw0.iter().all(|r| (2.5..=7.0).contains(r));
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", ");
    (
        a && b && c,
        format!(
            "(a) {} ITMH x0=0.01 [{}] x0=10 [{}]; (b) {} RWMH x0=10 x^4 = {:.1}; (c) {} RWMH x0=0.01 [{}]",
            pf(a),
            fmt(&it0),
            fmt(&it10),
            pf(b),
            rw10[3],
            pf(c),
            fmt(&rw0)
        ),
    )
}

fn minimax() -> Outcome {
    let mut rng = replicate_rng(31, 0);
    let mut worst_gap: f64 = 0.0;
    let mut grid_checked = 0;
    for _ in 0..200 {
        let n = rng.random_range(2..=6);
        let pi = random_simplex(&mut rng, n);
        let q = random_simplex(&mut rng, n);
        let r = worst_case_risk_finite(&pi, &q).unwrap().risk;
        let mut oracle = risk_oracle_eigen(&pi, &q);
        if n <= 3 {
            oracle = risk_oracle_grid(&pi, &q);
            grid_checked += 1;
        }
        worst_gap = worst_gap.max((r - oracle).abs());
    }
    let mut closed_gap: f64 = 0.0;
    let mut beaten = 0;
    for _ in 0..200 {
        let (pi, p) = random_large_atom(&mut rng);
        let target = Target::finite(pi.clone()).unwrap();
        let (trial, report) = minimax_trial_atom(&target, 0).unwrap();
        let q = trial.finite_probs(&target).unwrap();
        let recomputed = worst_case_risk_finite(&pi, &q).unwrap().risk;
        let bound = 4.0 * p * (1.0 - p);
        closed_gap = closed_gap.max((report.risk - bound).abs()).max((recomputed - bound).abs());
        for k in 0..50 {
            let competitor = match k % 5 {
                0 => Trial::AtomMixture { atom: 0, c: rng.random_range(0.01..0.99) }.finite_probs(&target).unwrap(),
                1 => Trial::tempered(rng.random_range(0.01..1.0)).finite_probs(&target).unwrap(),
                _ => random_simplex(&mut rng, pi.len()),
            };
            if worst_case_risk_finite(&pi, &competitor).unwrap().risk + 1e-9 < report.risk {
                beaten += 1;
            }
        }
    }
    (
        worst_gap <= 1e-3 && closed_gap <= 1e-9 && beaten == 0,
        format!(
            "max |risk - oracle| = {worst_gap:.2e} ({grid_checked} grid, {} eigen); max |risk - 4p(1-p)| = {closed_gap:.2e}; competitors below minimax: {beaten}/10000",
            200 - grid_checked
        ),
    )
}

fn random_event<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    loop {
        let atoms: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
        if !atoms.is_empty() && atoms.len() < n {
            return atoms;
        }
    }
}

fn lower_bounds() -> Outcome {
    let mut rng = replicate_rng(41, 0);
    let mut two_point_fail = 0;
    for _ in 0..500 {
        let n = rng.random_range(2..=6);
        let pi = random_simplex(&mut rng, n);
        let target = Target::finite(pi).unwrap();
        let q = random_simplex(&mut rng, n);
        let set = EventSet::Atoms(random_event(&mut rng, n));
        let p = set.mass(&target).unwrap();
        let f = two_point_test_function(set, p).unwrap();
        let v = asymptotic_variance(&Trial::ExplicitFinite { probs: q }, &target, &f).unwrap();
        two_point_fail += usize::from(v < 4.0 * p * (1.0 - p) - 1e-9);
    }
    let mut small_fail = 0;
    let mut min_small = f64::INFINITY;
    for _ in 0..500 {
        let pi = random_small_atom(&mut rng);
        let q = random_simplex(&mut rng, pi.len());
        let r = worst_case_risk_finite(&pi, &q).unwrap().risk;
        min_small = min_small.min(r);
        small_fail += usize::from(r < 1.0 - 1e-9);
    }
    let mut plan_fail = 0;
    for _ in 0..200 {
        let (pi, p) = random_large_atom(&mut rng);
        let n = pi.len();
        let target = Target::finite(pi).unwrap();
        let tx = Trial::ExplicitFinite { probs: random_simplex(&mut rng, n) };
        let ty = Trial::ExplicitFinite { probs: random_simplex(&mut rng, n) };
        let plan =
            MultipleIsPlan::new(rng.random_range(0.01..0.99), rng.random_range(0.01..0.99), tx, ty, 1000).unwrap();
        let f = two_point_test_function(EventSet::Atoms(vec![0]), p).unwrap();
        let v = multiple_is_asym_variance(&plan, &target, &f).unwrap();
        plan_fail += usize::from(v < 4.0 * p * (1.0 - p) - 1e-9);
    }
    (
        two_point_fail + small_fail + plan_fail == 0,
        format!(
            "two-point violations {two_point_fail}/500; small-atom risk < 1: {small_fail}/500 (min {min_small:.6}); multiple-IS violations {plan_fail}/200"
        ),
    )
}

fn drift() -> Outcome {
    let scenarios = [
        superexp_scenario(1.0, 2.0, 0.5, 1.0).unwrap(),
        polytail_scenario(5.0, 0.4, 1.0, 2.0).unwrap(),
        polytail_lower_scenario(5.0, 0.65, 1.0, 2.0).unwrap(),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for s in &scenarios {
        let r = s.verify().unwrap();
        ok &= r.holds && r.points.len() == 20 && r.min_margin >= 0.0;
        detail.push(format!("{}: min margin {:.4} over {} points", s.name, r.min_margin, r.points.len()));
    }
    (ok, detail.join("; "))
}

fn fig1() -> Outcome {
    let mut c = ExperimentConfig::preset(ExperimentKind::Fig1Ks);
    c.n_rep = 2000;
    let grid = c.time_grid.points().unwrap();
    let mut detail = Vec::new();
    let mut merged_055 = false;
    let mut increasing_065 = false;
    for &beta in &c.betas {
        let k = RwmhKernel::new(c.target.target().clone(), beta, c.proposal.0).unwrap();
        let pts = ks_curve(&k, &c.inits, c.n_rep, &grid, c.master_seed).unwrap();
        let m = merge_times(&pts, c.n_rep).unwrap();
        let t = |x0: f64| m.per_init.iter().find(|p| p.0 == x0).unwrap().1.unwrap_or(f64::INFINITY);
        if beta == 0.55 {
            merged_055 = m.all_merged.is_some();
        } else {
            increasing_065 = t(20.0) < t(100.0) && t(100.0) < t(500.0);
        }
        detail.push(format!(
            "beta={beta}: merge t(20,100,500) = ({:.3}, {:.3}, {:.3}), all merged at {}",
            t(20.0),
            t(100.0),
            t(500.0),
            m.all_merged.map_or("never".to_string(), |v| format!("{v:.3}"))
        ));
    }
    (merged_055 && increasing_065, detail.join("; "))
}

fn window() -> Outcome {
    let w = ergodicity_window(5.0, 0.5).unwrap();
    let mut ok = w.window == Some((0.2, 0.6));
    for i in 1..=1000 {
        let beta = i as f64 / 1000.0;
        ok &= ergodicity_window(5.0, beta).unwrap().uniformly_ergodic == (0.2 < beta && beta < 0.6);
        for gamma in [1.001, 1.5, 2.0, 2.5, 2.999, 3.0] {
            let v = ergodicity_window(gamma, beta).unwrap();
            ok &= v.window.is_none() && !v.uniformly_ergodic;
        }
    }
    (ok, format!("gamma=5 window {:?}; gamma <= 3 empty on a 1000-point beta grid", w.window))
}

fn hitting() -> Outcome {
    let s = superexp_scenario(1.0, 2.0, 0.5, 1.0).unwrap();
    let DriftRate::Constant(alpha) = s.spec.alpha else { unreachable!() };
    let d = s.spec.d;
    let r = hitting_time_moment(&s.kernel, 2.0 * d, d, alpha, 2000, 51).unwrap();
    (
        r.mean <= 2.0 + 3.0 * r.stderr,
        format!(
            "E[exp(alpha tau)] = {:.4} +- {:.4} (alpha = {alpha:.4}, D = {d}, censored {})",
            r.mean, r.stderr, r.censored
        ),
    )
}

fn self_consistency() -> Outcome {
    let g = Target::gaussian(0.0, 1.0).unwrap();
    let fns = NamedFn::table1_set();
    let (n, n_rep) = (10_000, 2000);
    let mut ok = true;
    let mut detail = Vec::new();
    for beta in [0.4, 0.7] {
        let trial = Trial::tempered(beta);
        let w = weight(&trial, &g).unwrap();
        let est: Vec<Vec<f64>> = run_replicates(61, n_rep, |_, rng| {
            let xs: Vec<f64> = (0..n).map(|_| trial.sample(&g, rng).unwrap()).collect();
            fns.iter().map(|f| snis(&xs, f, &w).unwrap().value).collect()
        });
        let mut zs = Vec::new();
        for (j, f) in fns.iter().enumerate() {
            let truth = ground_truth(&g, f).unwrap().0;
            let recs: Vec<_> =
                est.iter().map(|e| EstimateRecord::new(e[j], n, EstimatorKind::SelfNormalized)).collect();
            let v = replicate_variance(&recs, n, truth).unwrap();
            let sigma2 = asymptotic_variance(&trial, &g, f).unwrap();
            let z = (v.value - sigma2) / v.stderr;
            ok &= z.abs() <= 3.0;
            zs.push(format!("{z:+.2}"));
        }
        detail.push(format!("beta={beta} z = [{}]", zs.join(", ")));
    }
    (ok, detail.join("; "))
}

fn pf(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("is_variance_columns", is_columns),
        ("mcmc_variance_columns", mcmc_columns),
        ("minimax_correctness", minimax),
        ("lower_bound_properties", lower_bounds),
        ("drift_verification", drift),
        ("ks_curve_merging", fig1),
        ("uniform_ergodicity_window", window),
        ("hitting_time_bound", hitting),
        ("self_consistency", self_consistency),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let (ok, detail) = run();
        failed += usize::from(!ok);
        println!("{} {name} ({:.1}s): {detail}", pf(ok), start.elapsed().as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
