//! Independent oracles and random instance generators shared by the
//! integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

/// `sup Σ π_i w_i f_i²` over `Σ π_i f_i = 0`, `Σ π_i f_i² = 1`, as the top
/// eigenvalue of `diag(w)` compressed to the complement of `√π`.
pub fn risk_oracle_eigen(pi: &[f64], q: &[f64]) -> f64 {
    let n = pi.len();
    let u: Vec<f64> = pi.iter().map(|p| p.sqrt()).collect();
    let proj = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } - u[i] * u[j]);
    let d = DMatrix::from_fn(n, n, |i, j| if i == j { pi[i] / q[i] } else { 0.0 });
    let m = &proj * d * &proj;
    let m = (&m + m.transpose()) * 0.5;
    SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Brute force over mean-zero unit-variance test functions for two or three
/// atoms: the feasible set is two points or a circle.
pub fn risk_oracle_grid(pi: &[f64], q: &[f64]) -> f64 {
    let risk = |f: &[f64]| -> f64 {
        let m: f64 = pi.iter().zip(f).map(|(p, v)| p * v).sum();
        let v: f64 = pi.iter().zip(f).map(|(p, x)| p * (x - m).powi(2)).sum();
        pi.iter().zip(q).zip(f).map(|((p, q), x)| p * p / q * (x - m).powi(2)).sum::<f64>() / v
    };
    match pi.len() {
        2 => risk(&[1.0, 0.0]),
        3 => {
            let steps = 200_000;
            (0..steps)
                .map(|k| {
                    let th = std::f64::consts::PI * k as f64 / steps as f64;
                    risk(&[th.cos(), th.sin(), 0.0])
                })
                .fold(f64::NEG_INFINITY, f64::max)
        }
        _ => panic!("grid oracle covers two or three atoms"),
    }
}

/// Dirichlet(1, ..., 1) draw, bounded away from zero.
pub fn random_simplex<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -(rng.random::<f64>().max(1e-12)).ln() + 1e-3).collect();
    let s: f64 = e.iter().sum();
    let mut p: Vec<f64> = e.iter().map(|v| v / s).collect();
    renormalize(&mut p);
    p
}

/// Forces `Σ p = 1` to the last ulp by adjusting the largest entry.
pub fn renormalize(p: &mut [f64]) {
    let s: f64 = p.iter().sum();
    let i = (0..p.len()).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap();
    p[i] += 1.0 - s;
}

/// A target whose atom 0 carries mass in `(1/2, 0.98)`.
pub fn random_large_atom<R: Rng>(rng: &mut R) -> (Vec<f64>, f64) {
    let n = rng.random_range(2..=6);
    let p = rng.random_range(0.505..0.98);
    let rest = random_simplex(rng, n - 1);
    let mut pi: Vec<f64> = std::iter::once(p).chain(rest.iter().map(|r| r * (1.0 - p))).collect();
    renormalize(&mut pi);
    (pi.clone(), pi[0])
}

/// A target with every atom at most one half.
pub fn random_small_atom<R: Rng>(rng: &mut R) -> Vec<f64> {
    loop {
        let n = rng.random_range(3..=6);
        let p = random_simplex(rng, n);
        if p.iter().all(|v| *v <= 0.5) {
            return p;
        }
    }
}
