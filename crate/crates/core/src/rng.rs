//! Seeded, splittable random streams and order-preserving parallel replicates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};

pub type ReplicateRng = ChaCha8Rng;

/// The independent stream of replicate `index` under `master_seed`.
pub fn replicate_rng(master_seed: u64, index: u64) -> ReplicateRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Runs `f(index, rng)` for every replicate in parallel; results come back in
/// index order, so output does not depend on scheduling.
pub fn run_replicates<T, F>(master_seed: u64, n_rep: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ReplicateRng) -> T + Sync,
{
    (0..n_rep as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_rng(master_seed, i);
            f(i, &mut rng)
        })
        .collect()
}

/// Runs `f` on a dedicated pool of `workers` threads (the global pool when `None`).
pub fn with_workers<T: Send, F: FnOnce() -> T + Send>(workers: Option<usize>, f: F) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(invalid("workers must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| invalid(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
