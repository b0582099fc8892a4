//! Configuration, replicate execution and CSV output for the experiments.

mod config;
mod experiments;
mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{ExperimentConfig, ExperimentKind, ProposalSpec, TargetSpec, TimeGrid, DEFAULT_SEED, DRIFT_SCENARIOS};
pub use experiments::{
    ground_truth, mcmc_cell, ratio_table, run_experiment, McmcCell, RunOutput, MERGE_CRITERION_LABEL, TIME_UNIT_LABEL,
};
pub use output::{read_rows, sidecar_path, version_string, write_rows, Metadata, Row, Truth, HEADER};

use crate::error::Result;
use crate::rng::with_workers;

/// Reals are written with 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// What a batch of experiments wrote.
#[derive(Debug, Clone)]
pub struct Summary {
    pub csv_path: PathBuf,
    pub meta_path: PathBuf,
    pub rows: Vec<Row>,
    pub degenerate: usize,
    pub evaluations: usize,
    /// Some experiment exceeded its `max_degenerate_fraction`.
    pub degenerate_threshold_exceeded: bool,
}

/// Runs `configs` in order and writes their rows to one CSV at `out` (or the
/// first config's `output_path`) plus a `.meta.json` sidecar.
pub fn execute(configs: &[ExperimentConfig], out: Option<&Path>, smoke: bool) -> Result<Summary> {
    let start = Instant::now();
    let csv_path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| configs.first().map(|c| c.output_path.clone()).unwrap_or_else(|| PathBuf::from("out.csv")));
    let mut rows = Vec::new();
    let mut truths: Vec<Truth> = Vec::new();
    let mut labels: Vec<(String, String)> = Vec::new();
    let (mut degenerate, mut evaluations, mut exceeded) = (0, 0, false);
    for c in configs {
        let o = with_workers(c.workers, || run_experiment(c))??;
        if o.evaluations > 0 && o.degenerate as f64 > c.max_degenerate_fraction * o.evaluations as f64 {
            exceeded = true;
        }
        degenerate += o.degenerate;
        evaluations += o.evaluations;
        rows.extend(o.rows);
        for t in o.truths {
            if !truths.contains(&t) {
                truths.push(t);
            }
        }
        for l in o.labels {
            if !labels.contains(&l) {
                labels.push(l);
            }
        }
    }
    if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_rows(&rows, std::fs::File::create(&csv_path)?)?;
    let meta_path = sidecar_path(&csv_path);
    let meta = Metadata {
        version: version_string(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        smoke,
        configs,
        truths,
        labels,
        degenerate_replicates: degenerate,
        replicate_evaluations: evaluations,
    };
    output::write_metadata(&meta_path, &meta)?;
    Ok(Summary { csv_path, meta_path, rows, degenerate, evaluations, degenerate_threshold_exceeded: exceeded })
}
