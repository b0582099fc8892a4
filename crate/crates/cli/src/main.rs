//! `tempered-is`: runs the variance, KS-curve, risk and drift experiments and
//! writes long-format CSV.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tempered_is::harness::{execute, ratio_table, ExperimentConfig, ExperimentKind, Row, Summary};
use tempered_is::Error;

#[derive(Parser)]
#[command(
    name = "tempered-is",
    version,
    about = "Minimax importance sampling and importance-tempered MCMC experiments"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Master seed for every replicate stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output CSV path; the metadata goes to `<out>.meta.json`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Use 1/20 of the replicates.
    #[arg(long, global = true)]
    smoke: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Scaled asymptotic variances for the Gaussian target (IS and MCMC columns).
    Table1,
    /// KS distance to t4 over time from several starting points.
    Fig1,
    /// Scaled variance against beta for the Gaussian and t4 targets.
    Fig2,
    /// Worst-case risk for a finite target.
    Risk {
        /// Target probabilities, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        pi: Vec<f64>,
        /// Trial probabilities, comma separated.
        #[arg(long, value_delimiter = ',')]
        q: Option<Vec<f64>>,
        /// Inverse temperatures of tempered trials to score as well.
        #[arg(long, value_delimiter = ',')]
        betas: Option<Vec<f64>>,
    },
    /// Numerical drift-condition checks.
    Drift,
    /// Run the experiment described by a TOML file.
    Run { config: PathBuf },
}

fn configs(command: &Command) -> Result<Vec<ExperimentConfig>, Error> {
    use ExperimentKind::*;
    Ok(match command {
        Command::Table1 => vec![ExperimentConfig::preset(Table1Is), ExperimentConfig::preset(Table1Mcmc)],
        Command::Fig1 => vec![ExperimentConfig::preset(Fig1Ks)],
        Command::Fig2 => vec![ExperimentConfig::preset(Fig2Variance), ExperimentConfig::fig2_t4_preset()],
        Command::Risk { pi, q, betas } => {
            let mut c = ExperimentConfig::preset(RiskFinite);
            c.pi = pi.clone();
            c.q = q.clone();
            c.betas = betas.clone().unwrap_or_default();
            vec![c]
        }
        Command::Drift => vec![ExperimentConfig::preset(DriftVerify)],
        Command::Run { config } => vec![ExperimentConfig::from_path(config)?],
    })
}

fn apply(common: &Common, mut cs: Vec<ExperimentConfig>) -> Result<Vec<ExperimentConfig>, Error> {
    for c in &mut cs {
        if let Some(s) = common.seed {
            c.master_seed = s;
        }
        if common.workers.is_some() {
            c.workers = common.workers;
        }
        if common.smoke {
            *c = c.clone().smoke();
        }
        c.validate()?;
    }
    Ok(cs)
}

fn report(summary: &Summary) {
    println!("wrote {} rows to {}", summary.rows.len(), summary.csv_path.display());
    println!("metadata in {}", summary.meta_path.display());
    let table = ratio_table(&summary.rows);
    if !table.is_empty() {
        print!("{table}");
    }
    let curve = ["ks", "generator", "alpha", "margin"];
    let shown: Vec<&Row> = summary
        .rows
        .iter()
        .filter(|r| !r.metric_name.contains("var_ratio[") && !curve.contains(&r.metric_name.as_str()))
        .collect();
    for r in shown {
        let mut ctx = r.experiment_id.clone();
        if let Some(b) = r.beta {
            ctx += &format!(" beta={b}");
        }
        if let Some(x) = r.init {
            ctx += &format!(" init={x}");
        }
        println!("{ctx}  {} = {}", r.metric_name, r.value);
    }
    if summary.degenerate > 0 {
        eprintln!("{} of {} replicate estimates were degenerate", summary.degenerate, summary.evaluations);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configs(&cli.command).and_then(|cs| apply(&cli.common, cs)).and_then(|cs| {
        let out = cli.common.out.as_deref();
        execute(&cs, out, cli.common.smoke)
    });
    match result {
        Ok(summary) => {
            report(&summary);
            if summary.degenerate_threshold_exceeded {
                eprintln!("degenerate replicate fraction exceeded the configured threshold");
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(Error::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
