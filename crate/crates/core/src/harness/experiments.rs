//! Runners for each experiment kind.

use crate::diagnostics::{
    ks_curve, merge_times, polytail_lower_scenario, polytail_scenario, replicate_variance, superexp_scenario,
    DriftScenario, VarianceEstimate,
};
use crate::error::{Error, Result};
use crate::estimators::{
    asymptotic_variance, minimax_trial_atom, variance_ratio, worst_case_risk_finite, EstimateRecord, EstimatorKind,
    RiskCase, RiskReport,
};
use crate::functions::{expectation, NamedFn};
use crate::rng::run_replicates;
use crate::sampler::{simulate_jump_chain, snis_beta, RwmhKernel};
use crate::targets::{Target, TargetKind, Trial};

use super::config::{ExperimentConfig, ExperimentKind};
use super::output::{Row, Truth};

/// Everything a single experiment produced.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub rows: Vec<Row>,
    pub truths: Vec<Truth>,
    pub labels: Vec<(String, String)>,
    /// Replicate estimates dropped because every weight underflowed.
    pub degenerate: usize,
    /// Replicate estimates attempted, degenerate ones included.
    pub evaluations: usize,
}

pub const MERGE_CRITERION_LABEL: &str =
    "implementation-defined: a start is merged from the first grid time after which \
its KS gap to the curve of the smallest |init| stays below 2/sqrt(n_rep) at every later grid time; all_merged uses \
every pairwise gap";

pub const TIME_UNIT_LABEL: &str = "t is on the simulation clock (holding mean pi(x)^(1-beta) with pi unnormalized); \
multiply by the time_scale row to obtain the normalized clock";

/// `Π(f)` with closed forms where standard, quadrature otherwise.
pub fn ground_truth(target: &Target, f: &NamedFn) -> Result<(f64, &'static str)> {
    const CLOSED: &str = "closed form";
    match (target.kind(), f) {
        (TargetKind::FiniteDiscrete { .. }, _) => Ok((expectation(target, f)?, "exact sum over atoms")),
        (_, NamedFn::Indicator { a, b }) => Ok((target.cdf(*b)? - target.cdf(*a)?, "target cdf")),
        (TargetKind::Gaussian { mean, .. }, NamedFn::Identity) => Ok((*mean, CLOSED)),
        (TargetKind::Gaussian { mean, sd }, NamedFn::Power(k)) if *k >= 0 => {
            // E X^k = μ E X^(k-1) + (k-1) σ² E X^(k-2)
            let (mut prev, mut cur) = (1.0, *mean);
            if *k == 0 {
                return Ok((1.0, CLOSED));
            }
            for j in 2..=*k {
                let next = mean * cur + (j - 1) as f64 * sd * sd * prev;
                prev = cur;
                cur = next;
            }
            Ok((cur, CLOSED))
        }
        (TargetKind::StudentT { dof }, NamedFn::Identity) if *dof > 1.0 => Ok((0.0, CLOSED)),
        (TargetKind::StudentT { dof }, NamedFn::Power(k)) if *k >= 0 && (*k as f64) < *dof => match k {
            0 => Ok((1.0, CLOSED)),
            2 => Ok((dof / (dof - 2.0), CLOSED)),
            k if k % 2 == 1 => Ok((0.0, CLOSED)),
            _ => Ok((expectation(target, f)?, "adaptive quadrature")),
        },
        _ => Ok((expectation(target, f)?, "adaptive quadrature")),
    }
}

fn truths_for(target_text: &str, target: &Target, fns: &[NamedFn]) -> Result<Vec<Truth>> {
    fns.iter()
        .map(|f| {
            let (value, provenance) = ground_truth(target, f)?;
            Ok(Truth { target: target_text.to_string(), function: f.to_string(), value, provenance })
        })
        .collect()
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    match config.experiment {
        ExperimentKind::Table1Is => run_is(config, "var_ratio"),
        ExperimentKind::Table1Mcmc | ExperimentKind::Fig2Variance => run_mcmc(config, "var_ratio"),
        ExperimentKind::Fig1Ks => run_fig1(config),
        ExperimentKind::RiskFinite => run_risk(config),
        ExperimentKind::DriftVerify => run_drift(config),
        ExperimentKind::Custom => {
            let mut out = run_is(config, "is_var_ratio")?;
            if !config.target.target().is_discrete() {
                let mc = run_mcmc(config, "mcmc_var_ratio")?;
                out.rows.extend(mc.rows);
                out.truths.extend(mc.truths);
                out.labels.extend(mc.labels);
                out.degenerate += mc.degenerate;
                out.evaluations += mc.evaluations;
            }
            Ok(out)
        }
    }
}

fn experiment_id(config: &ExperimentConfig) -> String {
    match config.experiment {
        ExperimentKind::Fig2Variance | ExperimentKind::Custom => {
            format!("{}[{}]", config.experiment.id(), config.target)
        }
        k => k.id().to_string(),
    }
}

fn run_is(config: &ExperimentConfig, metric: &str) -> Result<RunOutput> {
    let target = config.target.target();
    let id = experiment_id(config);
    let mut rows = Vec::new();
    for &beta in &config.betas {
        for f in &config.functions {
            let r = variance_ratio(&Trial::tempered(beta), target, f)?;
            rows.push(Row::new(&id, format!("{metric}[{f}]"), r).beta(beta));
        }
    }
    Ok(RunOutput { rows, ..Default::default() })
}

/// Per-function replicate variances of the tempered estimator at one start.
pub struct McmcCell {
    pub estimates: Vec<Option<VarianceEstimate>>,
    pub degenerate: Vec<usize>,
}

pub fn mcmc_cell(
    kernel: &RwmhKernel,
    x0: f64,
    n: usize,
    n_rep: usize,
    master_seed: u64,
    fns: &[NamedFn],
    truths: &[f64],
) -> Result<McmcCell> {
    let target = kernel.target();
    let beta = kernel.beta();
    let per_rep: Vec<Vec<Result<f64>>> = run_replicates(master_seed, n_rep, |_, rng| {
        let chain = simulate_jump_chain(kernel, x0, n, rng);
        fns.iter().map(|f| snis_beta(&chain, target, beta, f).map(|r| r.value)).collect()
    });
    let mut estimates = Vec::with_capacity(fns.len());
    let mut degenerate = Vec::with_capacity(fns.len());
    for (j, truth) in truths.iter().enumerate() {
        let mut recs = Vec::with_capacity(n_rep);
        let mut bad = 0;
        for (i, rep) in per_rep.iter().enumerate() {
            match &rep[j] {
                Ok(v) => recs
                    .push(EstimateRecord::new(*v, n, EstimatorKind::SelfNormalized).with_seed(i as u64).with_init(x0)),
                Err(Error::DegenerateBatch { .. }) => bad += 1,
                Err(e) => return Err(e.clone()),
            }
        }
        estimates.push(if recs.is_empty() { None } else { Some(replicate_variance(&recs, n, *truth)?) });
        degenerate.push(bad);
    }
    Ok(McmcCell { estimates, degenerate })
}

fn run_mcmc(config: &ExperimentConfig, metric: &str) -> Result<RunOutput> {
    let target = config.target.target();
    let id = experiment_id(config);
    let text = config.target.to_string();
    let truths = truths_for(&text, target, &config.functions)?;
    let truth_vals: Vec<f64> = truths.iter().map(|t| t.value).collect();
    let sigma2: Vec<f64> = config
        .functions
        .iter()
        .map(|f| asymptotic_variance(&Trial::tempered(1.0), target, f))
        .collect::<Result<_>>()?;
    let mut out = RunOutput { truths, ..Default::default() };
    for &beta in &config.betas {
        let kernel = RwmhKernel::new(target.clone(), beta, config.proposal.0)?;
        for &x0 in &config.inits {
            let cell =
                mcmc_cell(&kernel, x0, config.n, config.n_rep, config.master_seed, &config.functions, &truth_vals)?;
            for (j, f) in config.functions.iter().enumerate() {
                out.evaluations += config.n_rep;
                out.degenerate += cell.degenerate[j];
                let base = |name: String, v: f64| Row::new(&id, name, v).beta(beta).init(x0).t_or_n(config.n as f64);
                if let Some(est) = cell.estimates[j] {
                    let se = if config.n_rep > 1 { Some(est.stderr / sigma2[j]) } else { None };
                    out.rows.push(base(format!("{metric}[{f}]"), est.value / sigma2[j]).stderr(se));
                }
                if cell.degenerate[j] > 0 {
                    out.rows.push(base(format!("degenerate[{f}]"), cell.degenerate[j] as f64));
                }
            }
        }
    }
    out.labels.push(("proposal".into(), config.proposal.to_string()));
    Ok(out)
}

fn run_fig1(config: &ExperimentConfig) -> Result<RunOutput> {
    let target = config.target.target();
    let grid = config.time_grid.points()?;
    let id = experiment_id(config);
    let mut out = RunOutput::default();
    for &beta in &config.betas {
        let kernel = RwmhKernel::new(target.clone(), beta, config.proposal.0)?;
        let points = ks_curve(&kernel, &config.inits, config.n_rep, &grid, config.master_seed)?;
        out.evaluations += config.n_rep * config.inits.len();
        for p in &points {
            out.rows.push(Row::new(&id, "ks", p.ks).beta(beta).init(p.init).t_or_n(p.t));
        }
        let merge = merge_times(&points, config.n_rep)?;
        for (x0, t) in &merge.per_init {
            out.rows.push(Row::new(&id, "merge_time", t.unwrap_or(f64::INFINITY)).beta(beta).init(*x0));
        }
        out.rows.push(Row::new(&id, "all_merged_time", merge.all_merged.unwrap_or(f64::INFINITY)).beta(beta));
        out.rows.push(Row::new(&id, "merge_threshold", merge.threshold).beta(beta));
        out.rows.push(Row::new(&id, "time_scale", kernel.log_time_scale()?.exp()).beta(beta));
    }
    out.labels.push(("merge_criterion".into(), MERGE_CRITERION_LABEL.into()));
    out.labels.push(("time_grid".into(), config.time_grid.label()));
    out.labels.push(("time_unit".into(), TIME_UNIT_LABEL.into()));
    out.labels
        .push(("censoring".into(), "merge_time = inf means the curve never stayed merged within the grid".into()));
    Ok(out)
}

fn case_name(c: RiskCase) -> &'static str {
    match c {
        RiskCase::InfiniteWeight => "infinite_weight",
        RiskCase::TiedTop => "tied_top",
        RiskCase::LambdaRoot => "lambda_root",
        RiskCase::NoAtomEssSup => "no_atom_ess_sup",
        RiskCase::LargeAtomClosedForm => "large_atom_closed_form",
    }
}

fn risk_rows(id: &str, label: &str, r: &RiskReport, beta: Option<f64>) -> Vec<Row> {
    let with_beta = |row: Row| if let Some(b) = beta { row.beta(b) } else { row };
    let mut rows = vec![with_beta(Row::new(id, format!("{label}[{}]", case_name(r.case)), r.risk))];
    if let Some(l) = r.lambda {
        rows.push(with_beta(Row::new(id, format!("{label}_lambda"), l)));
    }
    rows
}

fn run_risk(config: &ExperimentConfig) -> Result<RunOutput> {
    let id = experiment_id(config);
    let target = Target::finite(config.pi.clone())?;
    let mut out = RunOutput::default();
    if let Some(q) = &config.q {
        out.rows.extend(risk_rows(&id, "risk", &worst_case_risk_finite(&config.pi, q)?, None));
    }
    for &beta in &config.betas {
        let q = Trial::tempered(beta).finite_probs(&target)?;
        out.rows.extend(risk_rows(&id, "tempered_risk", &worst_case_risk_finite(&config.pi, &q)?, Some(beta)));
    }
    let (atom, p) = config.pi.iter().copied().enumerate().fold((0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
    if p > 0.5 {
        let (_, r) = minimax_trial_atom(&target, atom)?;
        out.rows.push(Row::new(&id, format!("minimax_atom_risk[atom={atom}]"), r.risk));
    }
    Ok(out)
}

fn drift_scenario(name: &str) -> Result<DriftScenario> {
    match name {
        "superexp" => superexp_scenario(1.0, 2.0, 0.5, 1.0),
        "polytail" => polytail_scenario(5.0, 0.4, 1.0, 2.0),
        "polytail_lower" => polytail_lower_scenario(5.0, 0.65, 1.0, 2.0),
        other => Err(Error::Config(format!("unknown drift scenario `{other}`"))),
    }
}

fn run_drift(config: &ExperimentConfig) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    for name in &config.scenarios {
        let s = drift_scenario(name)?;
        let report = s.verify()?;
        let id = format!("{}[{name}]", config.experiment.id());
        let beta = s.kernel.beta();
        for p in &report.points {
            out.rows.push(Row::new(&id, "generator", p.generator).beta(beta).t_or_n(p.x));
            out.rows.push(Row::new(&id, "alpha", p.alpha).beta(beta).t_or_n(p.x));
            out.rows.push(Row::new(&id, "margin", p.margin).beta(beta).t_or_n(p.x));
        }
        out.rows.push(Row::new(&id, "min_margin", report.min_margin).beta(beta));
        out.rows.push(Row::new(&id, "holds", if report.holds { 1.0 } else { 0.0 }).beta(beta));
        out.labels.push((format!("drift[{name}]"), format!("{}: D = {}", s.name, s.spec.d)));
    }
    Ok(out)
}

/// Pivot of every `*var_ratio[f]` row: one block per experiment, one line
/// per (beta, init), one column per function.
pub fn ratio_table(rows: &[Row]) -> String {
    struct Block {
        id: String,
        fns: Vec<String>,
        lines: Vec<String>,
        cells: Vec<(String, String, String)>,
    }
    let mut blocks: Vec<Block> = Vec::new();
    for r in rows {
        let Some(open) = r.metric_name.find("var_ratio[") else { continue };
        let f =
            format!("{}{}", &r.metric_name[..open], r.metric_name[open + "var_ratio[".len()..].trim_end_matches(']'));
        let mut line = String::new();
        if let Some(b) = r.beta {
            line += &format!("b={b}");
        }
        if let Some(x) = r.init {
            line += &format!(" x0={x}");
        }
        let v = match r.stderr {
            Some(se) => format!("{:.4} ({:.2})", r.value, se),
            None => format!("{:.4}", r.value),
        };
        let pos = blocks.iter().position(|b| b.id == r.experiment_id).unwrap_or_else(|| {
            blocks.push(Block { id: r.experiment_id.clone(), fns: vec![], lines: vec![], cells: vec![] });
            blocks.len() - 1
        });
        let b = &mut blocks[pos];
        if !b.fns.contains(&f) {
            b.fns.push(f.clone());
        }
        if !b.lines.contains(&line) {
            b.lines.push(line.clone());
        }
        b.cells.push((line, f, v));
    }
    let mut s = String::new();
    for b in &blocks {
        let lw = b.lines.iter().map(String::len).max().unwrap_or(0).max(b.id.len());
        let widths: Vec<usize> = b
            .fns
            .iter()
            .map(|f| b.cells.iter().filter(|c| &c.1 == f).map(|c| c.2.len()).max().unwrap_or(0).max(f.len()))
            .collect();
        s += &format!("{:lw$}", b.id);
        for (f, w) in b.fns.iter().zip(&widths) {
            s += &format!("  {f:>w$}");
        }
        s.push('\n');
        for line in &b.lines {
            s += &format!("{line:lw$}");
            for (f, w) in b.fns.iter().zip(&widths) {
                let v = b.cells.iter().find(|c| &c.0 == line && &c.1 == f).map(|c| c.2.as_str()).unwrap_or("-");
                s += &format!("  {v:>w$}");
            }
            s.push('\n');
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_truths() {
        let g = Target::gaussian(0.0, 1.0).unwrap();
        let t = |f: NamedFn| ground_truth(&g, &f).unwrap();
        assert_eq!(t(NamedFn::Power(2)), (1.0, "closed form"));
        assert_eq!(t(NamedFn::Power(3)), (0.0, "closed form"));
        assert_eq!(t(NamedFn::Power(4)), (3.0, "closed form"));
        assert_eq!(t(NamedFn::Power(8)).0, 105.0);
        let (v, how) = t(NamedFn::LogAbs);
        assert!((v + 0.635_181_422_730_739).abs() < 1e-10 && how == "adaptive quadrature");
        let shifted = Target::gaussian(1.5, 2.0).unwrap();
        let (v, _) = ground_truth(&shifted, &NamedFn::Power(3)).unwrap();
        assert!((v - (1.5f64.powi(3) + 3.0 * 1.5 * 4.0)).abs() < 1e-12);
    }

    #[test]
    fn t4_truths() {
        let t4 = Target::student_t(4.0).unwrap();
        assert_eq!(ground_truth(&t4, &NamedFn::Power(2)).unwrap().0, 2.0);
        assert_eq!(ground_truth(&t4, &NamedFn::Power(3)).unwrap().0, 0.0);
        assert_eq!(ground_truth(&t4, &NamedFn::Identity).unwrap().0, 0.0);
        let (v, how) = ground_truth(&t4, &NamedFn::Indicator { a: -2.0, b: 2.0 }).unwrap();
        // 2F(2) - 1 with the closed-form t4 cdf: F(x) = 1/2 + x(x²+6)/(2(x²+4)^{3/2})
        assert!((v - 20.0 / 8f64.powf(1.5)).abs() < 1e-9, "{v} {how}");
    }

    #[test]
    fn table_pivots_ratio_rows() {
        let rows = vec![
            Row::new("table1_is", "var_ratio[power(2)]", 0.576).beta(0.4),
            Row::new("table1_mcmc", "var_ratio[power(2)]", 2.7).beta(0.7).init(10.0).stderr(Some(0.08)),
            Row::new("table1_mcmc", "degenerate[power(2)]", 1.0).beta(0.7).init(10.0),
        ];
        let t = ratio_table(&rows);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 4, "{t}");
        assert!(lines[0].starts_with("table1_is") && lines[0].ends_with("power(2)"), "{t}");
        assert!(lines[1].starts_with("b=0.4") && lines[1].ends_with("0.5760"), "{t}");
        assert!(lines[3].starts_with("b=0.7 x0=10") && lines[3].ends_with("2.7000 (0.08)"), "{t}");
    }
}
