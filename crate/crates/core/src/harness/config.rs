//! Declarative experiment descriptions, read from TOML.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diagnostics::geometric_grid;
use crate::error::{Error, Result};
use crate::functions::{parse_num, split_call, NamedFn};
use crate::sampler::Proposal;
use crate::targets::{Target, TargetKind, Trial};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Table1Is,
    Table1Mcmc,
    Fig1Ks,
    Fig2Variance,
    RiskFinite,
    DriftVerify,
    Custom,
}

impl ExperimentKind {
    pub fn id(self) -> &'static str {
        match self {
            ExperimentKind::Table1Is => "table1_is",
            ExperimentKind::Table1Mcmc => "table1_mcmc",
            ExperimentKind::Fig1Ks => "fig1_ks",
            ExperimentKind::Fig2Variance => "fig2_variance",
            ExperimentKind::RiskFinite => "risk_finite",
            ExperimentKind::DriftVerify => "drift_verify",
            ExperimentKind::Custom => "custom",
        }
    }
}

/// A target written as `gaussian(mean,sd)`, `student_t(dof)`,
/// `poly_tail(gamma)`, `super_exp(a,omega)` or `finite(p0,p1,...)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TargetSpec {
    text: String,
    target: Target,
}

impl TargetSpec {
    pub fn target(&self) -> &Target {
        &self.target
    }
}

impl fmt::Display for TargetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl FromStr for TargetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = split_call(s)?;
        let nums = args.iter().map(|a| parse_num::<f64>(a, s)).collect::<Result<Vec<_>>>()?;
        let arity = |n: usize| {
            if nums.len() == n {
                Ok(())
            } else {
                Err(Error::Config(format!("`{name}` takes {n} argument(s), got {}", nums.len())))
            }
        };
        let kind = match name {
            "gaussian" => arity(2).map(|_| TargetKind::Gaussian { mean: nums[0], sd: nums[1] }),
            "student_t" => arity(1).map(|_| TargetKind::StudentT { dof: nums[0] }),
            "poly_tail" => arity(1).map(|_| TargetKind::PolyTail { gamma: nums[0] }),
            "super_exp" => arity(2).map(|_| TargetKind::SuperExp { a: nums[0], omega: nums[1] }),
            "finite" => Ok(TargetKind::FiniteDiscrete { probs: nums.clone() }),
            other => Err(Error::Config(format!(
                "unknown target `{other}` (expected gaussian, student_t, poly_tail, super_exp or finite)"
            ))),
        }?;
        let target = Target::from_kind_checked(kind).map_err(|e| Error::Config(format!("target `{s}`: {e}")))?;
        Ok(Self { text: s.trim().to_string(), target })
    }
}

impl TryFrom<String> for TargetSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<TargetSpec> for String {
    fn from(t: TargetSpec) -> String {
        t.text
    }
}

/// `gaussian(sd)` or `truncated(xi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ProposalSpec(pub Proposal);

impl FromStr for ProposalSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = split_call(s)?;
        if args.len() != 1 {
            return Err(Error::Config(format!("proposal `{s}` takes one argument")));
        }
        let v: f64 = parse_num(args[0], s)?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Config(format!("proposal scale in `{s}` must be positive")));
        }
        match name {
            "gaussian" => Ok(Self(Proposal::Gaussian { sd: v })),
            "truncated" => Ok(Self(Proposal::Truncated { xi: v })),
            other => Err(Error::Config(format!("unknown proposal `{other}` (expected gaussian or truncated)"))),
        }
    }
}

impl fmt::Display for ProposalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Proposal::Gaussian { sd } => write!(f, "gaussian({sd})"),
            Proposal::Truncated { xi } => write!(f, "truncated({xi})"),
        }
    }
}

impl TryFrom<String> for ProposalSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ProposalSpec> for String {
    fn from(p: ProposalSpec) -> String {
        p.to_string()
    }
}

/// Observation times for KS curves: `"geometric(t_min,t_max,n)"` (with 0
/// prepended) or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeGrid {
    Spec(String),
    Points(Vec<f64>),
}

impl TimeGrid {
    pub fn default_geometric() -> Self {
        TimeGrid::Spec("geometric(0.1,1000,81)".into())
    }

    pub fn points(&self) -> Result<Vec<f64>> {
        match self {
            TimeGrid::Points(p) => {
                if p.is_empty() || p.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || p.windows(2).any(|w| w[0] >= w[1])
                {
                    return Err(Error::Config(
                        "time_grid must be non-empty, non-negative and strictly increasing".into(),
                    ));
                }
                Ok(p.clone())
            }
            TimeGrid::Spec(s) => {
                let (name, args) = split_call(s)?;
                if name != "geometric" || args.len() != 3 {
                    return Err(Error::Config(format!("time_grid `{s}`: expected geometric(t_min,t_max,n)")));
                }
                let (a, b, n) = (parse_num(args[0], s)?, parse_num(args[1], s)?, parse_num(args[2], s)?);
                geometric_grid(a, b, n).map_err(|e| Error::Config(format!("time_grid `{s}`: {e}")))
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            TimeGrid::Spec(s) => format!("{s} with t=0 prepended; spacing chosen by this implementation"),
            TimeGrid::Points(p) => format!("explicit list of {} points", p.len()),
        }
    }
}

/// The TOML file as written; every key is optional except `experiment`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Option<ExperimentKind>,
    target: Option<TargetSpec>,
    betas: Option<Vec<f64>>,
    functions: Option<Vec<NamedFn>>,
    n: Option<usize>,
    n_rep: Option<usize>,
    inits: Option<Vec<f64>>,
    master_seed: Option<u64>,
    output_path: Option<PathBuf>,
    workers: Option<usize>,
    proposal: Option<ProposalSpec>,
    time_grid: Option<TimeGrid>,
    pi: Option<Vec<f64>>,
    q: Option<Vec<f64>>,
    scenarios: Option<Vec<String>>,
    max_degenerate_fraction: Option<f64>,
}

pub const DRIFT_SCENARIOS: [&str; 3] = ["superexp", "polytail", "polytail_lower"];

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub target: TargetSpec,
    pub betas: Vec<f64>,
    pub functions: Vec<NamedFn>,
    /// Chain length for Monte Carlo cells.
    pub n: usize,
    pub n_rep: usize,
    pub inits: Vec<f64>,
    pub master_seed: u64,
    pub output_path: PathBuf,
    pub workers: Option<usize>,
    pub proposal: ProposalSpec,
    pub time_grid: TimeGrid,
    /// Finite target and trial for `risk_finite`; `target` is ignored there.
    pub pi: Vec<f64>,
    pub q: Option<Vec<f64>>,
    pub scenarios: Vec<String>,
    /// Fraction of degenerate replicates above which a run exits with status 3.
    pub max_degenerate_fraction: f64,
}

pub const DEFAULT_SEED: u64 = 20_240_611;

fn spec(s: &str) -> TargetSpec {
    s.parse().expect("built-in target spec")
}

fn beta_grid() -> Vec<f64> {
    (0..15).map(|i| (30 + 5 * i) as f64 / 100.0).collect()
}

impl ExperimentConfig {
    /// Full-scale defaults for `kind`.
    pub fn preset(kind: ExperimentKind) -> Self {
        let mut c = ExperimentConfig {
            experiment: kind,
            target: spec("gaussian(0,1)"),
            betas: vec![0.4, 0.7],
            functions: NamedFn::table1_set(),
            n: 1000,
            n_rep: 2000,
            inits: vec![0.01, 10.0],
            master_seed: DEFAULT_SEED,
            output_path: PathBuf::from(format!("{}.csv", kind.id())),
            workers: None,
            proposal: ProposalSpec(Proposal::Gaussian { sd: 2.0 }),
            time_grid: TimeGrid::default_geometric(),
            pi: vec![0.7, 0.2, 0.1],
            q: None,
            scenarios: DRIFT_SCENARIOS.iter().map(|s| s.to_string()).collect(),
            max_degenerate_fraction: 0.01,
        };
        match kind {
            ExperimentKind::Table1Mcmc => c.betas = vec![0.7, 1.0],
            ExperimentKind::Fig1Ks => {
                c.target = spec("student_t(4)");
                c.betas = vec![0.55, 0.65];
                c.inits = vec![0.0, 20.0, 100.0, 500.0];
                c.n_rep = 10_000;
                c.proposal = ProposalSpec(Proposal::Gaussian { sd: 3.0 });
            }
            ExperimentKind::Fig2Variance => {
                c.betas = beta_grid();
                c.inits = vec![0.01];
            }
            _ => {}
        }
        c
    }

    /// The Student-t panel of the variance-against-beta sweep.
    pub fn fig2_t4_preset() -> Self {
        let mut c = Self::preset(ExperimentKind::Fig2Variance);
        c.target = spec("student_t(4)");
        c.functions = NamedFn::t4_set();
        c.n = 2000;
        c
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let kind = raw.experiment.ok_or_else(|| Error::Config("missing required field `experiment`".into()))?;
        let mut c = Self::preset(kind);
        macro_rules! take {
            ($($f:ident),*) => { $(if let Some(v) = raw.$f { c.$f = v; })* };
        }
        take!(
            target,
            betas,
            functions,
            n,
            n_rep,
            inits,
            master_seed,
            output_path,
            proposal,
            time_grid,
            pi,
            scenarios,
            max_degenerate_fraction
        );
        c.workers = raw.workers;
        c.q = raw.q;
        c.validate()?;
        Ok(c)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Divides the replicate count by 20, keeping enough for KS curves.
    pub fn smoke(mut self) -> Self {
        let floor = if self.experiment == ExperimentKind::Fig1Ks { 100 } else { 1 };
        self.n_rep = (self.n_rep / 20).max(floor);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: String| Err(Error::Config(format!("field `{name}`: {msg}")));
        let target = self.target.target();
        let uses_target = !matches!(self.experiment, ExperimentKind::RiskFinite | ExperimentKind::DriftVerify);
        if uses_target {
            if self.betas.is_empty() {
                return field("betas", "must not be empty".into());
            }
            for &b in &self.betas {
                if let Err(e) = Trial::tempered(b).validate(target) {
                    return field("betas", format!("beta = {b} for target {}: {e}", self.target));
                }
            }
        }
        let needs_chain = match self.experiment {
            ExperimentKind::Table1Mcmc | ExperimentKind::Fig1Ks | ExperimentKind::Fig2Variance => true,
            ExperimentKind::Custom => !target.is_discrete(),
            _ => false,
        };
        if needs_chain {
            if target.is_discrete() {
                return field("target", "chain experiments need a continuous target".into());
            }
            if self.n_rep == 0 {
                return field("n_rep", "must be positive".into());
            }
            if self.inits.is_empty() || self.inits.iter().any(|x| !x.is_finite()) {
                return field("inits", "must be a non-empty list of finite numbers".into());
            }
        }
        if needs_chain && self.experiment != ExperimentKind::Fig1Ks && self.n == 0 {
            return field("n", "must be positive".into());
        }
        if self.experiment == ExperimentKind::Fig1Ks {
            if self.n_rep < 100 {
                return field("n_rep", format!("KS curves need at least 100 replicates, got {}", self.n_rep));
            }
            self.time_grid.points()?;
        }
        if uses_target && self.functions.is_empty() && self.experiment != ExperimentKind::Fig1Ks {
            return field("functions", "must not be empty".into());
        }
        if self.workers == Some(0) {
            return field("workers", "must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.max_degenerate_fraction) {
            return field("max_degenerate_fraction", "must lie in [0, 1]".into());
        }
        if self.experiment == ExperimentKind::RiskFinite {
            if let Some(b) = self.betas.iter().find(|b| !(**b > 0.0 && **b <= 1.0)) {
                return field("betas", format!("beta = {b} must lie in (0, 1]"));
            }
            if let Err(e) = Target::finite(self.pi.clone()) {
                return field("pi", e.to_string());
            }
            if let Some(q) = &self.q {
                if q.len() != self.pi.len() {
                    return field("q", format!("has {} entries, pi has {}", q.len(), self.pi.len()));
                }
                if let Err(e) = Target::finite(q.clone()) {
                    return field("q", e.to_string());
                }
            }
        }
        if self.experiment == ExperimentKind::DriftVerify {
            if let Some(s) = self.scenarios.iter().find(|s| !DRIFT_SCENARIOS.contains(&s.as_str())) {
                return field(
                    "scenarios",
                    format!("unknown scenario `{s}` (expected superexp, polytail or polytail_lower)"),
                );
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_presets() {
        let c = ExperimentConfig::from_toml_str("experiment = \"table1_is\"\n").unwrap();
        assert_eq!(c, ExperimentConfig::preset(ExperimentKind::Table1Is));
        let c = ExperimentConfig::from_toml_str("experiment = \"fig1_ks\"\nn_rep = 200\nworkers = 2\n").unwrap();
        assert_eq!((c.n_rep, c.workers, c.betas.clone()), (200, Some(2), vec![0.55, 0.65]));
        assert_eq!(c.target.target(), &Target::student_t(4.0).unwrap());
    }

    #[test]
    fn unknown_keys_fail_with_location() {
        let e = ExperimentConfig::from_toml_str("experiment = \"table1_is\"\nbetaz = [0.5]\n").unwrap_err();
        let Error::Config(msg) = e else { panic!("{e:?}") };
        assert!(msg.contains("betaz") && msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn field_diagnostics() {
        let bad = [
            ("experiment = \"table1_is\"\ntarget = \"poly_tail(5)\"\nbetas = [0.1]\n", "betas"),
            ("experiment = \"table1_mcmc\"\nn_rep = 0\n", "n_rep"),
            ("experiment = \"fig1_ks\"\ntime_grid = [0, 2, 1]\n", "time_grid"),
            ("experiment = \"risk_finite\"\npi = [0.5, 0.6]\n", "pi"),
            ("experiment = \"drift_verify\"\nscenarios = [\"prop9\"]\n", "scenarios"),
            ("experiment = \"custom\"\ntarget = \"cauchy(0)\"\n", "cauchy"),
            ("betas = [0.5]\n", "experiment"),
            ("experiment = \"table1_is\"\nfunctions = [\"power(x)\"]\n", "power(x)"),
        ];
        for (text, needle) in bad {
            let Err(Error::Config(msg)) = ExperimentConfig::from_toml_str(text) else { panic!("{text} accepted") };
            assert!(msg.contains(needle), "{needle}: {msg}");
        }
    }

    #[test]
    fn specs_round_trip() {
        for s in ["gaussian(0,1)", "student_t(4)", "poly_tail(5)", "super_exp(1,2)", "finite(0.25,0.75)"] {
            assert_eq!(s.parse::<TargetSpec>().unwrap().to_string(), s);
        }
        for s in ["gaussian(2)", "truncated(1)"] {
            assert_eq!(s.parse::<ProposalSpec>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn smoke_scales_replicates() {
        assert_eq!(ExperimentConfig::preset(ExperimentKind::Table1Mcmc).smoke().n_rep, 100);
        assert_eq!(ExperimentConfig::preset(ExperimentKind::Fig1Ks).smoke().n_rep, 500);
        let mut c = ExperimentConfig::preset(ExperimentKind::Fig1Ks);
        c.n_rep = 200;
        assert_eq!(c.smoke().n_rep, 100);
    }

    #[test]
    fn default_grid() {
        let g = TimeGrid::default_geometric().points().unwrap();
        assert_eq!(g.len(), 82);
        assert_eq!(g[0], 0.0);
        assert!((g[81] - 1000.0).abs() < 1e-9);
    }
}
