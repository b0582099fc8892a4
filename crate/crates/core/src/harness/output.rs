//! Long-format CSV rows and the JSON metadata sidecar.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::fmt_real;
use crate::error::{Error, Result};

pub const HEADER: [&str; 7] = ["experiment_id", "beta", "init", "t_or_n", "metric_name", "value", "stderr"];

/// One output row. Missing numeric cells are written empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub experiment_id: String,
    pub beta: Option<f64>,
    pub init: Option<f64>,
    pub t_or_n: Option<f64>,
    pub metric_name: String,
    pub value: f64,
    pub stderr: Option<f64>,
}

impl Row {
    pub fn new(experiment_id: impl Into<String>, metric_name: impl Into<String>, value: f64) -> Self {
        Self {
            experiment_id: experiment_id.into(),
            beta: None,
            init: None,
            t_or_n: None,
            metric_name: metric_name.into(),
            value,
            stderr: None,
        }
    }

    pub fn beta(mut self, beta: f64) -> Self {
        self.beta = Some(beta);
        self
    }

    pub fn init(mut self, init: f64) -> Self {
        self.init = Some(init);
        self
    }

    pub fn t_or_n(mut self, t: f64) -> Self {
        self.t_or_n = Some(t);
        self
    }

    pub fn stderr(mut self, se: Option<f64>) -> Self {
        self.stderr = se;
        self
    }

    fn record(&self) -> [String; 7] {
        let opt = |v: Option<f64>| v.map(fmt_real).unwrap_or_default();
        [
            self.experiment_id.clone(),
            opt(self.beta),
            opt(self.init),
            opt(self.t_or_n),
            self.metric_name.clone(),
            fmt_real(self.value),
            opt(self.stderr),
        ]
    }
}

pub fn write_rows<W: Write>(rows: &[Row], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<Row>> {
    let mut rd = csv::Reader::from_reader(input);
    if rd.headers()?.iter().ne(HEADER) {
        return Err(Error::Io(format!("unexpected CSV header {:?}", rd.headers()?)));
    }
    let num = |s: &str| -> Result<f64> { s.parse().map_err(|_| Error::Io(format!("bad number `{s}` in CSV"))) };
    let opt = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            num(s).map(Some)
        }
    };
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        rows.push(Row {
            experiment_id: rec[0].to_string(),
            beta: opt(&rec[1])?,
            init: opt(&rec[2])?,
            t_or_n: opt(&rec[3])?,
            metric_name: rec[4].to_string(),
            value: num(&rec[5])?,
            stderr: opt(&rec[6])?,
        });
    }
    Ok(rows)
}

/// A reference value `Π(f)` and how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Truth {
    pub target: String,
    pub function: String,
    pub value: f64,
    pub provenance: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata<'a, C: Serialize> {
    pub version: String,
    pub wall_time_seconds: f64,
    pub smoke: bool,
    pub configs: &'a [C],
    pub truths: Vec<Truth>,
    pub labels: Vec<(String, String)>,
    pub degenerate_replicates: usize,
    pub replicate_evaluations: usize,
}

pub fn version_string() -> String {
    format!("v{}-{}", env!("CARGO_PKG_VERSION"), option_env!("TEMPERED_IS_GIT_REV").unwrap_or("untracked"))
}

/// `<out>.meta.json` next to the CSV.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    let mut s = csv_path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn write_metadata<C: Serialize>(path: &Path, meta: &Metadata<'_, C>) -> Result<()> {
    let text = serde_json::to_string_pretty(meta).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}
