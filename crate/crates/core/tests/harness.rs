use std::fs;

use tempered_is::harness::{execute, read_rows, ExperimentConfig, ExperimentKind};

fn small(kind: ExperimentKind) -> ExperimentConfig {
    let mut c = ExperimentConfig::preset(kind);
    c.n_rep = 40;
    c.n = 200;
    c
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut fig1 = ExperimentConfig::preset(ExperimentKind::Fig1Ks);
    fig1.n_rep = 100;
    fig1.time_grid = tempered_is::harness::TimeGrid::Points(vec![0.0, 1.0, 5.0, 25.0]);
    let mut fig2 = ExperimentConfig::fig2_t4_preset();
    fig2.n_rep = 30;
    fig2.betas = vec![0.5, 1.0];
    let base = [small(ExperimentKind::Table1Mcmc), fig1, fig2];
    let mut outputs = Vec::new();
    for workers in [1, 3, 8] {
        let cs: Vec<_> = base
            .iter()
            .cloned()
            .map(|mut c| {
                c.workers = Some(workers);
                c
            })
            .collect();
        let path = dir.path().join(format!("w{workers}.csv"));
        execute(&cs, Some(&path), false).unwrap();
        outputs.push(fs::read(&path).unwrap());
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn every_written_row_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/out.csv");
    let cs = [ExperimentConfig::preset(ExperimentKind::Table1Is), small(ExperimentKind::Table1Mcmc)];
    let s = execute(&cs, Some(&path), false).unwrap();
    let bytes = fs::read(&path).unwrap();
    let rows = read_rows(bytes.as_slice()).unwrap();
    assert_eq!(rows, s.rows);
    let mut again = Vec::new();
    tempered_is::harness::write_rows(&rows, &mut again).unwrap();
    assert_eq!(again, bytes);
    let meta: serde_json::Value = serde_json::from_slice(&fs::read(&s.meta_path).unwrap()).unwrap();
    assert_eq!(meta["configs"].as_array().unwrap().len(), 2);
    assert!(meta["version"].as_str().unwrap().starts_with('v'));
    let truths = meta["truths"].as_array().unwrap();
    let log_abs = truths.iter().find(|t| t["function"] == "log_abs").unwrap();
    assert_eq!(log_abs["provenance"], "adaptive quadrature");
    assert!((log_abs["value"].as_f64().unwrap() + 0.635_181_422_730_739).abs() < 1e-10);
}

#[test]
fn single_replicate_gives_one_finite_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small(ExperimentKind::Table1Mcmc);
    c.n_rep = 1;
    let s = execute(&[c], Some(&dir.path().join("one.csv")), false).unwrap();
    assert_eq!(s.rows.len(), 2 * 2 * 5);
    assert!(s.rows.iter().all(|r| r.value.is_finite() && r.stderr.is_none()));
}

#[test]
fn is_table_has_ten_cells() {
    let dir = tempfile::tempdir().unwrap();
    let s = execute(&[ExperimentConfig::preset(ExperimentKind::Table1Is)], Some(&dir.path().join("is.csv")), false)
        .unwrap();
    assert_eq!(s.rows.len(), 10);
    let x4 = s.rows.iter().find(|r| r.beta == Some(0.4) && r.metric_name == "var_ratio[power(4)]").unwrap();
    assert!((x4.value - 0.234).abs() < 0.005);
}

#[test]
fn risk_and_drift_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut risk = ExperimentConfig::preset(ExperimentKind::RiskFinite);
    risk.pi = vec![0.7, 0.3];
    risk.q = Some(vec![0.5, 0.5]);
    let s = execute(
        &[risk, ExperimentConfig::preset(ExperimentKind::DriftVerify)],
        Some(&dir.path().join("rd.csv")),
        false,
    )
    .unwrap();
    let lambda = s.rows.iter().find(|r| r.metric_name == "risk[lambda_root]").unwrap();
    assert!((lambda.value - 0.84).abs() < 1e-9);
    let holds: Vec<f64> = s.rows.iter().filter(|r| r.metric_name == "holds").map(|r| r.value).collect();
    assert_eq!(holds, vec![1.0; 3]);
}

#[test]
fn config_files_drive_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("custom.csv");
    let toml = format!(
        "experiment = \"custom\"\ntarget = \"student_t(5)\"\nbetas = [0.6]\nfunctions = [\"identity\", \"sqrt_abs\"]\n\
         n = 300\nn_rep = 20\ninits = [0.5]\nmaster_seed = 9\noutput_path = {:?}\nproposal = \"truncated(2)\"\n",
        out.display().to_string()
    );
    let path = dir.path().join("c.toml");
    fs::write(&path, toml).unwrap();
    let c = ExperimentConfig::from_path(&path).unwrap();
    let s = execute(&[c], None, false).unwrap();
    assert_eq!(s.csv_path, out);
    let names: Vec<&str> = s.rows.iter().map(|r| r.metric_name.as_str()).collect();
    assert_eq!(
        names,
        ["is_var_ratio[identity]", "is_var_ratio[sqrt_abs]", "mcmc_var_ratio[identity]", "mcmc_var_ratio[sqrt_abs]"]
    );
}
