use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tempered-is")).args(args).output().expect("binary runs")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn table1_smoke_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t1.csv");
    let o = run(&["table1", "--smoke", "--out", arg(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("experiment_id,beta,init,t_or_n,metric_name,value,stderr\n"));
    assert_eq!(csv.lines().count(), 1 + 10 + 20);
    let meta = fs::read_to_string(dir.path().join("t1.csv.meta.json")).unwrap();
    assert!(meta.contains("\"smoke\": true") && meta.contains("wall_time_seconds"));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("table1_is") && stdout.contains("0.3582"), "{stdout}");
}

#[test]
fn seed_and_workers_flags() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = ["a", "b", "c"].iter().map(|n| dir.path().join(format!("{n}.csv"))).collect();
    assert!(run(&["table1", "--smoke", "--seed", "5", "--workers", "1", "--out", arg(&paths[0])]).status.success());
    assert!(run(&["table1", "--smoke", "--seed", "5", "--workers", "4", "--out", arg(&paths[1])]).status.success());
    assert!(run(&["table1", "--smoke", "--seed", "6", "--out", arg(&paths[2])]).status.success());
    let [a, b, c] = [0, 1, 2].map(|i| fs::read(&paths[i]).unwrap());
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn fig1_at_one_hundred_replicates_is_quick() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fig1.toml");
    let out = dir.path().join("fig1.csv");
    fs::write(&cfg, format!("experiment = \"fig1_ks\"\nn_rep = 100\noutput_path = {:?}\n", arg(&out))).unwrap();
    let start = Instant::now();
    let o = run(&["run", arg(&cfg)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(start.elapsed() < Duration::from_secs(60));
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.lines().any(|l| l.contains(",merge_time,")));
    assert_eq!(csv.lines().filter(|l| l.contains(",ks,")).count(), 2 * 4 * 82);
}

#[test]
fn risk_and_drift_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["risk", "--pi", "0.7,0.3", "--q", "0.5,0.5", "--out", arg(&dir.path().join("r.csv"))]);
    assert!(o.status.success());
    let s = String::from_utf8(o.stdout).unwrap();
    assert!(s.contains("risk[lambda_root] = 0.84"), "{s}");
    assert!(s.contains("minimax_atom_risk[atom=0] = 0.84"), "{s}");
    let o = run(&["drift", "--out", arg(&dir.path().join("d.csv"))]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap().matches("holds = 1").count(), 3);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "experiment = \"table1_is\"\nbetas = [0.4]\nbetaz = 3\n").unwrap();
    let o = run(&["run", arg(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line 3") && err.contains("betaz"), "{err}");

    fs::write(&cfg, "experiment = \"table1_is\"\ntarget = \"poly_tail(5)\"\nbetas = [0.1]\n").unwrap();
    let o = run(&["run", arg(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("field `betas`"));

    assert_eq!(run(&["run", arg(&dir.path().join("missing.toml"))]).status.code(), Some(2));
    assert_eq!(run(&["nonsense"]).status.code(), Some(2));
    assert_eq!(run(&["risk", "--pi", "0.5,0.6"]).status.code(), Some(2));
}

#[test]
fn degenerate_replicates_exit_with_three() {
    // exp(-|x|^300) underflows to zero weight everywhere the chain can reach from 20
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("deg.toml");
    let out = dir.path().join("deg.csv");
    fs::write(
        &cfg,
        format!(
            "experiment = \"table1_mcmc\"\ntarget = \"super_exp(1,300)\"\nbetas = [0.5]\nfunctions = [\"identity\"]\n\
             n = 1\nn_rep = 20\ninits = [20]\noutput_path = {:?}\n",
            arg(&out)
        ),
    )
    .unwrap();
    let o = run(&["run", arg(&cfg)]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.contains("degenerate[identity]"), "{csv}");
}
