use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_data-pricing"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const CONFIG: &str = r#"
schema_version = 1

[instance]
n_total = 6
types = [
    { kind = "linear", ceiling = 0.8 },
    { kind = "power_law", alpha = 0.9, beta = 0.5, gamma = 0.5 },
]

[space]
scheme = "monotone"
epsilon = 0.3

[run]
horizon = 60
seeds = [3, 5]

[stochastic]
distribution = [0.4, 0.6]

[adversarial]
kind = "periodic"
pattern = [0, 1, 1]

[sweep]
setting = "stochastic"
horizons = [30, 60]
"#;

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("exp.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn discretize_reports_value_grid() {
    let o = bin(&["discretize", "--scheme", "monotone", "--eps", "0.5", "--m", "1", "--n", "10"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.lines().any(|l| l == "|W|=6"), "{out}");
    assert!(out.lines().any(|l| l == "data_grid=10"));
    assert!(out.lines().any(|l| l == "exact_count=6"));
}

#[test]
fn discretize_writes_report_to_out() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    let o = bin(&[
        "discretize", "--scheme", "smooth", "--eps", "0.5", "--m", "2", "--n", "20", "--L", "1.0", "--seed", "9",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("discretize.json")).unwrap()).unwrap();
    assert_eq!(v["value_grid_len"], 9);
    assert_eq!(v["data_grid_len"], 4);
}

#[test]
fn missing_flag_fails_without_output() {
    let o = bin(&["discretize", "--scheme", "monotone", "--eps", "0.5", "--m", "1"]);
    assert!(!o.status.success());
    assert!(o.stdout.is_empty());
    let err = stderr(&o);
    assert!(err.lines().next().unwrap().starts_with("error[usage]: "), "{err}");
    assert!(err.contains("--n"));
}

#[test]
fn unknown_flag_fails() {
    let o = bin(&["sweep", "--config", "x.toml", "--verbose"]);
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error[usage]: "));
}

#[test]
fn library_errors_are_one_line() {
    let o = bin(&["discretize", "--scheme", "smooth", "--eps", "0.5", "--m", "1", "--n", "10"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error[invalid_parameter]: "));
}

#[test]
fn invalid_config_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CONFIG.replace("epsilon = 0.3", "epsilon = 1.5"));
    let o = bin(&["simulate-stochastic", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error[config]: "), "{err}");
    assert!(err.contains("line 13"), "{err}");
    assert!(o.stdout.is_empty());
}

#[test]
fn simulations_write_traces_and_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = dir.path().join("runs");
    for (cmd, setting) in [("simulate-stochastic", "stochastic"), ("simulate-adversarial", "adversarial")] {
        let o = bin(&[cmd, "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert_eq!(stdout(&o).lines().count(), 3);
        for seed in [3, 5] {
            let trace = fs::read_to_string(out.join(format!("{setting}_trace_{seed}.csv"))).unwrap();
            assert_eq!(trace.lines().count(), 61);
            assert!(out.join(format!("{setting}_summary_{seed}.json")).exists());
        }
    }
}

#[test]
fn seed_flag_overrides_config_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = dir.path().join("one");
    let o = bin(&["simulate-adversarial", "--config", &cfg, "--seed", "11", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let names: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names.len(), 2);
    assert!(names.iter().all(|n| n.ends_with("_11.csv") || n.ends_with("_11.json")));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = dir.path().join("a");
    let names = ["stochastic_trace_3.csv", "stochastic_summary_5.json"];
    let mut seen = Vec::new();
    for _ in 0..2 {
        assert!(bin(&["simulate-stochastic", "--config", &cfg, "--out", out.to_str().unwrap()]).status.success());
        seen.push(names.map(|n| fs::read(out.join(n)).unwrap()));
        fs::remove_dir_all(&out).unwrap();
    }
    assert_eq!(seen[0], seen[1]);
}

#[test]
fn sweep_two_by_two_gives_four_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = dir.path().join("sw");
    let o = bin(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 5);
    let means = stdout(&o);
    assert_eq!(means.lines().count(), 3);
    assert!(means.lines().nth(1).unwrap().starts_with("30,2,"));
}

#[test]
fn offline_and_oracle_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = dir.path().join("o");
    let o = bin(&["offline-opt", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let best: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("offline_opt.json")).unwrap()).unwrap();
    let space_rev = best["revenue"].as_f64().unwrap();

    let o = bin(&["oracle-check", "--config", &cfg, "--resolution", "0.05", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("oracle_check.json")).unwrap()).unwrap();
    assert_eq!(report["space_revenue"].as_f64().unwrap(), space_rev);
    assert_eq!(report["within"], true);
    assert!(report["oracle_revenue"].as_f64().unwrap() >= space_rev - 0.05 - 1e-9);
}
