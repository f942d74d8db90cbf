use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use spillover_core::montecarlo::SimConfig;

fn spillover(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spillover"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = spillover(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    spillover(dir, args).status.code().unwrap()
}

#[test]
fn simulate_writes_36_rows_and_a_replayable_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["simulate", "--design", "all", "--c", "0,-0.5", "--n", "100", "--reps", "4", "--seed", "9", "--out", "t.csv"]);
    let csv = fs::read_to_string(d.join("t.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 37);
    assert_eq!(
        lines[0],
        "design,c,spec,coef,mean_estimate,true_coef,bias,ci_low,ci_high,coverage,mc_se,n_excluded"
    );
    assert!(lines[1].starts_with("1,0,t_reg,spillover,"));
    assert!(lines[36].starts_with("3,-0.5,dbar_star_reg,direct,"));

    let text = fs::read_to_string(d.join("t.manifest.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let configs: Vec<SimConfig> = serde_json::from_value(value["configs"].clone()).unwrap();
    assert_eq!(configs.len(), 6);
    assert!(configs.iter().all(|c| c.reps == 4 && c.n == 100 && c.base_seed == 9));
    assert_eq!(serde_json::to_value(&configs).unwrap(), value["configs"]);
    let outputs: Vec<String> = serde_json::from_value(value["outputs"].clone()).unwrap();
    assert_eq!(outputs, ["t.csv", "t.manifest.json"]);

    ok(d, &["simulate", "--config", "t.manifest.json", "--out", "replay.csv"]);
    assert_eq!(fs::read(d.join("replay.csv")).unwrap(), csv.as_bytes());
}

#[test]
fn simulate_is_identical_serial_and_parallel() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let base = ["simulate", "--design", "1", "--c", "-0.5", "--n", "200", "--reps", "20"];
    ok(d, &[&base[..], &["--out", "a.csv"]].concat());
    ok(d, &[&base[..], &["--out", "b.csv", "--serial"]].concat());
    assert_eq!(fs::read(d.join("a.csv")).unwrap(), fs::read(d.join("b.csv")).unwrap());
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("run.toml"),
        "n = 150\nreps = 3\nbase_seed = 5\ndesigns = [2]\nc = [-0.5]\n\n[generator]\nkind = \"erdos_renyi\"\nmean_degree = 3.0\n",
    )
    .unwrap();
    ok(d, &["simulate", "--config", "run.toml", "--reps", "6", "--out", "r.csv"]);
    let value: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("r.manifest.json")).unwrap()).unwrap();
    let cfg = &value["configs"][0];
    assert_eq!(cfg["n"], 150);
    assert_eq!(cfg["reps"], 6);
    assert_eq!(cfg["base_seed"], 5);
    assert_eq!(cfg["design"]["id"], 2);
    assert_eq!(cfg["generator"]["kind"], "erdos_renyi");

    fs::write(d.join("bad.toml"), "reps = 3\nunknown_key = 1\n").unwrap();
    assert_eq!(code(d, &["simulate", "--config", "bad.toml"]), 2);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(d, &["simulate", "--reps", "0"]), 2);
    assert_eq!(code(d, &["simulate", "--p", "1.5", "--reps", "2"]), 2);
    assert_eq!(code(d, &["simulate", "--design", "7"]), 2);
    assert_eq!(code(d, &["simulate", "--no-such-flag"]), 2);
    assert_eq!(code(d, &["scatter", "--graph", "er"]), 2);
    assert_eq!(code(d, &["oracle", "--histogram", "h.csv", "--n", "10"]), 2);
}

#[test]
fn degenerate_simulation_exits_with_singular_code() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = ["simulate", "--graph", "er", "--mean-degree", "1e-9", "--n", "10", "--reps", "3", "--design", "3", "--c", "0"];
    assert_eq!(code(d, &args), 4);
}

#[test]
fn scatter_is_deterministic_and_marks_undefined_r2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let first = ok(d, &["scatter", "--seed", "3", "--out", "a.csv"]);
    ok(d, &["scatter", "--seed", "3", "--out", "b.csv"]);
    let a = fs::read(d.join("a.csv")).unwrap();
    assert_eq!(a, fs::read(d.join("b.csv")).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().next().unwrap(), "node,degree,dbar,dbar_star,isolated");
    assert_eq!(text.lines().count(), 1001);
    assert!(text.lines().any(|l| l.ends_with(",,0,1")));
    assert!(first.contains("r2(degree, dbar_star)"));

    let sparse = ok(d, &["scatter", "--graph", "er", "--mean-degree", "0.01", "--out", "s.csv"]);
    assert!(sparse.contains("r2(degree, dbar | degree>0)  undefined"), "{sparse}");
}

#[test]
fn oracle_from_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("h.csv"), "degree,count\n0,1\n1,1\n").unwrap();
    ok(d, &["oracle", "--histogram", "h.csv", "--design", "2,3", "--c", "0", "--p", "0.5", "--out", "o.csv"]);
    let csv = fs::read_to_string(d.join("o.csv")).unwrap();
    let value = |design: &str, q: &str| -> f64 {
        csv.lines()
            .find(|l| l.starts_with(&format!("{design},0,{q},")))
            .unwrap()
            .rsplit(',')
            .next()
            .unwrap()
            .parse()
            .unwrap()
    };
    // Δθ⁰⁰ = 1, p_γ = 1/2, E(1/γ | γ>0) = 1: bias = (1/2) / (1/4 + 1/2).
    assert!((value("2", "eta_dbar_bias") - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(value("3", "eta_dbar_bias"), 0.0);
}

#[test]
fn oracle_on_calibrated_graph() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(dir.path(), &["oracle", "--design", "1", "--c", "0", "--n", "20000"]);
    let line = text.lines().find(|l| l.contains("isolation bias")).unwrap();
    let bias: f64 = line.split_whitespace().nth(2).unwrap().parse().unwrap();
    assert!((bias - 0.704).abs() < 0.03, "{line}");
    assert!(line.contains("weighted part 0.000000"));
}

#[test]
fn audit_round_trip_on_synthetic_data() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["scatter", "--n", "4000", "--seed", "11", "--edges-out", "e.csv", "--data-out", "y.csv", "--design", "1", "--c", "0", "--out", "s.csv"]);
    let text = ok(d, &["audit", "--edges", "e.csv", "--data", "y.csv", "--out", "audit.json"]);
    assert!(text.contains("WARNING"), "{text}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("audit.json")).unwrap()).unwrap();
    let spill = |name: &str| report[name]["coefficients"][2].as_f64().unwrap();
    assert!((spill("dbar_star_fit") - 0.70).abs() < 0.2);
    assert!(spill("dbar_fit").abs() < 0.2);

    ok(d, &["scatter", "--n", "600", "--k", "4", "--beta", "0.3", "--delete-prob", "0", "--edges-out", "e0.csv", "--data-out", "y0.csv", "--out", "s0.csv"]);
    let text = ok(d, &["audit", "--edges", "e0.csv", "--data", "y0.csv"]);
    assert!(!text.contains("WARNING"), "{text}");
}

#[test]
fn audit_ingestion_and_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("e.csv"), "src,dst\n0,1\n1,2\n").unwrap();
    fs::write(d.join("bad.csv"), "id,treatment,outcome\n0,1,1.0\n1,2,0.5\n2,0,0.1\n").unwrap();
    let out = spillover(d, &["audit", "--edges", "e.csv", "--data", "bad.csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 1"));

    fs::write(d.join("renamed.csv"), "unit,z,y\n0,1,1.0\n1,0,0.5\n2,0,0.1\n3,1,0.3\n4,1,0.9\n").unwrap();
    assert_eq!(code(d, &["audit", "--edges", "e.csv", "--data", "renamed.csv"]), 3);
    assert_eq!(
        code(d, &["audit", "--edges", "e.csv", "--data", "renamed.csv", "--id-col", "unit", "--treatment-col", "z", "--outcome-col", "y"]),
        0
    );
    assert_eq!(code(d, &["audit", "--edges", "e.csv", "--data", "missing.csv"]), 5);
}
