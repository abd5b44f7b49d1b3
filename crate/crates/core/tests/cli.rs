use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use econfit::pipeline::RunManifest;

fn econfit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_econfit"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

const TRADE: &str = "\
year,exporter,product,value
2000,A,p1,10
2000,A,p2,1
2000,B,p2,5
2000,B,p3,5
2000,C,p1,1
2000,C,p2,1
2000,C,p3,8
2000,D,p4,0
2000,B,p9,-1
";

#[test]
fn stagewise_commands_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("trade.csv"), TRADE).unwrap();

    let o = econfit(d, &["ingest", "--trade", "trade.csv", "--year", "2000", "--out", "x.csv", "--rejections", "rej.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rej = fs::read_to_string(d.join("rej.csv")).unwrap();
    assert_eq!(rej.lines().count(), 2);
    assert!(rej.contains("nonnegativity"));

    assert_eq!(code(&econfit(d, &["rca", "--in", "x.csv", "--out", "r.csv"])), 0);
    assert_eq!(code(&econfit(d, &["binarize", "--in", "r.csv", "--out", "full.csv", "--no-prune"])), 0);
    assert_eq!(code(&econfit(d, &["binarize", "--in", "r.csv", "--threshold", "1", "--prune", "--out", "m.csv"])), 0);
    let full = fs::read_to_string(d.join("full.csv")).unwrap();
    let pruned = fs::read_to_string(d.join("m.csv")).unwrap();
    assert!(full.contains(",D,"));
    assert!(!pruned.contains(",D,"));

    let o = econfit(d, &["fitness", "--in", "m.csv", "--tol", "1e-9", "--out", "f.csv", "--diagnostics", "diag.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let f = fs::read_to_string(d.join("f.csv")).unwrap();
    assert!(f.starts_with("country,fitness,rank,norm_rank"));
    assert!(d.join("complexity.csv").exists());
    let diag: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("diag.json")).unwrap()).unwrap();
    assert!(diag.get("converged_by").is_some());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // Missing input file: data error.
    assert_eq!(code(&econfit(d, &["rca", "--in", "nope.csv", "--out", "r.csv"])), 2);
    // Bad option value: configuration error.
    assert_eq!(code(&econfit(d, &["fitness", "--in", "m.csv", "--tol", "-1", "--out", "f.csv"])), 1);
    // Unpruned input to fitness: numerical/degenerate.
    fs::write(d.join("m.csv"), "year,country,p1,p2\n0,A,1,0\n0,B,0,0\n").unwrap();
    assert_eq!(code(&econfit(d, &["fitness", "--in", "m.csv", "--out", "f.csv"])), 3);
    // Unknown colormap variable suggests a fix.
    let o = econfit(d, &["colormap", "--panel", "g.csv", "--x", "log_gdp", "--out", "s.csv"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("did you mean"));
}

#[test]
fn synth_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for name in ["a.csv", "b.csv"] {
        let o = econfit(d, &["synth", "tripartite", "--nc", "10", "--nk", "6", "--np", "25", "--seed", "4", "--out", name]);
        assert_eq!(code(&o), 0);
    }
    assert_eq!(fs::read(d.join("a.csv")).unwrap(), fs::read(d.join("b.csv")).unwrap());
    // Global seed is used when the subcommand has none.
    econfit(d, &["--seed", "4", "synth", "nested", "--nc", "5", "--np", "6", "--out", "n1.csv"]);
    econfit(d, &["synth", "nested", "--nc", "5", "--np", "6", "--seed", "4", "--out", "n2.csv"]);
    assert_eq!(fs::read(d.join("n1.csv")).unwrap(), fs::read(d.join("n2.csv")).unwrap());
}

const STUDY: &str = r#"
seed = 3
output_dir = "out"
[inputs]
trade = "in/trade.csv"
macro = "in/panel.csv"
[years]
start = 1990
end = 1991
[[regression]]
name = "main"
"#;

#[test]
fn validate_reports_each_violation() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("ok.toml"), STUDY).unwrap();
    let o = econfit(d, &["validate", "--config", "ok.toml"]);
    assert_eq!(code(&o), 0);

    let bad = format!("{STUDY}[fitness]\nvalue_tolerance = -1e-6\n");
    fs::write(d.join("bad.toml"), bad).unwrap();
    let o = econfit(d, &["validate", "--config", "bad.toml"]);
    assert_eq!(code(&o), 1);
    let out = String::from_utf8_lossy(&o.stdout);
    assert_eq!(out.lines().count(), 1);
    assert!(out.contains("fitness.value_tolerance"));
}

#[test]
fn missing_input_stops_at_ingest() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("study.toml"), STUDY).unwrap();
    let o = econfit(d, &["run", "--config", "study.toml"]);
    assert_eq!(code(&o), 2);
    let manifest: RunManifest =
        serde_json::from_str(&fs::read_to_string(d.join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.status, "failed");
    assert_eq!(manifest.failed_stage.as_deref(), Some("ingest"));
    assert!(manifest.artifacts.is_empty());
    let files: Vec<_> = fs::read_dir(d.join("out")).unwrap().collect();
    assert_eq!(files.len(), 1);
}

#[test]
fn run_with_out_dir_override() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = econfit(d, &["synth", "economy", "--seed", "9", "--trade", "in/trade.csv", "--macro", "in/panel.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    fs::write(d.join("study.toml"), STUDY).unwrap();
    let o = econfit(d, &["--out-dir", "elsewhere", "run", "--config", "study.toml"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: RunManifest =
        serde_json::from_str(&fs::read_to_string(d.join("elsewhere/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.status, "ok");
    for name in ["m_1990.csv", "fitness_1991.csv", "growth.csv", "report_main.json"] {
        assert!(manifest.artifact(name).is_some(), "{name} missing");
    }
    assert_eq!(manifest.convergence.len(), 2);
}
