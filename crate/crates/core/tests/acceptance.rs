//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use econfit::econometrics::{regress, Covariance, RegressionOptions};
use econfit::fitness::{
    compute_fitness, is_lower_staircase, triangular_order, FitnessConfig, InitialComplexity,
    StopReason,
};
use econfit::kernelmap::{evaluate_grid, nw_estimate};
use econfit::matrix::{BinaryMatrix, ExportMatrix};
use econfit::pipeline::{run_pipeline, PipelineConfig};
use econfit::rca::{compute_rca, prune};
use econfit::stats::median;
use econfit::synthetic::{
    capability_fitness_spearman, generate_nested, generate_tripartite, rng_from_seed,
    LinkDensities,
};
use rand::Rng;

use common::*;

type Outcome = Result<String, String>;

fn e<T>(r: econfit::Result<T>) -> Result<T, String> {
    r.map_err(|err| err.to_string())
}

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit_s: f64, what: &str) -> Result<(), String> {
    check(
        elapsed.as_secs_f64() < limit_s,
        format!("{what} took {:.2}s (limit {limit_s}s)", elapsed.as_secs_f64()),
    )
}

/// Long-run configuration: no rank stop, tight value tolerance.
fn long_run(max_iterations: usize, tol: f64) -> FitnessConfig {
    FitnessConfig {
        max_iterations,
        value_tolerance: tol,
        rank_stability_window: None,
        ..Default::default()
    }
}

fn fixed_point_2x2() -> Outcome {
    let start = Instant::now();
    let rows = vec![vec![1u8, 1], vec![1, 0]];
    let m = BinaryMatrix::from_rows(&[vec![true, true], vec![true, false]]).map_err(|e| e.to_string())?;
    let res = compute_fitness(&m, &long_run(10_000, 1e-12)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let (f, q, sweeps) = fitness_oracle(&rows, &[1.0, 1.0], 10_000, 1e-12);

    let err = f
        .iter()
        .zip(&res.fitness)
        .chain(q.iter().zip(&res.complexity))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    check(err <= 1e-9, format!("max deviation from oracle {err:e}"))?;
    check(res.iterations_run == sweeps, format!("sweeps {} vs oracle {sweeps}", res.iterations_run))?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    check((mean(&res.fitness) - 1.0).abs() <= 1e-12, "mean(F) != 1")?;
    check((mean(&res.complexity) - 1.0).abs() <= 1e-12, "mean(Q) != 1")?;
    // Closed form: the ratio r = Q_1/Q_2 maps to r/(1+2r), so after n sweeps
    // r = 1/(2n+1) and the iteration decays without a positive fixed point.
    let n = sweeps as f64;
    let q_raw = [1.0 / (2.0 * n + 1.0), 1.0];
    let qm = (q_raw[0] + q_raw[1]) / 2.0;
    let closed = [q_raw[0] / qm, q_raw[1] / qm];
    let cerr = (closed[0] - res.complexity[0]).abs().max((closed[1] - res.complexity[1]).abs());
    check(cerr <= 1e-9, format!("closed-form deviation {cerr:e}"))?;
    within(elapsed, 1.0, "2x2 fitness")?;
    Ok(format!(
        "max |impl - oracle| = {err:.1e} after {sweeps} sweeps, {:.1} ms",
        elapsed.as_secs_f64() * 1e3
    ))
}

fn initial_condition_independence() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(20240);
    let rows: Vec<Vec<bool>> = random_binary(&mut rng, 30, 30, 0.5);
    let (m, _) = prune(&BinaryMatrix::from_rows(&rows).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let np = m.n_products();
    let mut runs = Vec::new();
    for _ in 0..20 {
        let q0: Vec<f64> = (0..np).map(|_| rng.random_range(-3.0f64..3.0).exp()).collect();
        let cfg = FitnessConfig {
            initial_complexity: InitialComplexity::Custom(q0),
            ..long_run(100_000, 1e-13)
        };
        let res = compute_fitness(&m, &cfg).map_err(|e| e.to_string())?;
        check(
            res.converged_by == StopReason::Value,
            format!("run stopped by {:?} after {}", res.converged_by, res.iterations_run),
        )?;
        runs.push(res);
    }
    let mut worst: f64 = 0.0;
    for a in &runs {
        for b in &runs {
            worst = worst
                .max(max_rel_diff(&a.fitness, &b.fitness))
                .max(max_rel_diff(&a.complexity, &b.complexity));
        }
    }
    let elapsed = start.elapsed();
    check(worst <= 1e-6, format!("pairwise relative sup-norm {worst:e}"))?;
    within(elapsed, 10.0, "20 starts")?;
    Ok(format!(
        "{}x{} pruned, worst pairwise rel. sup-norm {worst:.1e}, {:.2}s",
        m.n_countries(),
        np,
        elapsed.as_secs_f64()
    ))
}

/// Sign agreement: `a_i > a_j` iff `b_i > b_j`, equal iff equal.
fn same_order(a: &[f64], b: &[f64]) -> bool {
    (0..a.len()).all(|i| (0..a.len()).all(|j| a[i].total_cmp(&a[j]) == b[i].total_cmp(&b[j])))
}

fn nested_dominance() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(3);
    let mut passed = 0;
    let mut failures = Vec::new();
    for seed in 0..100u64 {
        let nc = rng.random_range(2..=50);
        let np = rng.random_range(2..=50);
        let (m, _) = prune(&generate_nested(nc, np, seed).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let res = compute_fitness(&m, &FitnessConfig::default()).map_err(|e| e.to_string())?;
        let rows: Vec<f64> = m.row_sums().iter().map(|&s| s as f64).collect();
        let inv_cols: Vec<f64> = m.col_sums().iter().map(|&s| -(s as f64)).collect();
        if same_order(&res.fitness, &rows) && same_order(&res.complexity, &inv_cols) {
            passed += 1;
        } else {
            failures.push(format!("seed {seed} ({nc}x{np})"));
        }
    }
    let elapsed = start.elapsed();
    check(passed == 100, format!("{passed}/100; failed: {}", failures.join(", ")))?;
    within(elapsed, 30.0, "100 nested instances")?;
    Ok(format!("100/100 instances, {:.2}s", elapsed.as_secs_f64()))
}

fn triangularity() -> Outcome {
    for seed in 0..20u64 {
        let (m, _) = prune(&generate_nested(15 + seed as usize, 40, seed).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let res = compute_fitness(&m, &FitnessConfig::default()).map_err(|e| e.to_string())?;
        let sorted = triangular_order(&m, &res).map_err(|e| e.to_string())?;
        check(is_lower_staircase(&sorted), format!("seed {seed}: not a lower staircase"))?;
    }
    Ok("20/20 seeds give an exact lower staircase".into())
}

fn capability_recovery() -> Outcome {
    let mut rhos = Vec::new();
    for seed in 0..50u64 {
        let (model, m) = generate_tripartite(20, 10, 50, LinkDensities::default(), seed)
            .map_err(|e| e.to_string())?;
        let res = compute_fitness(&m, &FitnessConfig::default()).map_err(|e| e.to_string())?;
        let rho = capability_fitness_spearman(&model, &res)
            .ok_or_else(|| format!("seed {seed}: Spearman undefined"))?;
        rhos.push(rho);
    }
    let med = median(&rhos);
    check(med >= 0.8, format!("median Spearman {med:.4} < 0.8"))?;
    Ok(format!("median Spearman {med:.4} over 50 instances"))
}

fn rca_oracle_check() -> Outcome {
    let mut rng = rng_from_seed(6);
    let mut worst: f64 = 0.0;
    let mut worst_scale: f64 = 0.0;
    for _ in 0..50 {
        let nc = rng.random_range(1..=20);
        let np = rng.random_range(1..=20);
        let mut x: Vec<Vec<f64>> = (0..nc)
            .map(|_| {
                (0..np)
                    .map(|_| if rng.random::<f64>() < 0.3 { 0.0 } else { rng.random_range(0.0..1e4) })
                    .collect()
            })
            .collect();
        x[0][0] += 1.0;
        let em = ExportMatrix::from_rows(&x).map_err(|e| e.to_string())?;
        let r = compute_rca(&em).map_err(|e| e.to_string())?;
        let oracle = rca_oracle(&x);
        for (row, orow) in r.rows().zip(&oracle) {
            for (a, b) in row.iter().zip(orow) {
                worst = worst.max((a - b).abs() / b.abs().max(1.0));
            }
        }
        for k in [1e-3, 1.0, 1e6] {
            let scaled = em.map(|v| v * k);
            let rk = compute_rca(&scaled).map_err(|e| e.to_string())?;
            for (a, b) in rk.values().iter().zip(r.values()) {
                worst_scale = worst_scale.max((a - b).abs() / b.abs().max(f64::MIN_POSITIVE));
            }
        }
    }
    check(worst <= 1e-12, format!("oracle deviation {worst:e}"))?;
    check(worst_scale <= 1e-12, format!("scale deviation {worst_scale:e}"))?;
    Ok(format!("oracle dev {worst:.1e}, scale dev {worst_scale:.1e} on 50 matrices"))
}

fn nadaraya_watson() -> Outcome {
    let mut rng = rng_from_seed(7);

    // Constant response.
    let pts: Vec<([f64; 2], f64)> = (0..50)
        .map(|_| ([rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)], 0.731))
        .collect();
    for _ in 0..100 {
        let q = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        let est = e(nw_estimate(&pts, q, [0.4, 0.7]))?;
        check(est.estimate == Some(0.731), format!("constant response gave {:?}", est.estimate))?;
    }

    // Hand value: points (0,0)->0 and (1,0)->1, query at origin, h = 1.
    let hand = e(nw_estimate(&[([0.0, 0.0], 0.0), ([1.0, 0.0], 1.0)], [0.0, 0.0], [1.0, 1.0]))?;
    let expect = (-0.5f64).exp() / (1.0 + (-0.5f64).exp());
    let herr = (hand.estimate.unwrap_or(f64::NAN) - expect).abs();
    check(herr <= 1e-12, format!("hand value off by {herr:e}"))?;

    // Grid vs per-cell oracle.
    let mut grid_err: f64 = 0.0;
    for _ in 0..10 {
        let pts: Vec<([f64; 2], f64)> = (0..100)
            .map(|_| {
                (
                    [rng.random_range(-1.0..1.0), rng.random_range(5.0..9.0)],
                    rng.random_range(-0.05..0.1),
                )
            })
            .collect();
        let h = [rng.random_range(0.05..0.5), rng.random_range(0.2..1.5)];
        let xs: Vec<f64> = (0..25).map(|i| -1.2 + 2.4 * i as f64 / 24.0).collect();
        let ys: Vec<f64> = (0..20).map(|i| 4.5 + 5.0 * i as f64 / 19.0).collect();
        let g = e(evaluate_grid(&pts, &xs, &ys, h))?;
        for (ix, &x) in xs.iter().enumerate() {
            for (iy, &y) in ys.iter().enumerate() {
                let got = g.estimates[ix * ys.len() + iy];
                let want = nw_oracle(&pts, [x, y], h);
                match (got, want) {
                    (Some(a), Some(b)) => grid_err = grid_err.max((a - b).abs()),
                    (None, None) => {}
                    _ => return Err(format!("support mismatch at ({x}, {y})")),
                }
            }
        }
    }
    check(grid_err <= 1e-12, format!("grid deviation {grid_err:e}"))?;

    // Convex-combination bound.
    let pts: Vec<([f64; 2], f64)> = (0..100)
        .map(|_| {
            (
                [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)],
                rng.random_range(-1.0..1.0),
            )
        })
        .collect();
    let (lo, hi) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p.1), h.max(p.1)));
    for _ in 0..1000 {
        let q = [rng.random_range(-0.5..1.5), rng.random_range(-0.5..1.5)];
        let h = [rng.random_range(0.01..1.0), rng.random_range(0.01..1.0)];
        if let Some(v) = e(nw_estimate(&pts, q, h))?.estimate {
            check(lo <= v && v <= hi, format!("estimate {v} outside [{lo}, {hi}]"))?;
        }
    }
    Ok(format!("constant exact, hand err {herr:.1e}, grid err {grid_err:.1e}, bound holds on 1000 queries"))
}

fn regression_recovery() -> Outcome {
    let opts = |fixed_effects, covariance| RegressionOptions {
        include_fitness: true,
        fixed_effects,
        covariance,
    };

    // Noise-free, pooled and fixed effects.
    let mut rng = rng_from_seed(8);
    let mut exact_err: f64 = 0.0;
    for fe in [false, true] {
        let panel = synthetic_growth_panel(&mut rng, 40, 6, &TRUE_BETA, fe, 0.0);
        let res = e(regress(&panel, opts(fe, Covariance::Hc1)))?;
        let truth = if fe { &TRUE_BETA[1..] } else { &TRUE_BETA[..] };
        check(res.coefficients.len() == truth.len(), "wrong coefficient count")?;
        for (c, t) in res.coefficients.iter().zip(truth) {
            exact_err = exact_err.max((c.estimate - t).abs());
        }
    }
    check(exact_err <= 1e-10, format!("noise-free deviation {exact_err:e}"))?;

    // σ = 0.01, n = 500, 100 seeds.
    let mut covered = 0;
    for seed in 0..100u64 {
        let mut rng = rng_from_seed(1000 + seed);
        let panel = synthetic_growth_panel(&mut rng, 100, 5, &TRUE_BETA, false, 0.01);
        let res = e(regress(&panel, opts(false, Covariance::Hc1)))?;
        if res
            .coefficients
            .iter()
            .zip(&TRUE_BETA)
            .all(|(c, t)| (c.estimate - t).abs() <= 4.0 * c.std_error)
        {
            covered += 1;
        }
    }
    check(covered >= 95, format!("only {covered}/100 seeds within 4 SE"))?;

    // HC1 against the sandwich formula.
    let mut se_err: f64 = 0.0;
    for seed in 0..10u64 {
        let mut rng = rng_from_seed(2000 + seed);
        let panel = synthetic_growth_panel(&mut rng, 60, 5, &TRUE_BETA, false, 0.02);
        let res = e(regress(&panel, opts(false, Covariance::Hc1)))?;
        let x: Vec<Vec<f64>> = panel.rows.iter().map(|r| regressors(r).to_vec()).collect();
        let y: Vec<f64> = panel.rows.iter().map(|r| r.growth).collect();
        let (_, se) = ols_hc1_oracle(&x, &y);
        for (c, s) in res.coefficients.iter().zip(&se) {
            se_err = se_err.max((c.std_error - s).abs() / s);
        }
    }
    check(se_err <= 1e-10, format!("HC1 relative deviation {se_err:e}"))?;
    Ok(format!(
        "noise-free err {exact_err:.1e}, {covered}/100 within 4 SE, HC1 rel err {se_err:.1e}"
    ))
}

const STUDY: &str = r#"
seed = 99
output_dir = "out"
[inputs]
trade = "out/trade.csv"
macro = "out/panel.csv"
[years]
start = 1990
end = 1992
[synthetic]
n_countries = 20
n_products = 50
[[colormap]]
x = "log_fitness"
y = "log_gdp_pc"
[[regression]]
name = "with_fitness"
[[regression]]
name = "without_fitness"
include_fitness = false
"#;

fn write_study(dir: &Path) -> Result<std::path::PathBuf, String> {
    let path = dir.join("study.toml");
    std::fs::write(&path, STUDY).map_err(|e| e.to_string())?;
    Ok(path)
}

fn table_structure() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = PipelineConfig::load(&write_study(dir.path())?).map_err(|e| e.to_string())?;
    run_pipeline(&cfg).map_err(|e| e.to_string())?;
    let growth = cfg.output_dir.join("growth.csv");
    let bin = env!("CARGO_BIN_EXE_econfit");
    let mut counts = Vec::new();
    for with in [true, false] {
        let mut cmd = Command::new(bin);
        cmd.arg("regress").arg("--panel").arg(&growth).args(["--robust", "hc1"]);
        if with {
            cmd.arg("--with-fitness");
        }
        let out = cmd.output().map_err(|e| e.to_string())?;
        check(out.status.success(), String::from_utf8_lossy(&out.stderr).into_owned())?;
        let text = String::from_utf8_lossy(&out.stdout).into_owned();
        let rows: Vec<&str> = text
            .lines()
            .filter(|l| l.contains('|') && !l.starts_with("Variable"))
            .collect();
        let has_fitness = rows.iter().any(|l| l.starts_with("Fitness Rank"));
        check(has_fitness == with, format!("Fitness Rank row present = {has_fitness}"))?;
        counts.push(rows.len());
    }
    check(counts == [8, 7], format!("coefficient rows {counts:?}, expected [8, 7]"))?;
    Ok("8 rows with fitness, 7 without; Fitness Rank only in the former".into())
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_econfit");
    let mut hashes = Vec::new();
    let mut slowest: f64 = 0.0;
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let cfg_path = write_study(dir.path())?;
        let start = Instant::now();
        let out = Command::new(bin)
            .arg("run")
            .arg("--config")
            .arg(&cfg_path)
            .output()
            .map_err(|e| e.to_string())?;
        slowest = slowest.max(start.elapsed().as_secs_f64());
        check(out.status.success(), String::from_utf8_lossy(&out.stderr).into_owned())?;
        let text = std::fs::read_to_string(dir.path().join("out/manifest.json"))
            .map_err(|e| e.to_string())?;
        let manifest: econfit::pipeline::RunManifest =
            serde_json::from_str(&text).map_err(|e| e.to_string())?;
        for a in &manifest.artifacts {
            let bytes = std::fs::read(dir.path().join("out").join(&a.path)).map_err(|e| e.to_string())?;
            check(
                econfit::pipeline::sha256_hex(&bytes) == a.sha256,
                format!("{} does not match its manifest hash", a.path),
            )?;
        }
        hashes.push(manifest.hashes());
    }
    check(!hashes[0].is_empty(), "no artifacts")?;
    check(hashes[0] == hashes[1], "artifact hashes differ between runs")?;
    check(slowest < 60.0, format!("run took {slowest:.1}s"))?;
    Ok(format!(
        "{} artifacts bit-identical across runs, slowest run {slowest:.2}s",
        hashes[0].len()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 fixed-point correctness", fixed_point_2x2),
        ("2 initial-condition independence", initial_condition_independence),
        ("3 nested dominance", nested_dominance),
        ("4 triangularity", triangularity),
        ("5 capability recovery", capability_recovery),
        ("6 RCA oracle", rca_oracle_check),
        ("7 Nadaraya-Watson", nadaraya_watson),
        ("8 regression recovery", regression_recovery),
        ("9 table structure", table_structure),
        ("10 end-to-end determinism", determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
