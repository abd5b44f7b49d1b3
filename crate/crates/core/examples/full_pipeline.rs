//! A complete study from a TOML config: synthetic inputs, per-year fitness,
//! growth panel, colormap and regressions, plus the hashed manifest.

use econfit::pipeline::{run_pipeline, PipelineConfig};

const CONFIG: &str = r#"
seed = 2024
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
nx = 50
ny = 50

[[regression]]
name = "with_fitness"

[[regression]]
name = "baseline"
include_fitness = false
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("econfit-study"));
    let mut cfg = PipelineConfig::from_toml_str(CONFIG)?;
    cfg.resolve_relative_to(&dir);

    let manifest = run_pipeline(&cfg)?;
    for a in &manifest.artifacts {
        println!("{:<40} {:>8}  {}", a.path, a.bytes, &a.sha256[..16]);
    }
    for c in &manifest.convergence {
        println!(
            "{}: {}x{}, {:?} after {} sweeps",
            c.year, c.countries, c.products, c.converged_by, c.iterations
        );
    }
    println!("outputs in {}", cfg.output_dir.display());
    Ok(())
}
