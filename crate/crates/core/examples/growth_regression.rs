//! Growth regressions on a synthetic economy, with and without the
//! fitness rank among the regressors.

use econfit::econometrics::{build_growth_panel, regress, FitnessSeries, PanelOptions, RegressionOptions};
use econfit::fitness::{compute_fitness, rank_countries, FitnessConfig};
use econfit::ingest::build_export_matrix;
use econfit::rca::{binarize, compute_rca, prune};
use econfit::synthetic::{synthetic_economy, EconomyConfig};

fn main() -> econfit::Result<()> {
    let cfg = EconomyConfig {
        n_countries: 40,
        trade_years: (1988, 1995),
        ..Default::default()
    };
    let world = synthetic_economy(&cfg, 11)?;

    let mut series = FitnessSeries::new();
    for year in cfg.trade_years.0..=cfg.trade_years.1 {
        let x = build_export_matrix(&world.flows, year)?;
        let (m, _) = prune(&binarize(&compute_rca(&x)?, 1.0)?)?;
        let res = compute_fitness(&m, &FitnessConfig::default())?;
        series.insert_ranking(year, &rank_countries(&res));
    }

    let panel = build_growth_panel(&world.panel, &series, PanelOptions::default())?;
    println!("{}\n", panel.attrition);

    for include_fitness in [false, true] {
        let opts = RegressionOptions {
            include_fitness,
            ..Default::default()
        };
        println!("{}", regress(&panel, opts)?.to_text());
    }

    let fe = RegressionOptions {
        fixed_effects: true,
        ..Default::default()
    };
    println!("{}", regress(&panel, fe)?.to_text());
    Ok(())
}
