//! Kernel-smoothed growth over the (log fitness, log GDP per capita) plane,
//! drawn as a coarse character map.

use econfit::econometrics::{build_growth_panel, FitnessSeries, PanelOptions};
use econfit::fitness::{compute_fitness, rank_countries, FitnessConfig};
use econfit::ingest::build_export_matrix;
use econfit::kernelmap::{build_colormap, ColormapSpec};
use econfit::rca::{binarize, compute_rca, prune};
use econfit::synthetic::{synthetic_economy, EconomyConfig};

fn main() -> econfit::Result<()> {
    let cfg = EconomyConfig {
        n_countries: 60,
        trade_years: (1988, 1996),
        ..Default::default()
    };
    let world = synthetic_economy(&cfg, 5)?;
    let mut series = FitnessSeries::new();
    for year in cfg.trade_years.0..=cfg.trade_years.1 {
        let x = build_export_matrix(&world.flows, year)?;
        let (m, _) = prune(&binarize(&compute_rca(&x)?, 1.0)?)?;
        series.insert_ranking(year, &rank_countries(&compute_fitness(&m, &FitnessConfig::default())?));
    }
    let panel = build_growth_panel(&world.panel, &series, PanelOptions::default())?;

    let spec = ColormapSpec {
        nx: 40,
        ny: 16,
        ..Default::default()
    };
    let s = build_colormap(&panel, &spec)?;
    let finite: Vec<f64> = s.estimates.iter().copied().filter(|v| v.is_finite()).collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shades = [' ', '.', ':', '-', '=', '+', '*', '#', '%', '@'];

    println!("growth from {lo:.4} (' ') to {hi:.4} ('@'), blank '?' = no support");
    for iy in (0..spec.ny).rev() {
        let line: String = (0..spec.nx)
            .map(|ix| {
                let v = s.at(ix, iy);
                if !v.is_finite() {
                    '?'
                } else {
                    let t = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
                    shades[(t * 9.0).round() as usize]
                }
            })
            .collect();
        println!("{:>6.2} |{line}|", s.y_axis[iy]);
    }
    println!(
        "        x: {} from {:.2} to {:.2}, bandwidths {:.3} {:.3}",
        s.x_name,
        s.x_axis[0],
        s.x_axis[spec.nx - 1],
        s.bandwidths[0],
        s.bandwidths[1]
    );
    Ok(())
}
