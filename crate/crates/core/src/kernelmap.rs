//! Two-dimensional Nadaraya–Watson surfaces over a growth panel.
//!
//! The kernel is a product Gaussian,
//! `w_i = exp(-Σ_d (q_d - x_id)² / (2 h_d²))`, and the estimate is the
//! `w`-weighted mean of the responses. A grid cell is *supported* when its
//! total weight is at least `SUPPORT_CUTOFF × n`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::econometrics::{suggest_variable, GrowthPanel, Variable};
use crate::error::{Error, Result};
use crate::stats::sample_std;

pub const SUPPORT_CUTOFF: f64 = 1e-6;

/// A sample point: 2-D covariate and response.
pub type Point = ([f64; 2], f64);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NwEstimate {
    /// `None` when every kernel weight underflowed to zero.
    pub estimate: Option<f64>,
    /// `Σ_i w_i`.
    pub weight: f64,
}

fn check_bandwidths(h: [f64; 2]) -> Result<()> {
    if h.iter().all(|v| *v > 0.0 && v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidMatrix(format!("bandwidths {h:?} must be > 0")))
    }
}

#[inline]
fn exponent(q: [f64; 2], x: [f64; 2], inv_2h2: [f64; 2]) -> f64 {
    let dx = q[0] - x[0];
    let dy = q[1] - x[1];
    dx * dx * inv_2h2[0] + dy * dy * inv_2h2[1]
}

/// Weighted mean written as `y_ref + Σ w (y - y_ref) / Σ w` so that a
/// constant response comes back bit-exact, then clamped to the response range.
fn weighted_mean(weights: impl Iterator<Item = f64>, ys: &[f64], bounds: (f64, f64)) -> NwEstimate {
    let y_ref = ys[0];
    let (mut sw, mut swy) = (0.0, 0.0);
    for (w, y) in weights.zip(ys) {
        sw += w;
        swy += w * (y - y_ref);
    }
    let estimate = (sw > 0.0).then(|| (y_ref + swy / sw).clamp(bounds.0, bounds.1));
    NwEstimate {
        estimate,
        weight: sw,
    }
}

fn response_bounds(ys: &[f64]) -> (f64, f64) {
    ys.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| (lo.min(y), hi.max(y)))
}

pub fn nw_estimate(points: &[Point], query: [f64; 2], bandwidths: [f64; 2]) -> Result<NwEstimate> {
    if points.is_empty() {
        return Err(Error::InsufficientData("kernel estimate needs at least one point".into()));
    }
    check_bandwidths(bandwidths)?;
    let inv = bandwidths.map(|h| 1.0 / (2.0 * h * h));
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    Ok(weighted_mean(
        points.iter().map(|p| (-exponent(query, p.0, inv)).exp()),
        &ys,
        response_bounds(&ys),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthRule {
    /// `h_d = σ_d n^(-1/6)`.
    #[default]
    Scott,
    Fixed([f64; 2]),
}

pub fn scott_bandwidths(points: &[Point]) -> [f64; 2] {
    let n = points.len() as f64;
    let factor = n.powf(-1.0 / 6.0);
    [0, 1].map(|d| {
        let col: Vec<f64> = points.iter().map(|p| p.0[d]).collect();
        sample_std(&col) * factor
    })
}

/// Evaluated grid, stored x-major: cell `(ix, iy)` at `ix * ny + iy`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridEstimates {
    pub estimates: Vec<Option<f64>>,
    pub weights: Vec<f64>,
}

pub fn evaluate_grid(
    points: &[Point],
    x_axis: &[f64],
    y_axis: &[f64],
    bandwidths: [f64; 2],
) -> Result<GridEstimates> {
    if points.is_empty() {
        return Err(Error::InsufficientData("kernel grid needs at least one point".into()));
    }
    check_bandwidths(bandwidths)?;
    let inv = bandwidths.map(|h| 1.0 / (2.0 * h * h));
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let bounds = response_bounds(&ys);
    // Per-axis exponent terms, point-major; summed in the same order as
    // `exponent`.
    let ey: Vec<Vec<f64>> = points
        .iter()
        .map(|p| {
            y_axis
                .iter()
                .map(|&gy| {
                    let d = gy - p.0[1];
                    d * d * inv[1]
                })
                .collect()
        })
        .collect();
    let cells: Vec<NwEstimate> = x_axis
        .par_iter()
        .flat_map_iter(|&gx| {
            let ex: Vec<f64> = points
                .iter()
                .map(|p| {
                    let d = gx - p.0[0];
                    d * d * inv[0]
                })
                .collect();
            let (ex, ey, ys) = (ex, &ey, &ys);
            (0..y_axis.len()).map(move |iy| {
                weighted_mean(
                    ex.iter().zip(ey).map(|(a, b)| (-(a + b[iy])).exp()),
                    ys,
                    bounds,
                )
            })
        })
        .collect();
    Ok(GridEstimates {
        estimates: cells.iter().map(|c| c.estimate).collect(),
        weights: cells.iter().map(|c| c.weight).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColormapSpec {
    pub x: String,
    pub y: String,
    pub target: String,
    pub nx: usize,
    pub ny: usize,
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
    pub bandwidth: BandwidthRule,
}

impl Default for ColormapSpec {
    fn default() -> Self {
        ColormapSpec {
            x: "log_fitness".into(),
            y: "log_gdp_pc".into(),
            target: "growth".into(),
            nx: 100,
            ny: 100,
            x_range: None,
            y_range: None,
            bandwidth: BandwidthRule::Scott,
        }
    }
}

impl ColormapSpec {
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        for (field, name) in [("x", &self.x), ("y", &self.y), ("target", &self.target)] {
            if Variable::parse(name).is_none() {
                let hint = suggest_variable(name)
                    .map(|s| format!("; did you mean '{s}'?"))
                    .unwrap_or_default();
                problems.push(format!("colormap.{field}: unknown variable '{name}'{hint}"));
            }
        }
        if self.nx < 2 || self.ny < 2 {
            problems.push("colormap grid needs nx >= 2 and ny >= 2".into());
        }
        for (field, range) in [("x_range", self.x_range), ("y_range", self.y_range)] {
            if let Some((lo, hi)) = range {
                if !(lo < hi) {
                    problems.push(format!("colormap.{field}: lower bound must be below upper"));
                }
            }
        }
        if let BandwidthRule::Fixed(h) = self.bandwidth {
            if check_bandwidths(h).is_err() {
                problems.push("colormap.bandwidth must be > 0".into());
            }
        }
        problems
    }

    /// File-name stem such as `surface_log_fitness_log_gdp_pc`.
    pub fn stem(&self) -> String {
        format!("surface_{}_{}", self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSurface {
    pub x_name: String,
    pub y_name: String,
    pub target: String,
    pub x_axis: Vec<f64>,
    pub y_axis: Vec<f64>,
    /// x-major, `NaN` where the weight underflowed.
    pub estimates: Vec<f64>,
    pub weights: Vec<f64>,
    pub supported: Vec<bool>,
    pub bandwidths: [f64; 2],
    pub n_points: usize,
}

impl KernelSurface {
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.estimates[ix * self.y_axis.len() + iy]
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "estimate", "weight", "supported"])?;
        let ny = self.y_axis.len();
        for (ix, x) in self.x_axis.iter().enumerate() {
            for (iy, y) in self.y_axis.iter().enumerate() {
                let k = ix * ny + iy;
                w.write_record([
                    format!("{x}"),
                    format!("{y}"),
                    format!("{}", self.estimates[k]),
                    format!("{}", self.weights[k]),
                    u8::from(self.supported[k]).to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + step * i as f64 })
        .collect()
}

pub fn build_colormap(panel: &GrowthPanel, spec: &ColormapSpec) -> Result<KernelSurface> {
    let problems = spec.validate();
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    let var = |n: &str| Variable::parse(n).expect("validated");
    let (vx, vy, vt) = (var(&spec.x), var(&spec.y), var(&spec.target));
    let points: Vec<Point> = panel
        .rows
        .iter()
        .filter_map(|r| Some(([vx.value(r)?, vy.value(r)?], vt.value(r)?)))
        .collect();
    if points.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} usable observations for ({}, {}, {}); need at least 2",
            points.len(),
            spec.x,
            spec.y,
            spec.target
        )));
    }
    let mut ranges = [(0.0, 0.0); 2];
    for (d, name) in [&spec.x, &spec.y].into_iter().enumerate() {
        let (lo, hi) = points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.0[d]), hi.max(p.0[d]))
            });
        if lo == hi {
            return Err(Error::ZeroVariance(name.clone()));
        }
        ranges[d] = (lo, hi);
    }
    let x_range = spec.x_range.unwrap_or(ranges[0]);
    let y_range = spec.y_range.unwrap_or(ranges[1]);
    let bandwidths = match spec.bandwidth {
        BandwidthRule::Scott => scott_bandwidths(&points),
        BandwidthRule::Fixed(h) => h,
    };
    let x_axis = linspace(x_range.0, x_range.1, spec.nx);
    let y_axis = linspace(y_range.0, y_range.1, spec.ny);
    let grid = evaluate_grid(&points, &x_axis, &y_axis, bandwidths)?;
    let cutoff = SUPPORT_CUTOFF * points.len() as f64;
    Ok(KernelSurface {
        x_name: spec.x.clone(),
        y_name: spec.y.clone(),
        target: spec.target.clone(),
        supported: grid.weights.iter().map(|&w| w >= cutoff).collect(),
        estimates: grid.estimates.iter().map(|e| e.unwrap_or(f64::NAN)).collect(),
        weights: grid.weights,
        bandwidths,
        n_points: points.len(),
        x_axis,
        y_axis,
    })
}
