//! OLS with heteroskedasticity-consistent standard errors, pooled or with
//! country fixed effects (within transform).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::panel::{GrowthPanel, Variable, DRIVER_REGRESSORS, FITNESS_REGRESSOR};
use crate::error::{Error, Result};

pub const INTERCEPT: &str = "const";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Covariance {
    /// `s² (X'X)⁻¹` with `s² = e'e / (n - k)`.
    Classical,
    /// White sandwich `(X'X)⁻¹ X' diag(e²) X (X'X)⁻¹`.
    Hc0,
    /// HC0 scaled by `n / (n - k)`.
    #[default]
    Hc1,
}

impl std::str::FromStr for Covariance {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "classical" | "none" => Ok(Covariance::Classical),
            "hc0" => Ok(Covariance::Hc0),
            "hc1" => Ok(Covariance::Hc1),
            _ => Err(format!("unknown covariance '{s}' (classical, hc0, hc1)")),
        }
    }
}

/// A regression design: named columns, response, and a group label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub names: Vec<String>,
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub groups: Vec<String>,
}

impl Design {
    pub fn n_obs(&self) -> usize {
        self.y.len()
    }
}

/// Builds the growth-regression design from a panel.
pub fn growth_design(panel: &GrowthPanel, include_fitness: bool, intercept: bool) -> Design {
    let mut names: Vec<String> = Vec::new();
    if intercept {
        names.push(INTERCEPT.to_string());
    }
    names.extend(DRIVER_REGRESSORS.iter().map(|s| s.to_string()));
    if include_fitness {
        names.push(FITNESS_REGRESSOR.to_string());
    }
    let vars: Vec<Option<Variable>> = names
        .iter()
        .map(|n| (n != INTERCEPT).then(|| Variable::parse(n).expect("known regressor")))
        .collect();
    let n = panel.rows.len();
    let x = DMatrix::from_fn(n, names.len(), |i, j| match vars[j] {
        None => 1.0,
        Some(v) => v.value(&panel.rows[i]).unwrap_or(f64::NAN),
    });
    let y = DVector::from_iterator(n, panel.rows.iter().map(|r| r.growth));
    let groups = panel.rows.iter().map(|r| r.country.clone()).collect();
    Design { names, x, y, groups }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WithinDesign {
    pub design: Design,
    /// Countries with a single observation, removed before demeaning.
    pub dropped_singletons: usize,
}

/// Subtracts per-group means from every column and from the response.
/// Singleton groups are dropped since they demean to all zeros.
pub fn within_transform(design: &Design) -> Result<WithinDesign> {
    let mut members: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, g) in design.groups.iter().enumerate() {
        members.entry(g.as_str()).or_default().push(i);
    }
    let dropped_singletons = members.values().filter(|m| m.len() == 1).count();
    let keep: Vec<usize> = (0..design.n_obs())
        .filter(|&i| members[design.groups[i].as_str()].len() > 1)
        .collect();
    if keep.is_empty() {
        return Err(Error::InsufficientData(
            "every country has a single observation; fixed effects are not identified".into(),
        ));
    }
    let k = design.x.ncols();
    let mut x = DMatrix::zeros(keep.len(), k);
    let mut y = DVector::zeros(keep.len());
    let mut groups = Vec::with_capacity(keep.len());
    let pos: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(new, &old)| (old, new)).collect();
    for rows in members.values().filter(|m| m.len() > 1) {
        let len = rows.len() as f64;
        let y_mean = rows.iter().map(|&i| design.y[i]).sum::<f64>() / len;
        for &i in rows {
            y[pos[&i]] = design.y[i] - y_mean;
        }
        for j in 0..k {
            let mean = rows.iter().map(|&i| design.x[(i, j)]).sum::<f64>() / len;
            for &i in rows {
                x[(pos[&i], j)] = design.x[(i, j)] - mean;
            }
        }
    }
    for &i in &keep {
        groups.push(design.groups[i].clone());
    }
    Ok(WithinDesign {
        design: Design {
            names: design.names.clone(),
            x,
            y,
            groups,
        },
        dropped_singletons,
    })
}

/// Columns that are numerically a linear combination of earlier columns,
/// found by modified Gram-Schmidt.
pub fn collinear_columns(x: &DMatrix<f64>) -> Vec<usize> {
    let norms: Vec<f64> = x.column_iter().map(|c| c.norm()).collect();
    let scale = norms.iter().copied().fold(0.0, f64::max);
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut bad = Vec::new();
    for (j, col) in x.column_iter().enumerate() {
        let mut v = col.clone_owned();
        for b in &basis {
            let proj = b.dot(&v);
            v.axpy(-proj, b, 1.0);
        }
        let resid = v.norm();
        if norms[j] <= 1e-12 * scale || resid <= 1e-10 * norms[j] {
            bad.push(j);
        } else {
            basis.push(v / resid);
        }
    }
    bad
}

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub names: Vec<String>,
    pub coefficients: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub residuals: DVector<f64>,
    pub r_squared: f64,
    pub n_obs: usize,
}

impl OlsFit {
    pub fn std_errors(&self) -> Vec<f64> {
        self.covariance.diagonal().iter().map(|v| v.max(0.0).sqrt()).collect()
    }
}

/// OLS via QR. `centered_r2` selects `1 - SSR/Σ(y - ȳ)²` over `1 - SSR/Σy²`.
pub fn ols(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    names: &[String],
    cov: Covariance,
    centered_r2: bool,
) -> Result<OlsFit> {
    let (n, k) = x.shape();
    if names.len() != k || y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "design {n}x{k}, {} names, {} responses",
            names.len(),
            y.len()
        )));
    }
    if n <= k {
        return Err(Error::InsufficientData(format!(
            "{n} observations for {k} parameters"
        )));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InsufficientData("design contains non-finite values".into()));
    }
    let bad = collinear_columns(x);
    if !bad.is_empty() {
        return Err(Error::RankDeficient(bad.into_iter().map(|j| names[j].clone()).collect()));
    }

    let qr = x.clone().qr();
    let r = qr.r();
    let qty = qr.q().transpose() * y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::RankDeficient(names.to_vec()))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::RankDeficient(names.to_vec()))?;
    let xtx_inv = &r_inv * r_inv.transpose();

    let residuals = y - x * &beta;
    let ssr = residuals.norm_squared();
    let covariance = match cov {
        Covariance::Classical => &xtx_inv * (ssr / (n - k) as f64),
        Covariance::Hc0 | Covariance::Hc1 => {
            let mut meat = DMatrix::zeros(k, k);
            for i in 0..n {
                let xi = x.row(i).transpose();
                meat += (&xi * xi.transpose()) * residuals[i].powi(2);
            }
            let scale = if cov == Covariance::Hc1 {
                n as f64 / (n - k) as f64
            } else {
                1.0
            };
            (&xtx_inv * meat * &xtx_inv) * scale
        }
    };
    let sst = if centered_r2 {
        let m = y.mean();
        y.iter().map(|v| (v - m).powi(2)).sum::<f64>()
    } else {
        y.norm_squared()
    };
    let r_squared = if sst > 0.0 { 1.0 - ssr / sst } else { 1.0 };

    Ok(OlsFit {
        names: names.to_vec(),
        coefficients: beta,
        covariance,
        residuals,
        r_squared,
        n_obs: n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegressionOptions {
    pub include_fitness: bool,
    pub fixed_effects: bool,
    pub covariance: Covariance,
}

impl Default for RegressionOptions {
    fn default() -> Self {
        RegressionOptions {
            include_fitness: true,
            fixed_effects: false,
            covariance: Covariance::Hc1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub coefficients: Vec<Coefficient>,
    pub n_obs: usize,
    pub n_countries: usize,
    pub r_squared: f64,
    pub dropped_singletons: usize,
    pub options: RegressionOptions,
}

impl RegressionResult {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    /// Aligned `Variable | Coefficient | Standard Error` table.
    pub fn to_text(&self) -> String {
        let label = |n: &str| -> String {
            match n {
                INTERCEPT => "Constant",
                "log_gdp_pc" => "log(GDPpc)",
                "log_k_emp" => "log(K/EMP)",
                "log_emp" => "log(EMP)",
                "log_tfp_gdp" => "log(TFP/GDP)",
                "log_inv_life_exp" => "log(1/LifeExp)",
                "log_school" => "log(School)",
                FITNESS_REGRESSOR => "Fitness Rank",
                other => other,
            }
            .to_string()
        };
        let mut s = String::new();
        let _ = writeln!(s, "{:<16} | {:>12} | {:>14}", "Variable", "Coefficient", "Standard Error");
        let _ = writeln!(s, "{:-<16}-+-{:-<12}-+-{:-<14}", "", "", "");
        for c in &self.coefficients {
            let _ = writeln!(
                s,
                "{:<16} | {:>12.4} | {:>14.4}",
                label(&c.name),
                c.estimate,
                c.std_error
            );
        }
        let _ = writeln!(
            s,
            "n = {}, countries = {}, R² = {:.4}, fixed effects: {}, se: {:?}",
            self.n_obs,
            self.n_countries,
            self.r_squared,
            if self.options.fixed_effects { "yes" } else { "no" },
            self.options.covariance
        );
        s
    }
}

/// Fits the growth regression on a panel.
pub fn regress(panel: &GrowthPanel, opts: RegressionOptions) -> Result<RegressionResult> {
    let design = growth_design(panel, opts.include_fitness, !opts.fixed_effects);
    let (design, dropped_singletons) = if opts.fixed_effects {
        let w = within_transform(&design)?;
        (w.design, w.dropped_singletons)
    } else {
        (design, 0)
    };
    let fit = ols(
        &design.x,
        &design.y,
        &design.names,
        opts.covariance,
        !opts.fixed_effects,
    )?;
    let se = fit.std_errors();
    let mut countries = design.groups.clone();
    countries.sort_unstable();
    countries.dedup();
    Ok(RegressionResult {
        coefficients: fit
            .names
            .iter()
            .zip(fit.coefficients.iter())
            .zip(se)
            .map(|((name, &estimate), std_error)| Coefficient {
                name: name.clone(),
                estimate,
                std_error,
            })
            .collect(),
        n_obs: fit.n_obs,
        n_countries: countries.len(),
        r_squared: fit.r_squared,
        dropped_singletons,
        options: opts,
    })
}

/// Growth regression with HC1 standard errors.
pub fn ols_robust(
    panel: &GrowthPanel,
    include_fitness: bool,
    fixed_effects: bool,
) -> Result<RegressionResult> {
    regress(
        panel,
        RegressionOptions {
            include_fitness,
            fixed_effects,
            covariance: Covariance::Hc1,
        },
    )
}
