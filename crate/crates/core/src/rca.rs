//! Balassa revealed comparative advantage and the binary matrix `M_cp`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{BinaryMatrix, ExportMatrix, RcaMatrix};

/// `RCA_cp = (X_cp / Σ_p X_cp) / (Σ_c X_cp / Σ_cp X_cp)`.
///
/// Rows with zero total exports (and columns with zero world exports) get
/// RCA 0 instead of NaN; they disappear in [`prune`].
pub fn compute_rca(x: &ExportMatrix) -> Result<RcaMatrix> {
    let (nc, np) = (x.n_countries(), x.n_products());
    if let Some(bad) = x.values().iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidMatrix(format!("export value {bad} is not a nonnegative number")));
    }
    let row_totals: Vec<f64> = x.rows().map(|r| r.iter().sum()).collect();
    let mut col_totals = vec![0.0; np];
    for row in x.rows() {
        for (t, v) in col_totals.iter_mut().zip(row) {
            *t += v;
        }
    }
    let world: f64 = row_totals.iter().sum();
    if world <= 0.0 {
        return Err(Error::AllZero);
    }
    let product_share: Vec<f64> = col_totals.iter().map(|t| t / world).collect();

    let mut out = x.map(|_| 0.0);
    for c in 0..nc {
        if row_totals[c] == 0.0 {
            continue;
        }
        for p in 0..np {
            let v = x.get(c, p);
            if v > 0.0 {
                out.set(c, p, (v / row_totals[c]) / product_share[p]);
            }
        }
    }
    Ok(out)
}

/// `M_cp = 1` iff `RCA_cp >= threshold` (inclusive boundary).
pub fn binarize(r: &RcaMatrix, threshold: f64) -> Result<BinaryMatrix> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(Error::InvalidMatrix(format!("threshold {threshold} must be > 0")));
    }
    Ok(r.map(|v| v >= threshold))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PruneReport {
    pub removed_countries: Vec<String>,
    pub removed_products: Vec<String>,
    pub passes: usize,
}

impl PruneReport {
    pub fn is_empty(&self) -> bool {
        self.removed_countries.is_empty() && self.removed_products.is_empty()
    }
}

/// Removes all-zero rows and columns, repeating until none remain.
pub fn prune(m: &BinaryMatrix) -> Result<(BinaryMatrix, PruneReport)> {
    let mut report = PruneReport::default();
    let mut rows: Vec<usize> = (0..m.n_countries()).collect();
    let mut cols: Vec<usize> = (0..m.n_products()).collect();
    loop {
        let kept_rows: Vec<usize> = rows
            .iter()
            .copied()
            .filter(|&c| cols.iter().any(|&p| m.get(c, p)))
            .collect();
        let kept_cols: Vec<usize> = cols
            .iter()
            .copied()
            .filter(|&p| kept_rows.iter().any(|&c| m.get(c, p)))
            .collect();
        if kept_rows.len() == rows.len() && kept_cols.len() == cols.len() {
            break;
        }
        report.passes += 1;
        report.removed_countries.extend(
            rows.iter()
                .filter(|c| !kept_rows.contains(c))
                .map(|&c| m.countries()[c].clone()),
        );
        report.removed_products.extend(
            cols.iter()
                .filter(|p| !kept_cols.contains(p))
                .map(|&p| m.products()[p].clone()),
        );
        rows = kept_rows;
        cols = kept_cols;
    }
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::EmptyAfterPruning);
    }
    Ok((m.select(&rows, &cols), report))
}
