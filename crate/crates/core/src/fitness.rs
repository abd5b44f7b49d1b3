//! The Fitness–Complexity fixed-point iteration.
//!
//! One sweep maps `(F, Q)` to
//!
//! ```text
//! F~_c = Σ_p M_cp Q_p            (previous Q)
//! F_c  = F~_c / mean(F~)
//! Q~_p = 1 / Σ_c M_cp / F_c      (this sweep's F)
//! Q_p  = Q~_p / mean(Q~)
//! ```
//!
//! Iteration stops on whichever fires first: both relative sup-changes below
//! `value_tolerance`, the rank orders of `F` and `Q` unchanged for
//! `rank_stability_window` consecutive sweeps, or `max_iterations`. Nested
//! matrices drive the least-fit values toward zero without ever meeting a
//! value tolerance, which is why the rank criterion exists. Running out of
//! iterations is reported in [`FitnessResult::converged_by`], not as an error.

use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matrix::BinaryMatrix;

/// Fitness values below this are floored before taking reciprocals.
pub const FITNESS_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitialComplexity {
    /// `Q_p = 1` for every product.
    #[default]
    Uniform,
    /// `Q_p = 1 / P`, so the initial values sum to one.
    UnitSum,
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum UpdateScheme {
    /// The complexity update reads the fitness computed in the same sweep.
    #[default]
    Sequential,
    /// The complexity update reads the previous sweep's fitness.
    Synchronous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitnessConfig {
    pub max_iterations: usize,
    pub value_tolerance: f64,
    /// `None` disables the rank-stability stop.
    pub rank_stability_window: Option<usize>,
    pub initial_complexity: InitialComplexity,
    pub scheme: UpdateScheme,
}

impl Default for FitnessConfig {
    fn default() -> Self {
        FitnessConfig {
            max_iterations: 1000,
            value_tolerance: 1e-9,
            rank_stability_window: Some(10),
            initial_complexity: InitialComplexity::Uniform,
            scheme: UpdateScheme::Sequential,
        }
    }
}

impl FitnessConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if self.max_iterations < 1 {
            problems.push("fitness.max_iterations must be >= 1".to_string());
        }
        if !(self.value_tolerance > 0.0 && self.value_tolerance.is_finite()) {
            problems.push(format!(
                "fitness.value_tolerance must be > 0 (got {})",
                self.value_tolerance
            ));
        }
        if self.rank_stability_window == Some(0) {
            problems.push("fitness.rank_stability_window must be >= 1".to_string());
        }
        if let InitialComplexity::Custom(q) = &self.initial_complexity {
            if q.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                problems.push("fitness.initial_complexity must be strictly positive".to_string());
            }
        }
        problems
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Value,
    Rank,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepDiagnostics {
    pub sweep: usize,
    pub max_rel_change_fitness: f64,
    pub max_rel_change_complexity: f64,
    /// Hash of the descending rank orders of fitness and complexity.
    pub rank_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessResult {
    pub countries: Vec<String>,
    pub products: Vec<String>,
    /// Mean-normalized country fitness.
    pub fitness: Vec<f64>,
    /// Mean-normalized product complexity.
    pub complexity: Vec<f64>,
    pub iterations_run: usize,
    pub converged_by: StopReason,
    /// Times a fitness value was raised to [`FITNESS_FLOOR`].
    pub floor_events: usize,
    pub trace: Vec<SweepDiagnostics>,
}

impl FitnessResult {
    pub fn write_diagnostics<W: Write>(&self, cfg: &FitnessConfig, out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Diag<'a> {
            config: &'a FitnessConfig,
            n_countries: usize,
            n_products: usize,
            iterations_run: usize,
            converged_by: StopReason,
            floor_events: usize,
            trace: &'a [SweepDiagnostics],
        }
        serde_json::to_writer_pretty(
            out,
            &Diag {
                config: cfg,
                n_countries: self.countries.len(),
                n_products: self.products.len(),
                iterations_run: self.iterations_run,
                converged_by: self.converged_by,
                floor_events: self.floor_events,
                trace: &self.trace,
            },
        )?;
        Ok(())
    }
}

/// Row and column support lists of a binary matrix, in index order.
struct Support {
    by_row: Vec<Vec<usize>>,
    by_col: Vec<Vec<usize>>,
}

impl Support {
    fn new(m: &BinaryMatrix) -> Result<Self> {
        let mut by_row = vec![Vec::new(); m.n_countries()];
        let mut by_col = vec![Vec::new(); m.n_products()];
        for (c, row) in m.rows().enumerate() {
            for (p, _) in row.iter().enumerate().filter(|(_, &b)| b) {
                by_row[c].push(p);
                by_col[p].push(c);
            }
        }
        if let Some(c) = by_row.iter().position(Vec::is_empty) {
            return Err(Error::UnprunedMatrix {
                axis: "country",
                label: m.countries()[c].clone(),
            });
        }
        if let Some(p) = by_col.iter().position(Vec::is_empty) {
            return Err(Error::UnprunedMatrix {
                axis: "product",
                label: m.products()[p].clone(),
            });
        }
        Ok(Support { by_row, by_col })
    }

    /// One sweep. `f_for_q` is the fitness fed to the complexity update when
    /// running the synchronous scheme.
    fn sweep(
        &self,
        q_prev: &[f64],
        f_prev: Option<&[f64]>,
        floor_events: &mut usize,
    ) -> (Vec<f64>, Vec<f64>) {
        let mut f: Vec<f64> = self
            .by_row
            .iter()
            .map(|ps| ps.iter().map(|&p| q_prev[p]).sum())
            .collect();
        normalize_mean(&mut f);

        let f_used = f_prev.unwrap_or(&f);
        let inv_f: Vec<f64> = f_used
            .iter()
            .map(|&v| {
                if v < FITNESS_FLOOR {
                    *floor_events += 1;
                    1.0 / FITNESS_FLOOR
                } else {
                    1.0 / v
                }
            })
            .collect();
        let mut q: Vec<f64> = self
            .by_col
            .iter()
            .map(|cs| 1.0 / cs.iter().map(|&c| inv_f[c]).sum::<f64>())
            .collect();
        normalize_mean(&mut q);
        (f, q)
    }
}

fn normalize_mean(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    for x in v.iter_mut() {
        *x /= mean;
    }
}

fn check_vector(name: &str, v: &[f64], len: usize) -> Result<()> {
    if v.len() != len {
        return Err(Error::DimensionMismatch(format!(
            "{name} has {} entries, matrix needs {len}",
            v.len()
        )));
    }
    if v.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidMatrix(format!("{name} must be strictly positive")));
    }
    Ok(())
}

/// A single sequential sweep starting from complexity `q`.
///
/// `f` is only checked for shape here; the sequential update does not read it.
pub fn iterate_once(m: &BinaryMatrix, f: &[f64], q: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    iterate_once_with(m, f, q, UpdateScheme::Sequential)
}

pub fn iterate_once_with(
    m: &BinaryMatrix,
    f: &[f64],
    q: &[f64],
    scheme: UpdateScheme,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_vector("fitness", f, m.n_countries())?;
    check_vector("complexity", q, m.n_products())?;
    let support = Support::new(m)?;
    let f_prev = (scheme == UpdateScheme::Synchronous).then_some(f);
    let mut floors = 0;
    Ok(support.sweep(q, f_prev, &mut floors))
}

fn max_rel_change(new: &[f64], old: &[f64]) -> f64 {
    new.iter()
        .zip(old)
        .map(|(n, o)| (n - o).abs() / o.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

/// Indices sorted by descending value; ties keep index order.
fn descending_order(v: &[f64]) -> Vec<u32> {
    let mut idx: Vec<u32> = (0..v.len() as u32).collect();
    idx.sort_by(|&a, &b| v[b as usize].total_cmp(&v[a as usize]));
    idx
}

fn order_hash(f_order: &[u32], q_order: &[u32]) -> String {
    let mut h = Sha256::new();
    for i in f_order {
        h.update(i.to_le_bytes());
    }
    h.update(u32::MAX.to_le_bytes());
    for i in q_order {
        h.update(i.to_le_bytes());
    }
    h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
}

pub fn compute_fitness(m: &BinaryMatrix, cfg: &FitnessConfig) -> Result<FitnessResult> {
    let problems = cfg.validate();
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    if m.is_empty() {
        return Err(Error::InvalidMatrix("empty matrix".into()));
    }
    let support = Support::new(m)?;
    let (nc, np) = (m.n_countries(), m.n_products());

    let mut q = match &cfg.initial_complexity {
        InitialComplexity::Uniform => vec![1.0; np],
        InitialComplexity::UnitSum => vec![1.0 / np as f64; np],
        InitialComplexity::Custom(q0) => {
            check_vector("initial complexity", q0, np)?;
            q0.clone()
        }
    };
    let mut f = vec![1.0; nc];
    let mut prev_orders: Option<(Vec<u32>, Vec<u32>)> = None;
    let mut stable_sweeps = 0;
    let mut floor_events = 0;
    let mut trace = Vec::new();
    let mut converged_by = StopReason::MaxIterations;

    for sweep in 1..=cfg.max_iterations {
        let f_prev = (cfg.scheme == UpdateScheme::Synchronous).then_some(f.as_slice());
        let (f_new, q_new) = support.sweep(&q, f_prev, &mut floor_events);
        let df = max_rel_change(&f_new, &f);
        let dq = max_rel_change(&q_new, &q);
        let orders = (descending_order(&f_new), descending_order(&q_new));
        trace.push(SweepDiagnostics {
            sweep,
            max_rel_change_fitness: df,
            max_rel_change_complexity: dq,
            rank_hash: order_hash(&orders.0, &orders.1),
        });
        if prev_orders.as_ref() == Some(&orders) {
            stable_sweeps += 1;
        } else {
            stable_sweeps = 0;
        }
        prev_orders = Some(orders);
        f = f_new;
        q = q_new;

        if df <= cfg.value_tolerance && dq <= cfg.value_tolerance {
            converged_by = StopReason::Value;
            break;
        }
        if cfg.rank_stability_window.is_some_and(|w| stable_sweeps >= w) {
            converged_by = StopReason::Rank;
            break;
        }
    }

    Ok(FitnessResult {
        countries: m.countries().to_vec(),
        products: m.products().to_vec(),
        fitness: f,
        complexity: q,
        iterations_run: trace.len(),
        converged_by,
        floor_events,
        trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub label: String,
    pub value: f64,
    /// 1 = highest value.
    pub position: usize,
    /// `(N - position) / (N - 1)`, so the best entry has 1.0 and the worst 0.0.
    pub norm_rank: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    /// Entries in descending value order.
    pub entries: Vec<RankedEntry>,
    /// Some entries had exactly equal values and were ordered by label.
    pub has_ties: bool,
}

impl Ranking {
    pub fn get(&self, label: &str) -> Option<&RankedEntry> {
        self.entries.iter().find(|e| e.label == label)
    }
}

pub fn rank_by_value(labels: &[String], values: &[f64]) -> Ranking {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        values[b]
            .total_cmp(&values[a])
            .then_with(|| labels[a].cmp(&labels[b]))
    });
    let n = idx.len();
    let has_ties = idx.windows(2).any(|w| values[w[0]] == values[w[1]]);
    let entries = idx
        .iter()
        .enumerate()
        .map(|(pos, &i)| RankedEntry {
            label: labels[i].clone(),
            value: values[i],
            position: pos + 1,
            norm_rank: if n == 1 {
                1.0
            } else {
                (n - pos - 1) as f64 / (n - 1) as f64
            },
        })
        .collect();
    Ranking { entries, has_ties }
}

pub fn rank_countries(res: &FitnessResult) -> Ranking {
    rank_by_value(&res.countries, &res.fitness)
}

pub fn rank_products(res: &FitnessResult) -> Ranking {
    rank_by_value(&res.products, &res.complexity)
}

/// Rows by increasing fitness, columns by increasing complexity (ties by
/// label). On a nested matrix the result is a lower staircase.
pub fn triangular_order(m: &BinaryMatrix, res: &FitnessResult) -> Result<BinaryMatrix> {
    if m.countries() != res.countries.as_slice() || m.products() != res.products.as_slice() {
        return Err(Error::DimensionMismatch(
            "fitness result labels do not match the matrix".into(),
        ));
    }
    let ascending = |labels: &[String], v: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]).then_with(|| labels[a].cmp(&labels[b])));
        idx
    };
    let rows = ascending(&res.countries, &res.fitness);
    let cols = ascending(&res.products, &res.complexity);
    Ok(m.select(&rows, &cols))
}

/// Every row is a run of ones starting at column 0, and run lengths do not
/// decrease going down.
pub fn is_lower_staircase(m: &BinaryMatrix) -> bool {
    let mut prev = 0;
    for row in m.rows() {
        let len = row.iter().take_while(|&&b| b).count();
        if row[len..].iter().any(|&b| b) || len < prev {
            return false;
        }
        prev = len;
    }
    true
}

pub fn write_fitness_csv<W: Write>(ranking: &Ranking, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["country", "fitness", "rank", "norm_rank"])?;
    for e in &ranking.entries {
        w.write_record([
            e.label.clone(),
            format!("{}", e.value),
            e.position.to_string(),
            format!("{}", e.norm_rank),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn write_complexity_csv<W: Write>(ranking: &Ranking, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["product", "complexity", "rank"])?;
    for e in &ranking.entries {
        w.write_record([e.label.clone(), format!("{}", e.value), e.position.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
