//! Seeded generators with known structure.
//!
//! Every generator draws from `ChaCha8Rng::seed_from_u64(seed)` (rand_chacha),
//! so output is reproducible across platforms for a given seed. Bernoulli
//! draws compare `rng.random::<f64>()` against the link probability.
//!
//! * [`generate_nested`]: perfectly nested matrices, the idealised triangular
//!   structure that fitness ordering reveals.
//! * [`generate_tripartite`]: a country → capability → product model where a
//!   country exports a product iff it owns every capability the product needs.
//! * [`synthetic_economy`]: trade flows plus a macro panel driven by the
//!   capability model, used for end-to-end pipeline runs.

use std::collections::BTreeSet;

use rand::seq::{index, IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitness::FitnessResult;
use crate::ingest::{MacroPanel, MacroRow, TradeFlow};
use crate::matrix::{index_labels, BinaryMatrix};
use crate::rca::prune;
use crate::stats::spearman;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Row `c` exports exactly the first `diversifications[c]` columns.
pub fn nested_from_diversifications(diversifications: &[usize], np: usize) -> Result<BinaryMatrix> {
    if let Some(d) = diversifications.iter().find(|&&d| d > np) {
        return Err(Error::Generator(format!("diversification {d} exceeds {np} products")));
    }
    let rows: Vec<Vec<bool>> = diversifications
        .iter()
        .map(|&d| (0..np).map(|p| p < d).collect())
        .collect();
    BinaryMatrix::from_rows(&rows)
}

/// A perfectly nested `nc × np` matrix with shuffled rows and columns.
///
/// Diversifications are distinct draws from `1..=np` when `nc <= np`, and
/// independent draws otherwise. Columns never exported by anyone are left in
/// place; [`prune`] removes them.
pub fn generate_nested(nc: usize, np: usize, seed: u64) -> Result<BinaryMatrix> {
    if nc == 0 || np == 0 {
        return Err(Error::Generator("nested matrix needs nc >= 1 and np >= 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    let divs: Vec<usize> = if nc <= np {
        index::sample(&mut rng, np, nc).into_iter().map(|d| d + 1).collect()
    } else {
        (0..nc).map(|_| rng.random_range(1..=np)).collect()
    };
    // popularity[k] is the column holding the k-th most ubiquitous product.
    let mut popularity: Vec<usize> = (0..np).collect();
    popularity.shuffle(&mut rng);
    let mut rows = vec![vec![false; np]; nc];
    for (row, &d) in rows.iter_mut().zip(&divs) {
        for &p in &popularity[..d] {
            row[p] = true;
        }
    }
    BinaryMatrix::from_rows(&rows)
}

/// Rows can be ordered so that each row's support contains the next one's.
pub fn is_nested(m: &BinaryMatrix) -> bool {
    let sums = m.row_sums();
    let mut order: Vec<usize> = (0..m.n_countries()).collect();
    order.sort_by(|&a, &b| sums[b].cmp(&sums[a]));
    order.windows(2).all(|w| {
        let (big, small) = (m.row(w[0]), m.row(w[1]));
        big.iter().zip(small).all(|(&b, &s)| b || !s)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkDensities {
    /// Probability that a country owns a given capability.
    pub country: f64,
    /// Probability that a product requires a given capability.
    pub product: f64,
}

impl Default for LinkDensities {
    fn default() -> Self {
        LinkDensities {
            country: 0.5,
            product: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapabilityModel {
    pub n_capabilities: usize,
    pub countries: Vec<String>,
    pub products: Vec<String>,
    pub country_capabilities: Vec<BTreeSet<usize>>,
    pub product_requirements: Vec<BTreeSet<usize>>,
    pub densities: LinkDensities,
    pub seed: u64,
    /// Draw attempts needed to get a non-empty pruned matrix.
    pub attempts: usize,
}

impl CapabilityModel {
    pub fn can_export(&self, c: usize, p: usize) -> bool {
        self.product_requirements[p].is_subset(&self.country_capabilities[c])
    }

    /// Full (unpruned) country × product matrix implied by the model.
    pub fn export_matrix(&self) -> BinaryMatrix {
        let rows: Vec<Vec<bool>> = (0..self.countries.len())
            .map(|c| (0..self.products.len()).map(|p| self.can_export(c, p)).collect())
            .collect();
        BinaryMatrix::new(
            0,
            self.countries.clone(),
            self.products.clone(),
            rows.into_iter().flatten().collect(),
        )
        .expect("model labels are unique")
    }

    pub fn capability_count(&self, country: &str) -> Option<usize> {
        let c = self.countries.iter().position(|l| l == country)?;
        Some(self.country_capabilities[c].len())
    }
}

const TRIPARTITE_RETRIES: usize = 16;
const EMPTY_COUNTRY_REDRAWS: usize = 100;

fn draw_set<R: Rng>(rng: &mut R, k: usize, density: f64) -> BTreeSet<usize> {
    (0..k).filter(|_| rng.random::<f64>() < density).collect()
}

/// Draws a capability model and returns it with its pruned export matrix.
pub fn generate_tripartite(
    nc: usize,
    nk: usize,
    np: usize,
    densities: LinkDensities,
    seed: u64,
) -> Result<(CapabilityModel, BinaryMatrix)> {
    if nc == 0 || nk == 0 || np == 0 {
        return Err(Error::Generator("tripartite model needs nc, nk, np >= 1".into()));
    }
    for d in [densities.country, densities.product] {
        if !(d > 0.0 && d <= 1.0) {
            return Err(Error::Generator(format!("density {d} outside (0, 1]")));
        }
    }
    let mut rng = rng_from_seed(seed);
    for attempt in 1..=TRIPARTITE_RETRIES {
        let country_capabilities = (0..nc)
            .map(|_| {
                for _ in 0..EMPTY_COUNTRY_REDRAWS {
                    let s = draw_set(&mut rng, nk, densities.country);
                    if !s.is_empty() {
                        return s;
                    }
                }
                BTreeSet::from([rng.random_range(0..nk)])
            })
            .collect();
        let product_requirements = (0..np)
            .map(|_| draw_set(&mut rng, nk, densities.product))
            .collect();
        let model = CapabilityModel {
            n_capabilities: nk,
            countries: index_labels('C', nc),
            products: index_labels('P', np),
            country_capabilities,
            product_requirements,
            densities,
            seed,
            attempts: attempt,
        };
        match prune(&model.export_matrix()) {
            Ok((m, _)) => return Ok((model, m)),
            Err(Error::EmptyAfterPruning) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Generator(format!(
        "no exportable product after {TRIPARTITE_RETRIES} draws"
    )))
}

/// Spearman correlation between capability counts and fitness over the
/// countries that survived pruning.
pub fn capability_fitness_spearman(model: &CapabilityModel, res: &FitnessResult) -> Option<f64> {
    let counts: Vec<f64> = res
        .countries
        .iter()
        .map(|c| model.capability_count(c).map(|n| n as f64))
        .collect::<Option<_>>()?;
    spearman(&counts, &res.fitness)
}

/// Parameters of [`synthetic_economy`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EconomyConfig {
    pub n_countries: usize,
    pub n_capabilities: usize,
    pub n_products: usize,
    pub densities: LinkDensities,
    /// Years with trade data, inclusive.
    pub trade_years: (i32, i32),
    /// Years covered by the macro panel, inclusive.
    pub macro_years: (i32, i32),
    /// Share of macro cells blanked out to exercise listwise deletion.
    pub missing_rate: f64,
}

impl Default for EconomyConfig {
    fn default() -> Self {
        EconomyConfig {
            n_countries: 20,
            n_capabilities: 10,
            n_products: 50,
            densities: LinkDensities::default(),
            trade_years: (1990, 1992),
            macro_years: (1985, 2005),
            missing_rate: 0.02,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticEconomy {
    pub model: CapabilityModel,
    pub flows: Vec<TradeFlow>,
    pub panel: MacroPanel,
}

/// Trade flows and a macro panel for a toy world.
///
/// Countries own the capability sets of a tripartite model and pick up one
/// more capability per trade year with probability 0.3. Feasible products
/// carry large export values and infeasible ones small noise, so RCA ≥ 1
/// roughly recovers feasibility. Annual log GDP growth rises with the
/// capability share and falls with log income (conditional convergence).
pub fn synthetic_economy(cfg: &EconomyConfig, seed: u64) -> Result<SyntheticEconomy> {
    if cfg.trade_years.0 > cfg.trade_years.1 || cfg.macro_years.0 > cfg.macro_years.1 {
        return Err(Error::Generator("empty year range".into()));
    }
    let (mut model, _) = generate_tripartite(
        cfg.n_countries,
        cfg.n_capabilities,
        cfg.n_products,
        cfg.densities,
        seed,
    )?;
    let mut rng = rng_from_seed(seed ^ 0x5EED_0F_EC0F17);
    let nk = cfg.n_capabilities as f64;
    let feasible_size: Normal<f64> = Normal::new(0.0, 0.5).expect("valid sigma");

    let mut flows = Vec::new();
    for year in cfg.trade_years.0..=cfg.trade_years.1 {
        for c in 0..model.countries.len() {
            let scale = 1.0 + model.country_capabilities[c].len() as f64;
            for p in 0..model.products.len() {
                let value = if model.can_export(c, p) {
                    1000.0 * scale * feasible_size.sample(&mut rng).exp()
                } else {
                    rng.random::<f64>()
                };
                flows.push(TradeFlow {
                    year,
                    exporter: model.countries[c].clone(),
                    product: model.products[p].clone(),
                    value,
                });
            }
        }
        for caps in model.country_capabilities.iter_mut() {
            if rng.random::<f64>() < 0.3 {
                let missing: Vec<usize> =
                    (0..cfg.n_capabilities).filter(|k| !caps.contains(k)).collect();
                if let Some(&k) = missing.choose(&mut rng) {
                    caps.insert(k);
                }
            }
        }
    }

    let shock: Normal<f64> = Normal::new(0.0, 0.01).expect("valid sigma");
    let mut panel = MacroPanel::new();
    for c in 0..model.countries.len() {
        let share = model.country_capabilities[c].len() as f64 / nk;
        let mut log_gdp: f64 = rng.random_range(6.5..10.0);
        let mut pop = rng.random_range(1e6..1e8);
        let emp_rate = rng.random_range(0.35..0.6);
        let mut capital: f64 = rng.random_range(2.0..4.0);
        let tfp_level = rng.random_range(0.5..1.5);
        for year in cfg.macro_years.0..=cfg.macro_years.1 {
            let life = (50.0 + 25.0 * share + rng.random_range(-3.0..3.0)).clamp(30.0, 85.0);
            let school = (2.0 + 10.0 * share + rng.random_range(-1.0..1.0)).max(0.1);
            let gdp_pc = log_gdp.exp();
            let mut row = MacroRow {
                gdp_pc: Some(gdp_pc),
                k_emp: Some(capital * gdp_pc / emp_rate),
                emp: Some(emp_rate * pop),
                pop: Some(pop),
                tfp: Some(tfp_level * rng.random_range(0.95..1.05)),
                life_exp: Some(life),
                school: Some(school),
                fitness: None,
            };
            if rng.random::<f64>() < cfg.missing_rate {
                row.school = None;
            }
            panel.insert(&model.countries[c], year, row)?;
            log_gdp += 0.005 + 0.04 * share - 0.004 * (log_gdp - 8.0) + shock.sample(&mut rng);
            pop *= 1.01;
            capital *= (0.02 * shock.sample(&mut rng) / 0.01).exp();
        }
    }
    Ok(SyntheticEconomy {
        model,
        flows,
        panel,
    })
}
