//! Growth panel construction.
//!
//! A row keyed by `(country, t)` holds the annualized log growth of GDP per
//! capita from `t` to `t + horizon`, and every driver measured at `t - lag`.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitness::Ranking;
use crate::ingest::{MacroField, MacroPanel};

/// Which fitness-derived number enters the panel as `fitness_rank`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankMode {
    /// `(N - position) / (N - 1)` within the year.
    #[default]
    Normalized,
    /// 1-based position, 1 = fittest.
    Raw,
    /// Natural log of fitness.
    LogFitness,
}

impl std::str::FromStr for RankMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "normalized" => Ok(RankMode::Normalized),
            "raw" => Ok(RankMode::Raw),
            "log_fitness" | "log-fitness" => Ok(RankMode::LogFitness),
            _ => Err(format!("unknown rank mode '{s}' (normalized, raw, log_fitness)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessObs {
    pub fitness: f64,
    pub position: usize,
    pub norm_rank: f64,
}

impl FitnessObs {
    pub fn rank_value(&self, mode: RankMode) -> f64 {
        match mode {
            RankMode::Normalized => self.norm_rank,
            RankMode::Raw => self.position as f64,
            RankMode::LogFitness => self.fitness.ln(),
        }
    }
}

/// Fitness and rank per `(country, year)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitnessSeries {
    obs: BTreeMap<(String, i32), FitnessObs>,
}

impl FitnessSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert_ranking(&mut self, year: i32, ranking: &Ranking) {
        for e in &ranking.entries {
            self.obs.insert(
                (e.label.clone(), year),
                FitnessObs {
                    fitness: e.value,
                    position: e.position,
                    norm_rank: e.norm_rank,
                },
            );
        }
    }

    /// Ranks the optional `fitness` column of a macro panel year by year.
    pub fn from_macro(panel: &MacroPanel) -> Self {
        let mut by_year: BTreeMap<i32, (Vec<String>, Vec<f64>)> = BTreeMap::new();
        for (country, year, row) in panel.iter() {
            if let Some(f) = row.fitness {
                let e = by_year.entry(year).or_default();
                e.0.push(country.to_string());
                e.1.push(f);
            }
        }
        let mut series = FitnessSeries::new();
        for (year, (labels, values)) in by_year {
            series.insert_ranking(year, &crate::fitness::rank_by_value(&labels, &values));
        }
        series
    }

    pub fn get(&self, country: &str, year: i32) -> Option<&FitnessObs> {
        self.obs.get(&(country.to_string(), year))
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["country", "year", "fitness", "rank", "norm_rank"])?;
        for ((c, y), o) in &self.obs {
            w.write_record([
                c.clone(),
                y.to_string(),
                format!("{}", o.fitness),
                o.position.to_string(),
                format!("{}", o.norm_rank),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Rec {
            country: String,
            year: i32,
            fitness: f64,
            rank: usize,
            norm_rank: f64,
        }
        let mut r = csv::Reader::from_reader(input);
        let mut series = FitnessSeries::new();
        for rec in r.deserialize() {
            let rec: Rec = rec?;
            series.obs.insert(
                (rec.country, rec.year),
                FitnessObs {
                    fitness: rec.fitness,
                    position: rec.rank,
                    norm_rank: rec.norm_rank,
                },
            );
        }
        Ok(series)
    }
}

/// Drivers measured at `t - lag`, and growth over `[t, t + horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub country: String,
    /// Base year `t`.
    pub year: i32,
    pub growth: f64,
    pub gdp_pc: f64,
    pub k_emp: f64,
    pub emp: f64,
    pub pop: f64,
    pub tfp: f64,
    pub life_exp: f64,
    pub school: f64,
    pub fitness: f64,
    pub fitness_rank: f64,
}

/// A named panel variable, optionally log-transformed (`log_` prefix).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Variable {
    base: BaseColumn,
    log: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BaseColumn {
    Growth,
    GdpPc,
    KEmp,
    Emp,
    Pop,
    Tfp,
    LifeExp,
    School,
    Fitness,
    FitnessRank,
    EmpPop,
    TfpGdp,
    InvLifeExp,
}

const BASE_COLUMNS: [(&str, BaseColumn); 13] = [
    ("growth", BaseColumn::Growth),
    ("gdp_pc", BaseColumn::GdpPc),
    ("k_emp", BaseColumn::KEmp),
    ("emp", BaseColumn::Emp),
    ("pop", BaseColumn::Pop),
    ("tfp", BaseColumn::Tfp),
    ("life_exp", BaseColumn::LifeExp),
    ("school", BaseColumn::School),
    ("fitness", BaseColumn::Fitness),
    ("fitness_rank", BaseColumn::FitnessRank),
    ("emp_pop", BaseColumn::EmpPop),
    ("tfp_gdp", BaseColumn::TfpGdp),
    ("inv_life_exp", BaseColumn::InvLifeExp),
];

impl Variable {
    pub fn parse(name: &str) -> Option<Variable> {
        let lookup = |n: &str| BASE_COLUMNS.iter().find(|(k, _)| *k == n).map(|(_, b)| *b);
        if let Some(base) = lookup(name) {
            return Some(Variable { base, log: false });
        }
        let base = lookup(name.strip_prefix("log_")?)?;
        Some(Variable { base, log: true })
    }

    /// Every accepted variable name.
    pub fn names() -> Vec<String> {
        BASE_COLUMNS
            .iter()
            .flat_map(|(n, _)| [n.to_string(), format!("log_{n}")])
            .collect()
    }

    /// `None` when a log is taken of a nonpositive value.
    pub fn value(&self, row: &GrowthRow) -> Option<f64> {
        let v = match self.base {
            BaseColumn::Growth => row.growth,
            BaseColumn::GdpPc => row.gdp_pc,
            BaseColumn::KEmp => row.k_emp,
            BaseColumn::Emp => row.emp,
            BaseColumn::Pop => row.pop,
            BaseColumn::Tfp => row.tfp,
            BaseColumn::LifeExp => row.life_exp,
            BaseColumn::School => row.school,
            BaseColumn::Fitness => row.fitness,
            BaseColumn::FitnessRank => row.fitness_rank,
            BaseColumn::EmpPop => row.emp / row.pop,
            BaseColumn::TfpGdp => row.tfp / row.gdp_pc,
            BaseColumn::InvLifeExp => 1.0 / row.life_exp,
        };
        if !self.log {
            return v.is_finite().then_some(v);
        }
        (v > 0.0 && v.is_finite()).then(|| v.ln())
    }
}

/// Closest valid variable name, for error messages.
pub fn suggest_variable(name: &str) -> Option<String> {
    let names = Variable::names();
    if let Some(n) = names
        .iter()
        .filter(|n| n.starts_with(name))
        .min_by_key(|n| n.len())
    {
        return Some(n.clone());
    }
    names
        .into_iter()
        .map(|n| (strsim::jaro_winkler(name, &n), n))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, n)| n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PanelOptions {
    /// Growth horizon in years.
    pub horizon: u32,
    /// Years between the drivers and the growth window.
    pub lag: u32,
    /// Base years are kept when `(t - first_year) % stride == 0`.
    pub stride: u32,
    pub rank_mode: RankMode,
}

impl Default for PanelOptions {
    fn default() -> Self {
        PanelOptions {
            horizon: 5,
            lag: 5,
            stride: 1,
            rank_mode: RankMode::Normalized,
        }
    }
}

/// Why candidate `(country, t)` rows were dropped.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Attrition {
    pub candidates: usize,
    pub stride_skipped: usize,
    pub missing_gdp_base: usize,
    pub missing_gdp_end: usize,
    pub missing_lagged_row: usize,
    /// Per macro field, counted at the first missing driver only.
    pub missing_driver: BTreeMap<String, usize>,
    pub missing_fitness: usize,
    pub invalid_log: usize,
    pub retained: usize,
}

impl std::fmt::Display for Attrition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "candidates {}, stride {}, no base gdp {}, no end gdp {}, no lagged row {}, missing drivers {:?}, no fitness {}, invalid log {}, retained {}",
            self.candidates,
            self.stride_skipped,
            self.missing_gdp_base,
            self.missing_gdp_end,
            self.missing_lagged_row,
            self.missing_driver,
            self.missing_fitness,
            self.invalid_log,
            self.retained
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthPanel {
    pub rows: Vec<GrowthRow>,
    pub options: PanelOptions,
    pub attrition: Attrition,
}

/// Regressors of the growth regression, in table order.
pub const DRIVER_REGRESSORS: [&str; 6] = [
    "log_gdp_pc",
    "log_k_emp",
    "log_emp",
    "log_tfp_gdp",
    "log_inv_life_exp",
    "log_school",
];
pub const FITNESS_REGRESSOR: &str = "fitness_rank";

const DRIVER_FIELDS: [MacroField; 7] = [
    MacroField::GdpPc,
    MacroField::KEmp,
    MacroField::Emp,
    MacroField::Pop,
    MacroField::Tfp,
    MacroField::LifeExp,
    MacroField::School,
];

pub fn annualized_log_growth(start: f64, end: f64, horizon: u32) -> f64 {
    (end.ln() - start.ln()) / f64::from(horizon)
}

pub fn build_growth_panel(
    macro_panel: &MacroPanel,
    fitness: &FitnessSeries,
    opts: PanelOptions,
) -> Result<GrowthPanel> {
    if opts.horizon == 0 || opts.stride == 0 {
        return Err(Error::Config(vec!["panel horizon and stride must be >= 1".into()]));
    }
    let first_year = macro_panel.iter().map(|(_, y, _)| y).min().unwrap_or(0);
    let mut att = Attrition::default();
    let mut rows = Vec::new();
    let regressors: Vec<Variable> = DRIVER_REGRESSORS
        .iter()
        .chain(std::iter::once(&FITNESS_REGRESSOR))
        .map(|n| Variable::parse(n).expect("known regressor"))
        .collect();

    for (country, t, base) in macro_panel.iter() {
        att.candidates += 1;
        if (t - first_year) % opts.stride as i32 != 0 {
            att.stride_skipped += 1;
            continue;
        }
        let Some(gdp_t) = base.gdp_pc else {
            att.missing_gdp_base += 1;
            continue;
        };
        let Some(gdp_end) = macro_panel
            .get(country, t + opts.horizon as i32)
            .and_then(|r| r.gdp_pc)
        else {
            att.missing_gdp_end += 1;
            continue;
        };
        let t_lag = t - opts.lag as i32;
        let Some(lagged) = macro_panel.get(country, t_lag) else {
            att.missing_lagged_row += 1;
            continue;
        };
        let mut drivers = [0.0; 7];
        if let Some(missing) = DRIVER_FIELDS
            .iter()
            .zip(drivers.iter_mut())
            .find_map(|(&f, slot)| match lagged.get(f) {
                Some(v) => {
                    *slot = v;
                    None
                }
                None => Some(f),
            })
        {
            *att.missing_driver.entry(missing.name().to_string()).or_default() += 1;
            continue;
        }
        let Some(fit) = fitness.get(country, t_lag) else {
            att.missing_fitness += 1;
            continue;
        };
        let [gdp_pc, k_emp, emp, pop, tfp, life_exp, school] = drivers;
        let row = GrowthRow {
            country: country.to_string(),
            year: t,
            growth: annualized_log_growth(gdp_t, gdp_end, opts.horizon),
            gdp_pc,
            k_emp,
            emp,
            pop,
            tfp,
            life_exp,
            school,
            fitness: fit.fitness,
            fitness_rank: fit.rank_value(opts.rank_mode),
        };
        if !row.growth.is_finite() || regressors.iter().any(|v| v.value(&row).is_none()) {
            att.invalid_log += 1;
            continue;
        }
        rows.push(row);
    }
    att.retained = rows.len();
    if rows.is_empty() {
        return Err(Error::EmptyPanel(att.to_string()));
    }
    Ok(GrowthPanel {
        rows,
        options: opts,
        attrition: att,
    })
}

impl GrowthPanel {
    pub fn from_rows(rows: Vec<GrowthRow>) -> Self {
        GrowthPanel {
            attrition: Attrition {
                retained: rows.len(),
                candidates: rows.len(),
                ..Default::default()
            },
            rows,
            options: PanelOptions::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_countries(&self) -> usize {
        let mut c: Vec<&str> = self.rows.iter().map(|r| r.country.as_str()).collect();
        c.sort_unstable();
        c.dedup();
        c.len()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        if self.rows.is_empty() {
            w.write_record([
                "country", "year", "growth", "gdp_pc", "k_emp", "emp", "pop", "tfp", "life_exp",
                "school", "fitness", "fitness_rank",
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let rows = r.deserialize().collect::<std::result::Result<Vec<GrowthRow>, _>>()?;
        Ok(GrowthPanel::from_rows(rows))
    }
}
