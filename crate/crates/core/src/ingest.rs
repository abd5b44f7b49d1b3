//! Trade-flow and macro-panel CSV ingestion.
//!
//! Bad data rows never abort a parse: they are returned as [`Rejection`]s
//! alongside the accepted rows, so that `accepted + rejected == data rows`.
//! Only structural problems (a header missing a required column, duplicate
//! panel keys) are fatal.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::ExportMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeFlow {
    pub year: i32,
    pub exporter: String,
    pub product: String,
    /// Current USD, nonnegative.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejection {
    /// 1-based line number in the source, header is line 1.
    pub line: usize,
    pub reason: String,
}

/// Column-name mapping for trade files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TradeSchema {
    pub year: String,
    pub exporter: String,
    pub product: String,
    pub value: String,
    /// Inclusive year window; rows outside it are rejected.
    pub years: Option<(i32, i32)>,
}

impl Default for TradeSchema {
    fn default() -> Self {
        TradeSchema {
            year: "year".into(),
            exporter: "exporter".into(),
            product: "product".into(),
            value: "value".into(),
            years: None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct TradeParse {
    pub flows: Vec<TradeFlow>,
    pub rejections: Vec<Rejection>,
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::MalformedHeader(format!("missing column '{name}'")))
}

pub fn parse_trade_flows<R: Read>(input: R, schema: &TradeSchema) -> Result<TradeParse> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| Error::MalformedHeader(e.to_string()))?
        .clone();
    let iy = column(&headers, &schema.year)?;
    let ie = column(&headers, &schema.exporter)?;
    let ip = column(&headers, &schema.product)?;
    let iv = column(&headers, &schema.value)?;

    let mut out = TradeParse::default();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                out.rejections.push(Rejection {
                    line,
                    reason: format!("unreadable record: {e}"),
                });
                continue;
            }
        };
        match trade_row(&rec, [iy, ie, ip, iv], schema) {
            Ok(flow) => out.flows.push(flow),
            Err(reason) => out.rejections.push(Rejection { line, reason }),
        }
    }
    Ok(out)
}

fn trade_row(
    rec: &csv::StringRecord,
    [iy, ie, ip, iv]: [usize; 4],
    schema: &TradeSchema,
) -> std::result::Result<TradeFlow, String> {
    let field = |i: usize| rec.get(i).map(str::trim).ok_or("missing field");
    let year_s = field(iy)?;
    let year: i32 = year_s
        .parse()
        .map_err(|_| format!("unparseable year '{year_s}'"))?;
    if let Some((lo, hi)) = schema.years {
        if year < lo || year > hi {
            return Err(format!("year {year} outside {lo}..={hi}"));
        }
    }
    let exporter = field(ie)?;
    if exporter.is_empty() {
        return Err("empty exporter".into());
    }
    let product = field(ip)?;
    if product.is_empty() {
        return Err("empty product".into());
    }
    let value_s = field(iv)?;
    let value: f64 = value_s
        .parse()
        .map_err(|_| format!("unparseable value '{value_s}'"))?;
    if !value.is_finite() {
        return Err(format!("non-finite value '{value_s}'"));
    }
    if value < 0.0 {
        return Err(format!("value {value} violates nonnegativity"));
    }
    Ok(TradeFlow {
        year,
        exporter: exporter.to_string(),
        product: product.to_string(),
        value,
    })
}

pub fn write_trade_flows<W: Write>(flows: &[TradeFlow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["year", "exporter", "product", "value"])?;
    for f in flows {
        w.write_record([
            f.year.to_string(),
            f.exporter.clone(),
            f.product.clone(),
            format!("{}", f.value),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Aggregates the flows of `year` into a dense matrix with lexicographically
/// sorted labels. Duplicate (exporter, product) flows are summed.
pub fn build_export_matrix(flows: &[TradeFlow], year: i32) -> Result<ExportMatrix> {
    // Sorting the contributions makes the floating-point sums independent of
    // the input order.
    let mut cells: BTreeMap<(&str, &str), Vec<f64>> = BTreeMap::new();
    for f in flows.iter().filter(|f| f.year == year) {
        cells
            .entry((f.exporter.as_str(), f.product.as_str()))
            .or_default()
            .push(f.value);
    }
    if cells.is_empty() {
        return Err(Error::EmptyYear(year));
    }
    let countries: BTreeSet<&str> = cells.keys().map(|k| k.0).collect();
    let products: BTreeSet<&str> = cells.keys().map(|k| k.1).collect();
    let pidx: HashMap<&str, usize> = products.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let cidx: HashMap<&str, usize> = countries.iter().enumerate().map(|(i, c)| (*c, i)).collect();

    let np = products.len();
    let mut values = vec![0.0; countries.len() * np];
    for ((c, p), mut parts) in cells {
        parts.sort_by(f64::total_cmp);
        values[cidx[c] * np + pidx[p]] = parts.iter().sum();
    }
    ExportMatrix::new(
        year,
        countries.into_iter().map(String::from).collect(),
        products.into_iter().map(String::from).collect(),
        values,
    )
}

/// Distinct years present in a flow list, ascending.
pub fn flow_years(flows: &[TradeFlow]) -> Vec<i32> {
    flows
        .iter()
        .map(|f| f.year)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// One (country, year) observation. `None` marks a missing value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MacroRow {
    pub gdp_pc: Option<f64>,
    pub k_emp: Option<f64>,
    pub emp: Option<f64>,
    pub pop: Option<f64>,
    pub tfp: Option<f64>,
    pub life_exp: Option<f64>,
    pub school: Option<f64>,
    pub fitness: Option<f64>,
}

/// The numeric fields of a macro panel, in canonical column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MacroField {
    GdpPc,
    KEmp,
    Emp,
    Pop,
    Tfp,
    LifeExp,
    School,
    Fitness,
}

impl MacroField {
    pub const ALL: [MacroField; 8] = [
        MacroField::GdpPc,
        MacroField::KEmp,
        MacroField::Emp,
        MacroField::Pop,
        MacroField::Tfp,
        MacroField::LifeExp,
        MacroField::School,
        MacroField::Fitness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MacroField::GdpPc => "gdp_pc",
            MacroField::KEmp => "k_emp",
            MacroField::Emp => "emp",
            MacroField::Pop => "pop",
            MacroField::Tfp => "tfp",
            MacroField::LifeExp => "life_exp",
            MacroField::School => "school",
            MacroField::Fitness => "fitness",
        }
    }
}

impl MacroRow {
    pub fn get(&self, field: MacroField) -> Option<f64> {
        match field {
            MacroField::GdpPc => self.gdp_pc,
            MacroField::KEmp => self.k_emp,
            MacroField::Emp => self.emp,
            MacroField::Pop => self.pop,
            MacroField::Tfp => self.tfp,
            MacroField::LifeExp => self.life_exp,
            MacroField::School => self.school,
            MacroField::Fitness => self.fitness,
        }
    }

    pub fn set(&mut self, field: MacroField, v: Option<f64>) {
        let slot = match field {
            MacroField::GdpPc => &mut self.gdp_pc,
            MacroField::KEmp => &mut self.k_emp,
            MacroField::Emp => &mut self.emp,
            MacroField::Pop => &mut self.pop,
            MacroField::Tfp => &mut self.tfp,
            MacroField::LifeExp => &mut self.life_exp,
            MacroField::School => &mut self.school,
            MacroField::Fitness => &mut self.fitness,
        };
        *slot = v;
    }
}

/// Country-year macroeconomic panel keyed by `(country, year)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MacroPanel {
    rows: BTreeMap<(String, i32), MacroRow>,
}

impl MacroPanel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, country: &str, year: i32, row: MacroRow) -> Result<()> {
        let key = (country.to_string(), year);
        if self.rows.contains_key(&key) {
            return Err(Error::DuplicateKey {
                country: key.0,
                year,
            });
        }
        self.rows.insert(key, row);
        Ok(())
    }

    pub fn get(&self, country: &str, year: i32) -> Option<&MacroRow> {
        self.rows.get(&(country.to_string(), year))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, i32, &MacroRow)> {
        self.rows.iter().map(|((c, y), r)| (c.as_str(), *y, r))
    }

    pub fn has_fitness(&self) -> bool {
        self.rows.values().any(|r| r.fitness.is_some())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let with_fitness = self.has_fitness();
        let fields: Vec<MacroField> = MacroField::ALL
            .into_iter()
            .filter(|f| with_fitness || *f != MacroField::Fitness)
            .collect();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["country", "year"];
        header.extend(fields.iter().map(|f| f.name()));
        w.write_record(&header)?;
        for (country, year, row) in self.iter() {
            let mut rec = vec![country.to_string(), year.to_string()];
            rec.extend(fields.iter().map(|&f| match row.get(f) {
                Some(v) => format!("{v}"),
                None => "NA".to_string(),
            }));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Column-name mapping for macro panels. `fitness` is optional in the file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PanelSchema {
    pub country: String,
    pub year: String,
    pub columns: BTreeMap<MacroField, String>,
}

impl Default for PanelSchema {
    fn default() -> Self {
        PanelSchema {
            country: "country".into(),
            year: "year".into(),
            columns: MacroField::ALL
                .into_iter()
                .map(|f| (f, f.name().to_string()))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct PanelParse {
    pub panel: MacroPanel,
    pub rejections: Vec<Rejection>,
}

const MISSING: [&str; 6] = ["", "NA", "N/A", "NaN", "nan", ".."];

fn macro_cell(field: MacroField, raw: &str) -> std::result::Result<Option<f64>, String> {
    let s = raw.trim();
    if MISSING.contains(&s) {
        return Ok(None);
    }
    let v: f64 = s
        .parse()
        .map_err(|_| format!("non-numeric '{s}' in column {}", field.name()))?;
    if !v.is_finite() {
        return Err(format!("non-finite '{s}' in column {}", field.name()));
    }
    match field {
        MacroField::GdpPc if v <= 0.0 => Err(format!("gdp_pc {v} must be > 0")),
        MacroField::LifeExp if !(v > 0.0 && v < 120.0) => {
            Err(format!("life_exp {v} outside (0, 120)"))
        }
        _ => Ok(Some(v)),
    }
}

pub fn parse_macro_panel<R: Read>(input: R, schema: &PanelSchema) -> Result<PanelParse> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| Error::MalformedHeader(e.to_string()))?
        .clone();
    let ic = column(&headers, &schema.country)?;
    let iy = column(&headers, &schema.year)?;
    let mut fields = Vec::new();
    for (&field, name) in &schema.columns {
        match column(&headers, name) {
            Ok(i) => fields.push((field, i)),
            Err(_) if field == MacroField::Fitness => {}
            Err(e) => return Err(e),
        }
    }

    let mut out = PanelParse::default();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                out.rejections.push(Rejection {
                    line,
                    reason: format!("unreadable record: {e}"),
                });
                continue;
            }
        };
        let parsed = (|| {
            let country = rec.get(ic).map(str::trim).unwrap_or("");
            if country.is_empty() {
                return Err("empty country".to_string());
            }
            let ys = rec.get(iy).map(str::trim).unwrap_or("");
            let year: i32 = ys.parse().map_err(|_| format!("unparseable year '{ys}'"))?;
            let mut row = MacroRow::default();
            for &(field, idx) in &fields {
                let raw = rec.get(idx).ok_or("missing field")?;
                row.set(field, macro_cell(field, raw)?);
            }
            Ok((country.to_string(), year, row))
        })();
        match parsed {
            Ok((country, year, row)) => out.panel.insert(&country, year, row)?,
            Err(reason) => out.rejections.push(Rejection { line, reason }),
        }
    }
    Ok(out)
}
