//! End-to-end runs driven by a single TOML file.
//!
//! ```toml
//! seed = 7
//! output_dir = "out"
//!
//! [inputs]
//! trade = "trade.csv"
//! macro = "panel.csv"
//!
//! [years]
//! start = 1990
//! end = 1992
//!
//! [fitness]
//! value_tolerance = 1e-9
//!
//! [[colormap]]
//! x = "log_fitness"
//! y = "log_gdp_pc"
//!
//! [[regression]]
//! name = "with_fitness"
//! include_fitness = true
//! ```
//!
//! Stages run in order (synthesize, ingest, rca, fitness, panel, colormap,
//! regress) and every file written is listed with its SHA-256 in
//! `manifest.json`. A failing stage still leaves a manifest naming it.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::econometrics::{
    build_growth_panel, regress, Covariance, FitnessSeries, PanelOptions, RegressionOptions,
};
use crate::error::{Error, Result};
use crate::fitness::{
    compute_fitness, rank_countries, rank_products, write_complexity_csv, write_fitness_csv,
    FitnessConfig, StopReason,
};
use crate::ingest::{
    build_export_matrix, parse_macro_panel, parse_trade_flows, write_trade_flows, PanelSchema,
    TradeSchema,
};
use crate::kernelmap::{build_colormap, ColormapSpec};
use crate::rca::{binarize, compute_rca, prune};
use crate::synthetic::{synthetic_economy, EconomyConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inputs {
    pub trade: PathBuf,
    #[serde(rename = "macro")]
    pub macro_panel: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearRange {
    pub start: i32,
    pub end: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RcaOptions {
    pub threshold: f64,
    pub prune: bool,
}

impl Default for RcaOptions {
    fn default() -> Self {
        RcaOptions {
            threshold: 1.0,
            prune: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionSpec {
    pub name: String,
    #[serde(default = "yes")]
    pub include_fitness: bool,
    #[serde(default)]
    pub fixed_effects: bool,
    #[serde(default)]
    pub covariance: Covariance,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    pub inputs: Inputs,
    pub years: YearRange,
    #[serde(default)]
    pub rca: RcaOptions,
    #[serde(default)]
    pub fitness: FitnessConfig,
    #[serde(default)]
    pub panel: PanelOptions,
    #[serde(default)]
    pub colormap: Vec<ColormapSpec>,
    #[serde(default)]
    pub regression: Vec<RegressionSpec>,
    /// When present, the inputs are generated from this model first.
    #[serde(default)]
    pub synthetic: Option<EconomyConfig>,
}

impl PipelineConfig {
    pub fn from_toml_str(s: &str) -> std::result::Result<Self, String> {
        toml::from_str(s).map_err(|e| e.to_string())
    }

    /// Reads a config file and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| Error::Config(vec![e]))?;
        if let Some(dir) = path.parent() {
            cfg.resolve_relative_to(dir);
        }
        Ok(cfg)
    }

    pub fn resolve_relative_to(&mut self, dir: &Path) {
        for p in [
            &mut self.inputs.trade,
            &mut self.inputs.macro_panel,
            &mut self.output_dir,
        ] {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
    }

    /// Every violated constraint; empty when the config is usable.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let paths = [
            ("inputs.trade", &self.inputs.trade),
            ("inputs.macro", &self.inputs.macro_panel),
            ("output_dir", &self.output_dir),
        ];
        for (i, (a, pa)) in paths.iter().enumerate() {
            for (b, pb) in &paths[i + 1..] {
                if pa == pb {
                    v.push(format!("{a} and {b} refer to the same path"));
                }
            }
        }
        if self.years.start > self.years.end {
            v.push(format!(
                "years: start {} is after end {}",
                self.years.start, self.years.end
            ));
        }
        if !(self.rca.threshold > 0.0 && self.rca.threshold.is_finite()) {
            v.push(format!("rca.threshold must be > 0 (got {})", self.rca.threshold));
        }
        v.extend(self.fitness.validate());
        if self.panel.horizon == 0 {
            v.push("panel.horizon must be >= 1".into());
        }
        if self.panel.stride == 0 {
            v.push("panel.stride must be >= 1".into());
        }
        for (i, spec) in self.colormap.iter().enumerate() {
            v.extend(spec.validate().into_iter().map(|p| format!("colormap[{i}]: {p}")));
        }
        let mut names = BTreeMap::new();
        for r in &self.regression {
            if r.name.is_empty() || r.name.contains(['/', '\\']) {
                v.push(format!("regression name '{}' is not a valid file stem", r.name));
            }
            if names.insert(r.name.as_str(), ()).is_some() {
                v.push(format!("regression name '{}' is used twice", r.name));
            }
        }
        if let Some(s) = &self.synthetic {
            if s.trade_years.0 > self.years.start || s.trade_years.1 < self.years.end {
                v.push("synthetic.trade_years must cover years".into());
            }
        }
        v
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Validates a config file. Only an unreadable file is an `Err`.
pub fn validate_config(path: &Path) -> Result<ValidationReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let violations = match PipelineConfig::from_toml_str(&text) {
        Ok(cfg) => cfg.violations(),
        Err(e) => vec![e],
    };
    Ok(ValidationReport { violations })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearConvergence {
    pub year: i32,
    pub converged_by: StopReason,
    pub iterations: usize,
    pub countries: usize,
    pub products: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub seed: u64,
    pub status: String,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
    pub artifacts: Vec<Artifact>,
    pub convergence: Vec<YearConvergence>,
    pub rejected_rows: BTreeMap<String, usize>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunManifest {
    /// `path -> sha256` for every artifact.
    pub fn hashes(&self) -> BTreeMap<String, String> {
        self.artifacts
            .iter()
            .map(|a| (a.path.clone(), a.sha256.clone()))
            .collect()
    }

    pub fn artifact(&self, path: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.path == path)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

struct Outputs {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
}

impl Outputs {
    fn write_to(&mut self, path: &Path, label: String, bytes: Vec<u8>) -> Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(path, &bytes).map_err(|e| Error::io(path, e))?;
        self.artifacts.push(Artifact {
            path: label,
            sha256: sha256_hex(&bytes),
            bytes: bytes.len(),
        });
        Ok(())
    }

    fn write(
        &mut self,
        name: &str,
        render: impl FnOnce(&mut Vec<u8>) -> Result<()>,
    ) -> Result<()> {
        let mut buf = Vec::new();
        render(&mut buf)?;
        let path = self.dir.join(name);
        self.write_to(&path, name.to_string(), buf)
    }
}

fn staged<T>(stage: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage,
        source: Box::new(e),
    })
}

pub const MANIFEST: &str = "manifest.json";

/// Runs every stage and writes `manifest.json` into the output directory.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunManifest> {
    let mut manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        status: "ok".into(),
        failed_stage: None,
        error: None,
        artifacts: Vec::new(),
        convergence: Vec::new(),
        rejected_rows: BTreeMap::new(),
        timings_ms: BTreeMap::new(),
    };
    let mut out = Outputs {
        dir: cfg.output_dir.clone(),
        artifacts: Vec::new(),
    };
    let result = run_stages(cfg, &mut manifest, &mut out);
    manifest.artifacts = out.artifacts;
    if let Err(Error::Stage { stage, source }) = &result {
        manifest.status = "failed".into();
        manifest.failed_stage = Some(stage.to_string());
        manifest.error = Some(source.to_string());
    }
    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    let path = cfg.output_dir.join(MANIFEST);
    let text = serde_json::to_vec_pretty(&manifest)?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    result.map(|_| manifest)
}

fn run_stages(cfg: &PipelineConfig, manifest: &mut RunManifest, out: &mut Outputs) -> Result<()> {
    let mut clock = Instant::now();
    let mut lap = |manifest: &mut RunManifest, stage: &str| {
        manifest
            .timings_ms
            .insert(stage.to_string(), clock.elapsed().as_secs_f64() * 1e3);
        clock = Instant::now();
    };

    let problems = cfg.violations();
    if !problems.is_empty() {
        return staged("validate", Err(Error::Config(problems)));
    }

    if let Some(econ) = &cfg.synthetic {
        let world = staged("synthesize", synthetic_economy(econ, cfg.seed))?;
        let mut buf = Vec::new();
        staged("synthesize", write_trade_flows(&world.flows, &mut buf))?;
        staged(
            "synthesize",
            out.write_to(&cfg.inputs.trade, input_label(cfg, &cfg.inputs.trade), buf),
        )?;
        let mut buf = Vec::new();
        staged("synthesize", world.panel.write_csv(&mut buf))?;
        staged(
            "synthesize",
            out.write_to(
                &cfg.inputs.macro_panel,
                input_label(cfg, &cfg.inputs.macro_panel),
                buf,
            ),
        )?;
        lap(manifest, "synthesize");
    }

    // ingest
    let read = |p: &Path| fs::read(p).map_err(|e| Error::io(p, e));
    let trade_schema = TradeSchema {
        years: Some((cfg.years.start, cfg.years.end)),
        ..Default::default()
    };
    let trade = staged(
        "ingest",
        read(&cfg.inputs.trade).and_then(|b| parse_trade_flows(b.as_slice(), &trade_schema)),
    )?;
    let macro_parse = staged(
        "ingest",
        read(&cfg.inputs.macro_panel)
            .and_then(|b| parse_macro_panel(b.as_slice(), &PanelSchema::default())),
    )?;
    manifest
        .rejected_rows
        .insert("trade".into(), trade.rejections.len());
    manifest
        .rejected_rows
        .insert("macro".into(), macro_parse.rejections.len());
    let years: Vec<i32> = (cfg.years.start..=cfg.years.end).collect();
    let exports = staged(
        "ingest",
        years
            .iter()
            .map(|&y| build_export_matrix(&trade.flows, y))
            .collect::<Result<Vec<_>>>(),
    )?;
    lap(manifest, "ingest");

    // rca
    let mut matrices = Vec::with_capacity(years.len());
    for x in &exports {
        let m = staged(
            "rca",
            compute_rca(x).and_then(|r| binarize(&r, cfg.rca.threshold)),
        )?;
        let m = if cfg.rca.prune {
            staged("rca", prune(&m))?.0
        } else {
            m
        };
        staged("rca", out.write(&format!("m_{}.csv", m.year), |w| m.write_csv(w)))?;
        matrices.push(m);
    }
    lap(manifest, "rca");

    // fitness, years in parallel
    let results = staged(
        "fitness",
        matrices
            .par_iter()
            .map(|m| compute_fitness(m, &cfg.fitness))
            .collect::<Result<Vec<_>>>(),
    )?;
    let mut series = FitnessSeries::new();
    for (m, res) in matrices.iter().zip(&results) {
        let year = m.year;
        let ranking = rank_countries(res);
        series.insert_ranking(year, &ranking);
        staged(
            "fitness",
            out.write(&format!("fitness_{year}.csv"), |w| write_fitness_csv(&ranking, w)),
        )?;
        staged(
            "fitness",
            out.write(&format!("complexity_{year}.csv"), |w| {
                write_complexity_csv(&rank_products(res), w)
            }),
        )?;
        staged(
            "fitness",
            out.write(&format!("diag_{year}.json"), |w| {
                res.write_diagnostics(&cfg.fitness, w)
            }),
        )?;
        manifest.convergence.push(YearConvergence {
            year,
            converged_by: res.converged_by,
            iterations: res.iterations_run,
            countries: res.countries.len(),
            products: res.products.len(),
        });
    }
    staged("fitness", out.write("fitness_panel.csv", |w| series.write_csv(w)))?;
    lap(manifest, "fitness");

    let panel = staged(
        "panel",
        build_growth_panel(&macro_parse.panel, &series, cfg.panel),
    )?;
    staged("panel", out.write("growth.csv", |w| panel.write_csv(w)))?;
    lap(manifest, "panel");

    let surfaces = staged(
        "colormap",
        cfg.colormap
            .par_iter()
            .map(|spec| build_colormap(&panel, spec))
            .collect::<Result<Vec<_>>>(),
    )?;
    for (spec, surface) in cfg.colormap.iter().zip(&surfaces) {
        staged(
            "colormap",
            out.write(&format!("{}.csv", spec.stem()), |w| surface.write_csv(w)),
        )?;
    }
    lap(manifest, "colormap");

    for spec in &cfg.regression {
        let res = staged(
            "regress",
            regress(
                &panel,
                RegressionOptions {
                    include_fitness: spec.include_fitness,
                    fixed_effects: spec.fixed_effects,
                    covariance: spec.covariance,
                },
            ),
        )?;
        staged(
            "regress",
            out.write(&format!("report_{}.json", spec.name), |w| {
                serde_json::to_writer_pretty(w, &res).map_err(Error::from)
            }),
        )?;
        staged(
            "regress",
            out.write(&format!("report_{}.txt", spec.name), |w| {
                w.extend_from_slice(res.to_text().as_bytes());
                Ok(())
            }),
        )?;
    }
    lap(manifest, "regress");
    Ok(())
}

fn input_label(cfg: &PipelineConfig, p: &Path) -> String {
    p.strip_prefix(&cfg.output_dir)
        .unwrap_or(p)
        .to_string_lossy()
        .into_owned()
}
