//! Command-line front end. `main.rs` only calls [`run`].

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::econometrics::{
    build_growth_panel, regress, Covariance, FitnessSeries, GrowthPanel, PanelOptions, RankMode,
    RegressionOptions,
};
use crate::error::{Error, Result};
use crate::fitness::{
    compute_fitness, rank_countries, rank_products, triangular_order, write_complexity_csv,
    write_fitness_csv, FitnessConfig, InitialComplexity, UpdateScheme,
};
use crate::ingest::{
    build_export_matrix, parse_macro_panel, parse_trade_flows, write_trade_flows, PanelSchema,
    TradeSchema,
};
use crate::kernelmap::{build_colormap, BandwidthRule, ColormapSpec};
use crate::matrix::{BinaryMatrix, ExportMatrix, RcaMatrix};
use crate::pipeline::{run_pipeline, validate_config, PipelineConfig};
use crate::rca::{binarize, compute_rca, prune};
use crate::synthetic::{
    generate_nested, generate_tripartite, synthetic_economy, EconomyConfig, LinkDensities,
};

#[derive(Debug, Parser)]
#[command(name = "econfit", version, about = "Economic fitness and complexity toolkit")]
pub struct Cli {
    /// Seed used by generators when the subcommand gives none.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Directory that relative output paths are placed under.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the export matrix of one year from a trade-flow CSV.
    Ingest {
        #[arg(long)]
        trade: PathBuf,
        #[arg(long)]
        year: i32,
        #[arg(long)]
        out: PathBuf,
        /// Write rejected rows here as `line,reason`.
        #[arg(long)]
        rejections: Option<PathBuf>,
    },
    /// Balassa RCA of an export matrix.
    Rca {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Threshold an RCA matrix and prune empty rows and columns.
    Binarize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        threshold: f64,
        /// Prune empty rows and columns (the default).
        #[arg(long, overrides_with = "no_prune")]
        prune: bool,
        #[arg(long)]
        no_prune: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fitness and complexity of a binary matrix.
    Fitness(FitnessArgs),
    /// Synthetic data generators.
    Synth {
        #[command(subcommand)]
        kind: SynthCommand,
    },
    /// Build the growth-regression panel.
    Panel {
        #[arg(long = "macro")]
        macro_panel: PathBuf,
        /// Fitness series CSV (`country,year,fitness,rank,norm_rank`).
        /// Without it the macro panel's own fitness column is used.
        #[arg(long)]
        fitness: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        horizon: u32,
        #[arg(long, default_value_t = 5)]
        lag: u32,
        #[arg(long, default_value_t = 1)]
        stride: u32,
        #[arg(long, default_value = "normalized")]
        rank_mode: RankMode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Kernel-smoothed surface of a panel variable.
    Colormap {
        #[arg(long)]
        panel: PathBuf,
        #[arg(long, default_value = "log_fitness")]
        x: String,
        #[arg(long, default_value = "log_gdp_pc")]
        y: String,
        #[arg(long, default_value = "growth")]
        target: String,
        #[arg(long, default_value_t = 100)]
        nx: usize,
        #[arg(long, default_value_t = 100)]
        ny: usize,
        /// `lo,hi` for the x axis; data range when omitted.
        #[arg(long, value_parser = parse_pair)]
        x_range: Option<(f64, f64)>,
        #[arg(long, value_parser = parse_pair)]
        y_range: Option<(f64, f64)>,
        /// Fixed `hx,hy`; Scott's rule when omitted.
        #[arg(long, value_parser = parse_pair)]
        bandwidth: Option<(f64, f64)>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Growth regression on a panel.
    Regress {
        #[arg(long)]
        panel: PathBuf,
        #[arg(long)]
        with_fitness: bool,
        #[arg(long, default_value = "hc1")]
        robust: Covariance,
        #[arg(long)]
        fixed_effects: bool,
        /// JSON report; the table goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also print the plain-text table.
        #[arg(long)]
        text: bool,
    },
    /// Run a whole study from a TOML config.
    Run {
        #[arg(long, alias = "config")]
        config: PathBuf,
    },
    /// Check a TOML config without running it.
    Validate {
        #[arg(long, alias = "config")]
        config: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitialArg {
    Uniform,
    UnitSum,
}

#[derive(Debug, Args)]
pub struct FitnessArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 10)]
    pub rank_window: usize,
    /// Disable the rank-stability stop.
    #[arg(long)]
    pub no_rank_stop: bool,
    /// Update complexity from the previous sweep's fitness.
    #[arg(long)]
    pub synchronous: bool,
    #[arg(long, value_enum, default_value = "uniform")]
    pub initial: InitialArg,
    /// Country fitness CSV.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub complexity: Option<PathBuf>,
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,
    /// Write the matrix reordered by fitness and complexity.
    #[arg(long)]
    pub ordered: Option<PathBuf>,
}

impl FitnessArgs {
    pub fn config(&self) -> FitnessConfig {
        FitnessConfig {
            max_iterations: self.max_iter,
            value_tolerance: self.tol,
            rank_stability_window: (!self.no_rank_stop).then_some(self.rank_window),
            initial_complexity: match self.initial {
                InitialArg::Uniform => InitialComplexity::Uniform,
                InitialArg::UnitSum => InitialComplexity::UnitSum,
            },
            scheme: if self.synchronous {
                UpdateScheme::Synchronous
            } else {
                UpdateScheme::Sequential
            },
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// Perfectly nested binary matrix.
    Nested {
        #[arg(long)]
        nc: usize,
        #[arg(long)]
        np: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Country-capability-product model.
    Tripartite {
        #[arg(long)]
        nc: usize,
        #[arg(long)]
        nk: usize,
        #[arg(long)]
        np: usize,
        #[arg(long, default_value_t = 0.5)]
        cdensity: f64,
        #[arg(long, default_value_t = 0.2)]
        pdensity: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Capability sets as JSON.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Trade flows and a macro panel from a capability economy.
    Economy {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 20)]
        nc: usize,
        #[arg(long, default_value_t = 50)]
        np: usize,
        #[arg(long)]
        trade: PathBuf,
        #[arg(long = "macro")]
        macro_panel: PathBuf,
    },
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected 'a,b', got '{s}'"))?;
    let a = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let b = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((a, b))
}

struct Ctx {
    out_dir: Option<PathBuf>,
    seed: Option<u64>,
}

impl Ctx {
    fn out_path(&self, p: &Path) -> PathBuf {
        match &self.out_dir {
            Some(d) if p.is_relative() => d.join(p),
            _ => p.to_path_buf(),
        }
    }

    fn create(&self, p: &Path) -> Result<BufWriter<File>> {
        let p = self.out_path(p);
        if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        File::create(&p)
            .map(BufWriter::new)
            .map_err(|e| Error::io(&p, e))
    }

    fn seed(&self, local: Option<u64>) -> u64 {
        local.or(self.seed).unwrap_or(0)
    }
}

fn open(p: &Path) -> Result<File> {
    File::open(p).map_err(|e| Error::io(p, e))
}

fn finish(mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(|e| Error::io("<output>", e))
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build();
    let result = match pool {
        Ok(pool) => pool.install(|| execute(cli)),
        Err(e) => Err(Error::Config(vec![format!("thread pool: {e}")])),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Stage { source, .. } = &e {
                if let Error::Config(v) = source.as_ref() {
                    for p in v {
                        eprintln!("  {p}");
                    }
                }
            }
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<i32> {
    let ctx = Ctx {
        out_dir: cli.out_dir.clone(),
        seed: cli.seed,
    };
    match cli.command {
        Command::Ingest {
            trade,
            year,
            out,
            rejections,
        } => {
            let parsed = parse_trade_flows(open(&trade)?, &TradeSchema::default())?;
            let m = build_export_matrix(&parsed.flows, year)?;
            let mut w = ctx.create(&out)?;
            m.write_csv(&mut w)?;
            finish(w)?;
            if let Some(path) = rejections {
                let mut w = ctx.create(&path)?;
                writeln!(w, "line,reason").map_err(|e| Error::io(&path, e))?;
                for r in &parsed.rejections {
                    writeln!(w, "{},\"{}\"", r.line, r.reason.replace('"', "'"))
                        .map_err(|e| Error::io(&path, e))?;
                }
                finish(w)?;
            }
            eprintln!(
                "{} flows kept, {} rows rejected; {}x{} matrix for {year}",
                parsed.flows.len(),
                parsed.rejections.len(),
                m.n_countries(),
                m.n_products()
            );
        }
        Command::Rca { input, out } => {
            let x = ExportMatrix::read_csv(open(&input)?)?;
            let r = compute_rca(&x)?;
            let mut w = ctx.create(&out)?;
            r.write_csv(&mut w)?;
            finish(w)?;
        }
        Command::Binarize {
            input,
            threshold,
            prune: _,
            no_prune,
            out,
        } => {
            let r = RcaMatrix::read_csv(open(&input)?)?;
            let mut m = binarize(&r, threshold)?;
            if !no_prune {
                let (pruned, report) = prune(&m)?;
                if !report.is_empty() {
                    eprintln!(
                        "pruned {} countries and {} products",
                        report.removed_countries.len(),
                        report.removed_products.len()
                    );
                }
                m = pruned;
            }
            let mut w = ctx.create(&out)?;
            m.write_csv(&mut w)?;
            finish(w)?;
        }
        Command::Fitness(args) => {
            let cfg = args.config();
            let problems = cfg.validate();
            if !problems.is_empty() {
                return Err(Error::Config(problems));
            }
            let m = BinaryMatrix::read_csv(open(&args.input)?)?;
            let res = compute_fitness(&m, &cfg)?;
            let mut w = ctx.create(&args.out)?;
            write_fitness_csv(&rank_countries(&res), &mut w)?;
            finish(w)?;
            let complexity = args
                .complexity
                .clone()
                .unwrap_or_else(|| sibling(&args.out, "complexity.csv"));
            let mut w = ctx.create(&complexity)?;
            write_complexity_csv(&rank_products(&res), &mut w)?;
            finish(w)?;
            if let Some(path) = &args.diagnostics {
                let mut w = ctx.create(path)?;
                res.write_diagnostics(&cfg, &mut w)?;
                finish(w)?;
            }
            if let Some(path) = &args.ordered {
                let mut w = ctx.create(path)?;
                triangular_order(&m, &res)?.write_csv(&mut w)?;
                finish(w)?;
            }
            eprintln!(
                "stopped by {:?} after {} sweeps",
                res.converged_by, res.iterations_run
            );
        }
        Command::Synth { kind } => synth(&ctx, kind)?,
        Command::Panel {
            macro_panel,
            fitness,
            horizon,
            lag,
            stride,
            rank_mode,
            out,
        } => {
            let parsed = parse_macro_panel(open(&macro_panel)?, &PanelSchema::default())?;
            let series = match &fitness {
                Some(p) => FitnessSeries::read_csv(open(p)?)?,
                None => FitnessSeries::from_macro(&parsed.panel),
            };
            let opts = PanelOptions {
                horizon,
                lag,
                stride,
                rank_mode,
            };
            let panel = build_growth_panel(&parsed.panel, &series, opts)?;
            let mut w = ctx.create(&out)?;
            panel.write_csv(&mut w)?;
            finish(w)?;
            eprintln!("{}", panel.attrition);
        }
        Command::Colormap {
            panel,
            x,
            y,
            target,
            nx,
            ny,
            x_range,
            y_range,
            bandwidth,
            out,
        } => {
            let spec = ColormapSpec {
                x,
                y,
                target,
                nx,
                ny,
                x_range,
                y_range,
                bandwidth: bandwidth
                    .map(|(a, b)| BandwidthRule::Fixed([a, b]))
                    .unwrap_or(BandwidthRule::Scott),
            };
            let problems = spec.validate();
            if !problems.is_empty() {
                return Err(Error::Config(problems));
            }
            let panel = GrowthPanel::read_csv(open(&panel)?)?;
            let surface = build_colormap(&panel, &spec)?;
            let mut w = ctx.create(&out)?;
            surface.write_csv(&mut w)?;
            finish(w)?;
        }
        Command::Regress {
            panel,
            with_fitness,
            robust,
            fixed_effects,
            out,
            text,
        } => {
            let panel = GrowthPanel::read_csv(open(&panel)?)?;
            let res = regress(
                &panel,
                RegressionOptions {
                    include_fitness: with_fitness,
                    fixed_effects,
                    covariance: robust,
                },
            )?;
            match &out {
                Some(path) => {
                    let mut w = ctx.create(path)?;
                    serde_json::to_writer_pretty(&mut w, &res)?;
                    finish(w)?;
                    if text {
                        print!("{}", res.to_text());
                    }
                }
                None => print!("{}", res.to_text()),
            }
        }
        Command::Run { config } => {
            let mut cfg = PipelineConfig::load(&config)?;
            if let Some(dir) = &ctx.out_dir {
                cfg.output_dir = dir.clone();
            }
            if let Some(seed) = ctx.seed {
                cfg.seed = seed;
            }
            let manifest = run_pipeline(&cfg)?;
            eprintln!(
                "wrote {} artifacts to {}",
                manifest.artifacts.len(),
                cfg.output_dir.display()
            );
        }
        Command::Validate { config } => {
            let report = validate_config(&config)?;
            if report.is_ok() {
                println!("ok");
            } else {
                for v in &report.violations {
                    println!("{v}");
                }
                return Ok(1);
            }
        }
    }
    Ok(0)
}

fn sibling(p: &Path, name: &str) -> PathBuf {
    p.with_file_name(name)
}

fn synth(ctx: &Ctx, kind: SynthCommand) -> Result<()> {
    match kind {
        SynthCommand::Nested { nc, np, seed, out } => {
            let m = generate_nested(nc, np, ctx.seed(seed))?;
            let mut w = ctx.create(&out)?;
            m.write_csv(&mut w)?;
            finish(w)
        }
        SynthCommand::Tripartite {
            nc,
            nk,
            np,
            cdensity,
            pdensity,
            seed,
            out,
            model,
        } => {
            let densities = LinkDensities {
                country: cdensity,
                product: pdensity,
            };
            let (cap, m) = generate_tripartite(nc, nk, np, densities, ctx.seed(seed))?;
            let mut w = ctx.create(&out)?;
            m.write_csv(&mut w)?;
            finish(w)?;
            if let Some(path) = model {
                let mut w = ctx.create(&path)?;
                serde_json::to_writer_pretty(&mut w, &cap)?;
                finish(w)?;
            }
            Ok(())
        }
        SynthCommand::Economy {
            seed,
            nc,
            np,
            trade,
            macro_panel,
        } => {
            let cfg = EconomyConfig {
                n_countries: nc,
                n_products: np,
                ..Default::default()
            };
            let world = synthetic_economy(&cfg, ctx.seed(seed))?;
            let mut w = ctx.create(&trade)?;
            write_trade_flows(&world.flows, &mut w)?;
            finish(w)?;
            let mut w = ctx.create(&macro_panel)?;
            world.panel.write_csv(&mut w)?;
            finish(w)
        }
    }
}
