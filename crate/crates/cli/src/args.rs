//! Command-line surface: clap definitions, the flat TOML config overlay
//! (flags override file values), and resolution into validated run
//! parameters.

use crate::CliError;
use catbond::distributions::FamilyKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use std::path::PathBuf;

pub const BUILD_VERSION: &str = env!("CATBOND_BUILD_VERSION");

#[derive(Parser)]
#[command(
    name = "catbond",
    version = BUILD_VERSION,
    about = "Two-region catastrophe-bond pricing engine",
    long_about = "Fits loss models from left-truncated catastrophe data, prices zero-coupon \
                  CAT bonds by Monte Carlo or a bivariate-normal approximation, and emits \
                  plot-ready threshold surfaces and Wang risk-loading curves.\n\n\
                  Each subcommand accepts --config <file.toml> holding the same keys as its \
                  flags (flat, human-editable); explicit flags override file values. \
                  Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Cap worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Fit severity families and dependence to a loss CSV, emitting a fit report.
    Fit(FitArgs),
    /// Price one bond from a fit report or an inline model document.
    Price(PriceArgs),
    /// Price a threshold grid (CSV: D1,D2,price,std_error,trigger_prob).
    Surface(SurfaceArgs),
    /// Wang risk-loading sweep (CSV: model,lambda,price,std_error,trigger_prob).
    Wang(WangArgs),
    /// Write a synthetic loss CSV drawn from a bundled case study.
    GenerateFixture(FixtureArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Monte Carlo under the physical measure.
    Mc,
    /// Bivariate-normal approximation (analytic, no standard error).
    Normal,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelChoice {
    Independent,
    Proportional,
    Dependent,
    /// All three models (wang only).
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixturePair {
    OkTx,
    IlKy,
}

fn read_config<T: serde::de::DeserializeOwned + Default>(
    path: &Option<PathBuf>,
) -> Result<T, CliError> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::config(format!("cannot read config {}: {e}", p.display())))?;
            toml::from_str(&text)
                .map_err(|e| CliError::config(format!("config {}: {e}", p.display())))
        }
    }
}

fn require<T>(value: Option<T>, key: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::config(format!("missing required parameter '{key}'")))
}

/// Inclusive numeric grid: either a single value or `start:end:step`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |msg: &str| CliError::config(format!("grid '{spec}': {msg}"));
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.len() {
        1 => {
            let v: f64 = parts[0]
                .trim()
                .parse()
                .map_err(|_| bad("not a number"))?;
            Ok(vec![v])
        }
        3 => {
            let nums: Vec<f64> = parts
                .iter()
                .map(|p| p.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad("expected start:end:step"))?;
            let (start, end, step) = (nums[0], nums[1], nums[2]);
            if !(step > 0.0 && end >= start) {
                return Err(bad("need end ≥ start and step > 0"));
            }
            let mut out = Vec::new();
            let mut k = 0u32;
            loop {
                let v = start + f64::from(k) * step;
                if v > end + 1e-9 * step {
                    break;
                }
                out.push(v);
                k += 1;
            }
            Ok(out)
        }
        _ => Err(bad("expected a number or start:end:step")),
    }
}

pub fn parse_lambdas(spec: &str) -> Result<Vec<f64>, CliError> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::config(format!("lambda '{s}' is not a number")))
        })
        .collect()
}

fn parse_families(spec: &str) -> Result<Vec<FamilyKind>, CliError> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<FamilyKind>()
                .map_err(CliError::config)
        })
        .collect()
}

// ── fit ───────────────────────────────────────────────────────────────────

#[derive(Args)]
pub struct FitArgs {
    /// Flat TOML file with any of this subcommand's keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Loss CSV (event_id,date,region,loss_usd_billions,cpi_factor).
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub region1: Option<String>,
    #[arg(long)]
    pub region2: Option<String>,
    /// Observation window in years (never inferred from the data).
    #[arg(long)]
    pub window_years: Option<f64>,
    /// Reporting threshold in billions USD [default: 0.025].
    #[arg(long)]
    pub truncation: Option<f64>,
    /// Candidate families, comma separated
    /// [default: log-normal,weibull,pareto,inverse-gaussian].
    #[arg(long)]
    pub families: Option<String>,
    /// Parametric-bootstrap replications per class [default: 1000].
    #[arg(long)]
    pub bootstrap_reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output path of the fit-report JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub data: Option<PathBuf>,
    pub region1: Option<String>,
    pub region2: Option<String>,
    pub window_years: Option<f64>,
    pub truncation: Option<f64>,
    pub families: Option<String>,
    pub bootstrap_reps: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

pub struct FitRun {
    pub data: PathBuf,
    pub region1: String,
    pub region2: String,
    pub window_years: f64,
    pub truncation: f64,
    pub families: Vec<FamilyKind>,
    pub bootstrap_reps: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl FitArgs {
    pub fn resolve(self) -> Result<FitRun, CliError> {
        let cfg: FitConfig = read_config(&self.config)?;
        let families = match self.families.or(cfg.families) {
            Some(spec) => parse_families(&spec)?,
            None => FamilyKind::ALL.to_vec(),
        };
        Ok(FitRun {
            data: require(self.data.or(cfg.data), "data")?,
            region1: require(self.region1.or(cfg.region1), "region1")?,
            region2: require(self.region2.or(cfg.region2), "region2")?,
            window_years: require(self.window_years.or(cfg.window_years), "window-years")?,
            truncation: self.truncation.or(cfg.truncation).unwrap_or(0.025),
            families,
            bootstrap_reps: self.bootstrap_reps.or(cfg.bootstrap_reps).unwrap_or(1000),
            seed: self.seed.or(cfg.seed).unwrap_or(42),
            out: require(self.out.or(cfg.out), "out")?,
        })
    }
}

// ── shared pricing inputs ─────────────────────────────────────────────────

#[derive(Args)]
pub struct ModelSource {
    /// Fit-report JSON produced by `catbond fit`.
    #[arg(long)]
    pub fit: Option<PathBuf>,
    /// Inline model document (a serialized loss model), alternative to --fit.
    #[arg(long)]
    pub model_spec: Option<PathBuf>,
    /// Which model to instantiate from the fit report.
    #[arg(long, value_enum)]
    pub model: Option<ModelChoice>,
}

#[derive(Args)]
pub struct BondArgs {
    /// Maturity in years [default: 2].
    #[arg(long)]
    pub t: Option<f64>,
    /// Continuously compounded rate [default: 0.03].
    #[arg(long)]
    pub r: Option<f64>,
    /// Recovery rate in [0,1] [default: 0].
    #[arg(long)]
    pub c: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PriceConfig {
    pub fit: Option<PathBuf>,
    pub model_spec: Option<PathBuf>,
    pub model: Option<ModelChoice>,
    pub t: Option<f64>,
    pub r: Option<f64>,
    pub c: Option<f64>,
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    pub sims: Option<usize>,
    pub seed: Option<u64>,
    pub method: Option<Method>,
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct PriceArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub source: ModelSource,
    #[command(flatten)]
    pub bond: BondArgs,
    /// Region-1 threshold in billions USD.
    #[arg(long)]
    pub d1: Option<f64>,
    /// Region-2 threshold in billions USD.
    #[arg(long)]
    pub d2: Option<f64>,
    /// Monte Carlo simulations [default: 20000].
    #[arg(long)]
    pub sims: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Write the price report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub struct SourceRun {
    pub fit: Option<PathBuf>,
    pub model_spec: Option<PathBuf>,
    pub model: Option<ModelChoice>,
}

pub struct PriceRun {
    pub source: SourceRun,
    pub t: f64,
    pub r: f64,
    pub c: f64,
    pub d1: f64,
    pub d2: f64,
    pub sims: usize,
    pub seed: u64,
    pub method: Method,
    pub out: Option<PathBuf>,
}

impl PriceArgs {
    pub fn resolve(self) -> Result<PriceRun, CliError> {
        let cfg: PriceConfig = read_config(&self.config)?;
        Ok(PriceRun {
            source: SourceRun {
                fit: self.source.fit.or(cfg.fit),
                model_spec: self.source.model_spec.or(cfg.model_spec),
                model: self.source.model.or(cfg.model),
            },
            t: self.bond.t.or(cfg.t).unwrap_or(2.0),
            r: self.bond.r.or(cfg.r).unwrap_or(0.03),
            c: self.bond.c.or(cfg.c).unwrap_or(0.0),
            d1: require(self.d1.or(cfg.d1), "d1")?,
            d2: require(self.d2.or(cfg.d2), "d2")?,
            sims: self.sims.or(cfg.sims).unwrap_or(20_000),
            seed: self.seed.or(cfg.seed).unwrap_or(42),
            method: self.method.or(cfg.method).unwrap_or(Method::Mc),
            out: self.out.or(cfg.out),
        })
    }
}

// ── surface ───────────────────────────────────────────────────────────────

#[derive(Args)]
pub struct SurfaceArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub source: ModelSource,
    #[command(flatten)]
    pub bond: BondArgs,
    /// Region-1 threshold grid: value or start:end:step.
    #[arg(long)]
    pub d1: Option<String>,
    /// Region-2 threshold grid: value or start:end:step.
    #[arg(long)]
    pub d2: Option<String>,
    #[arg(long)]
    pub sims: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Output CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON run-report path [default: the CSV path with a .json extension].
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SurfaceConfig {
    pub fit: Option<PathBuf>,
    pub model_spec: Option<PathBuf>,
    pub model: Option<ModelChoice>,
    pub t: Option<f64>,
    pub r: Option<f64>,
    pub c: Option<f64>,
    pub d1: Option<String>,
    pub d2: Option<String>,
    pub sims: Option<usize>,
    pub seed: Option<u64>,
    pub method: Option<Method>,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

pub struct SurfaceRun {
    pub source: SourceRun,
    pub t: f64,
    pub r: f64,
    pub c: f64,
    pub grid1: Vec<f64>,
    pub grid2: Vec<f64>,
    pub sims: usize,
    pub seed: u64,
    pub method: Method,
    pub out: PathBuf,
    pub report: PathBuf,
}

impl SurfaceArgs {
    pub fn resolve(self) -> Result<SurfaceRun, CliError> {
        let cfg: SurfaceConfig = read_config(&self.config)?;
        let out = require(self.out.or(cfg.out), "out")?;
        let report = self
            .report
            .or(cfg.report)
            .unwrap_or_else(|| out.with_extension("json"));
        Ok(SurfaceRun {
            source: SourceRun {
                fit: self.source.fit.or(cfg.fit),
                model_spec: self.source.model_spec.or(cfg.model_spec),
                model: self.source.model.or(cfg.model),
            },
            t: self.bond.t.or(cfg.t).unwrap_or(2.0),
            r: self.bond.r.or(cfg.r).unwrap_or(0.03),
            c: self.bond.c.or(cfg.c).unwrap_or(0.0),
            grid1: parse_grid(&require(self.d1.or(cfg.d1), "d1")?)?,
            grid2: parse_grid(&require(self.d2.or(cfg.d2), "d2")?)?,
            sims: self.sims.or(cfg.sims).unwrap_or(20_000),
            seed: self.seed.or(cfg.seed).unwrap_or(42),
            method: self.method.or(cfg.method).unwrap_or(Method::Mc),
            out,
            report,
        })
    }
}

// ── wang ──────────────────────────────────────────────────────────────────

#[derive(Args)]
pub struct WangArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub source: ModelSource,
    #[command(flatten)]
    pub bond: BondArgs,
    #[arg(long)]
    pub d1: Option<f64>,
    #[arg(long)]
    pub d2: Option<f64>,
    /// Comma-separated market prices of risk, each ≤ 0
    /// [default: 0,-0.25,-0.5,-0.75,-1].
    #[arg(long)]
    pub lambdas: Option<String>,
    #[arg(long)]
    pub sims: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON run-report path [default: the CSV path with a .json extension].
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct WangConfig {
    pub fit: Option<PathBuf>,
    pub model_spec: Option<PathBuf>,
    pub model: Option<ModelChoice>,
    pub t: Option<f64>,
    pub r: Option<f64>,
    pub c: Option<f64>,
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    pub lambdas: Option<String>,
    pub sims: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

pub struct WangRun {
    pub source: SourceRun,
    pub t: f64,
    pub r: f64,
    pub c: f64,
    pub d1: f64,
    pub d2: f64,
    pub lambdas: Vec<f64>,
    pub sims: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub report: PathBuf,
}

impl WangArgs {
    pub fn resolve(self) -> Result<WangRun, CliError> {
        let cfg: WangConfig = read_config(&self.config)?;
        let out = require(self.out.or(cfg.out), "out")?;
        let report = self
            .report
            .or(cfg.report)
            .unwrap_or_else(|| out.with_extension("json"));
        let lambdas = match self.lambdas.or(cfg.lambdas) {
            Some(spec) => parse_lambdas(&spec)?,
            None => vec![0.0, -0.25, -0.5, -0.75, -1.0],
        };
        Ok(WangRun {
            source: SourceRun {
                fit: self.source.fit.or(cfg.fit),
                model_spec: self.source.model_spec.or(cfg.model_spec),
                model: self.source.model.or(cfg.model),
            },
            t: self.bond.t.or(cfg.t).unwrap_or(2.0),
            r: self.bond.r.or(cfg.r).unwrap_or(0.03),
            c: self.bond.c.or(cfg.c).unwrap_or(0.0),
            d1: require(self.d1.or(cfg.d1), "d1")?,
            d2: require(self.d2.or(cfg.d2), "d2")?,
            lambdas,
            sims: self.sims.or(cfg.sims).unwrap_or(20_000),
            seed: self.seed.or(cfg.seed).unwrap_or(42),
            out,
            report,
        })
    }
}

// ── generate-fixture ──────────────────────────────────────────────────────

#[derive(Args)]
pub struct FixtureArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Which bundled case study to sample.
    #[arg(long, value_enum)]
    pub pair: Option<FixturePair>,
    /// Observation window in years [default: the case study's own].
    #[arg(long)]
    pub window_years: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FixtureConfig {
    pub pair: Option<FixturePair>,
    pub window_years: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

pub struct FixtureRun {
    pub pair: FixturePair,
    pub window_years: Option<f64>,
    pub seed: u64,
    pub out: PathBuf,
}

impl FixtureArgs {
    pub fn resolve(self) -> Result<FixtureRun, CliError> {
        let cfg: FixtureConfig = read_config(&self.config)?;
        Ok(FixtureRun {
            pair: require(self.pair.or(cfg.pair), "pair")?,
            window_years: self.window_years.or(cfg.window_years),
            seed: self.seed.or(cfg.seed).unwrap_or(42),
            out: require(self.out.or(cfg.out), "out")?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("6").unwrap(), vec![6.0]);
        let g = parse_grid("2:10:0.5").unwrap();
        assert_eq!(g.len(), 17);
        assert_eq!(g[0], 2.0);
        assert_eq!(*g.last().unwrap(), 10.0);
        assert!(parse_grid("2:1:0.5").is_err());
        assert!(parse_grid("a:b:c").is_err());
    }

    #[test]
    fn lambda_parsing() {
        assert_eq!(
            parse_lambdas("0,-0.25,-0.5").unwrap(),
            vec![0.0, -0.25, -0.5]
        );
        assert!(parse_lambdas("x").is_err());
    }
}
