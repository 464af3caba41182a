//! Command-line driver.
//!
//! Configuration comes from a `key = value` file (`#` starts a comment line),
//! then repeated `--set key=value` flags, then the typed `--seed` and `--out`
//! flags. Later sources win. Every subcommand assembles its artifacts in
//! memory and writes them, plus `manifest.json`, into the output directory.
//!
//! Stage seeds are derived from the master seed by name (`simulate`,
//! `calibrate`), so no run draws ambient entropy.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::alias::{densitogram, smooth_aliased, threshold_alias, DEFAULT_THRESHOLD_SIGMAS};
use crate::detrend::{
    credit_proxy_csv, detrend_benchmark, detrend_with_credit, extensive_table, fit_credit_proxy,
    parse_residuals_csv, regression_csv, residuals_csv, RegressionResult,
};
use crate::dynamics::{
    diffusion_reduction_check, evolve, gaussian_profile, profile_variance, stability_limit,
    DiffusionGenerator, ReductionReport, WignerField,
};
use crate::error::{Error, Result};
use crate::export::{csv_complex_pair, csv_grid, grayscale, pgm, GridMeta};
use crate::fixing::{synthesize_panel, CollusionSpec, SYNTHETIC_BENCHMARK};
use crate::pair::{
    detector, entity_array, null_calibration, DetectorConfig, NullModel, NullSpec, Substrate,
    SupportMode,
};
use crate::panel::{align_many, parse_cds_csv, parse_panel_csv, PanelSeries};
use crate::phase_space::Axis;
use crate::rng::derive_named;
use crate::wvf::{auto_wvf, cross_wvf};

#[derive(Debug, Parser)]
#[command(
    name = "wvf-panel",
    version,
    about = "Wigner-Ville screening of benchmark submission panels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Plain-text `key = value` config file.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override a config key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Synthesize a trimmed-mean fixing panel.
    Simulate(CommonArgs),
    /// Regress each entity on the benchmark (eq2) or benchmark and credit proxy (eq3).
    Detrend(CommonArgs),
    /// Wigner-Ville maps, aliased maps, smoothed maps and densitograms.
    Wvf(CommonArgs),
    /// Pairwise correlation of aliased arrays.
    Correlate(CommonArgs),
    /// Null distribution of pairwise correlations.
    Calibrate(CommonArgs),
    /// Finite-difference Wigner dynamics of a diffusion generator.
    Evolve(CommonArgs),
    /// Extensive regression table.
    Report(CommonArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Detrend(_) => "detrend",
            Command::Wvf(_) => "wvf",
            Command::Correlate(_) => "correlate",
            Command::Calibrate(_) => "calibrate",
            Command::Evolve(_) => "evolve",
            Command::Report(_) => "report",
        }
    }

    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Simulate(c)
            | Command::Detrend(c)
            | Command::Wvf(c)
            | Command::Correlate(c)
            | Command::Calibrate(c)
            | Command::Evolve(c)
            | Command::Report(c) => c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DetrendMode {
    /// Benchmark only.
    #[default]
    Eq2,
    /// Benchmark plus fitted credit proxy.
    Eq3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_entities: usize,
    pub n_days: usize,
    pub colluders: BTreeSet<usize>,
    pub shared_sigma: f64,
    pub idio_sigma: f64,
    pub ar1_rho: f64,
    pub initial_rate: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        let spec = CollusionSpec::default();
        Self {
            n_entities: 18,
            n_days: 313,
            colluders: spec.colluders,
            shared_sigma: spec.shared_factor_sigma,
            idio_sigma: spec.idio_sigma,
            ar1_rho: spec.ar1_rho,
            initial_rate: spec.initial_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NullConfig {
    pub levy: bool,
    pub alpha: f64,
    pub series: usize,
    pub days: usize,
    pub trials: usize,
    pub differenced: bool,
}

impl Default for NullConfig {
    fn default() -> Self {
        Self {
            levy: false,
            alpha: 2.0,
            series: 18,
            days: 313,
            trials: 100,
            differenced: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveConfig {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub x_half: f64,
    pub x_points: usize,
    pub p_half: f64,
    pub p_points: usize,
    /// `None` picks half the stability limit.
    pub dt: Option<f64>,
    pub steps: usize,
    pub sigma0: f64,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            a: 0.5,
            b: 0.0,
            c: 0.0,
            x_half: 8.0,
            x_points: 129,
            p_half: 4.0,
            p_points: 65,
            dt: None,
            steps: 100,
            sigma0: 1.0,
        }
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub panel: Option<PathBuf>,
    pub residuals: Option<PathBuf>,
    pub cds: BTreeMap<String, PathBuf>,
    pub benchmark: String,
    pub detrend: DetrendMode,
    pub threshold_sigmas: f64,
    pub smooth_sigma: f64,
    pub substrate: Substrate,
    pub support: SupportMode,
    /// Entities mapped by `wvf`; empty means all.
    pub wvf_entities: Vec<String>,
    /// Entity pairs whose cross arrays `wvf` also writes.
    pub wvf_cross: Vec<(String, String)>,
    pub wvf_complex: bool,
    pub out: PathBuf,
    pub seed: u64,
    pub sim: SimConfig,
    pub null: NullConfig,
    pub evolve: EvolveConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            panel: None,
            residuals: None,
            cds: BTreeMap::new(),
            benchmark: SYNTHETIC_BENCHMARK.to_string(),
            detrend: DetrendMode::Eq2,
            threshold_sigmas: DEFAULT_THRESHOLD_SIGMAS,
            smooth_sigma: 1.5,
            substrate: Substrate::WvfModulus,
            support: SupportMode::All,
            wvf_entities: Vec::new(),
            wvf_cross: Vec::new(),
            wvf_complex: false,
            out: PathBuf::from("out"),
            seed: 0,
            sim: SimConfig::default(),
            null: NullConfig::default(),
            evolve: EvolveConfig::default(),
        }
    }
}

fn config_err(key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| config_err(key, format!("cannot parse `{v}`")))
}

fn positive(key: &str, v: &str) -> Result<f64> {
    let x: f64 = parse_num(key, v)?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(config_err(key, "must be positive and finite"));
    }
    Ok(x)
}

fn non_negative(key: &str, v: &str) -> Result<f64> {
    let x: f64 = parse_num(key, v)?;
    if !(x >= 0.0 && x.is_finite()) {
        return Err(config_err(key, "must be non-negative and finite"));
    }
    Ok(x)
}

fn finite(key: &str, v: &str) -> Result<f64> {
    let x: f64 = parse_num(key, v)?;
    if !x.is_finite() {
        return Err(config_err(key, "must be finite"));
    }
    Ok(x)
}

fn at_least(key: &str, v: &str, min: usize) -> Result<usize> {
    let x: usize = parse_num(key, v)?;
    if x < min {
        return Err(config_err(key, format!("must be at least {min}")));
    }
    Ok(x)
}

fn boolean(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(config_err(
            key,
            format!("expected true or false, got `{v}`"),
        )),
    }
}

fn list(v: &str) -> Vec<String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// Parses config text into an ordered key map.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config_err(line, format!("line {}: expected `key = value`", i + 1)))?;
        let key = k.trim().to_string();
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(config_err(&key, format!("line {}: duplicate key", i + 1)));
        }
    }
    Ok(map)
}

impl RunConfig {
    /// Applies `key = value` pairs on top of the defaults.
    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self> {
        let mut c = RunConfig::default();
        for (k, v) in pairs {
            c.apply(k, v)?;
        }
        c.check()?;
        Ok(c)
    }

    fn apply(&mut self, key: &str, v: &str) -> Result<()> {
        let k = key;
        match key {
            "panel" => self.panel = Some(PathBuf::from(v)),
            "residuals" => self.residuals = Some(PathBuf::from(v)),
            "benchmark" => {
                if v.is_empty() {
                    return Err(config_err(k, "must not be empty"));
                }
                self.benchmark = v.to_string()
            }
            "detrend" => {
                self.detrend = match v {
                    "eq2" => DetrendMode::Eq2,
                    "eq3" => DetrendMode::Eq3,
                    _ => return Err(config_err(k, "expected eq2 or eq3")),
                }
            }
            "threshold_sigmas" => self.threshold_sigmas = positive(k, v)?,
            "smooth_sigma" => self.smooth_sigma = positive(k, v)?,
            "substrate" => {
                self.substrate = v
                    .parse()
                    .map_err(|_| config_err(k, "expected wvf_modulus or aliased_covariance"))?
            }
            "support" => {
                self.support = v
                    .parse()
                    .map_err(|_| config_err(k, "expected all or union"))?
            }
            "wvf.entities" => self.wvf_entities = list(v),
            "wvf.cross" => {
                self.wvf_cross = list(v)
                    .into_iter()
                    .map(|pair| {
                        pair.split_once(':')
                            .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
                            .ok_or_else(|| config_err(k, format!("expected `a:b`, got `{pair}`")))
                    })
                    .collect::<Result<_>>()?
            }
            "wvf.complex" => self.wvf_complex = boolean(k, v)?,
            "out" => self.out = PathBuf::from(v),
            "seed" => self.seed = parse_num(k, v)?,
            "sim.n_entities" => self.sim.n_entities = at_least(k, v, 9)?,
            "sim.n_days" => self.sim.n_days = at_least(k, v, 2)?,
            "sim.colluders" => {
                self.sim.colluders = list(v)
                    .iter()
                    .map(|s| parse_num::<usize>(k, s))
                    .collect::<Result<_>>()?
            }
            "sim.shared_sigma" => self.sim.shared_sigma = non_negative(k, v)?,
            "sim.idio_sigma" => self.sim.idio_sigma = non_negative(k, v)?,
            "sim.ar1_rho" => {
                let r = finite(k, v)?;
                if !(0.0..1.0).contains(&r) {
                    return Err(config_err(k, "must lie in [0, 1)"));
                }
                self.sim.ar1_rho = r
            }
            "sim.initial_rate" => self.sim.initial_rate = finite(k, v)?,
            "null.model" => {
                self.null.levy = match v {
                    "gaussian" => false,
                    "levy" => true,
                    _ => return Err(config_err(k, "expected gaussian or levy")),
                }
            }
            "null.alpha" => {
                let a = finite(k, v)?;
                if !(a > 0.0 && a <= 2.0) {
                    return Err(config_err(k, "must lie in (0, 2]"));
                }
                self.null.alpha = a
            }
            "null.series" => self.null.series = at_least(k, v, 2)?,
            "null.days" => self.null.days = at_least(k, v, 2)?,
            "null.trials" => self.null.trials = at_least(k, v, 1)?,
            "null.differenced" => self.null.differenced = boolean(k, v)?,
            "evolve.a" => self.evolve.a = non_negative(k, v)?,
            "evolve.b" => self.evolve.b = finite(k, v)?,
            "evolve.c" => self.evolve.c = finite(k, v)?,
            "evolve.x_half" => self.evolve.x_half = positive(k, v)?,
            "evolve.x_points" => self.evolve.x_points = at_least(k, v, 5)?,
            "evolve.p_half" => self.evolve.p_half = positive(k, v)?,
            "evolve.p_points" => self.evolve.p_points = at_least(k, v, 5)?,
            "evolve.dt" => self.evolve.dt = Some(positive(k, v)?),
            "evolve.steps" => self.evolve.steps = parse_num(k, v)?,
            "evolve.sigma0" => self.evolve.sigma0 = positive(k, v)?,
            _ => match key.strip_prefix("cds.") {
                Some(entity) if !entity.is_empty() => {
                    self.cds.insert(entity.to_string(), PathBuf::from(v));
                }
                _ => return Err(config_err(k, "unknown key")),
            },
        }
        Ok(())
    }

    fn check(&self) -> Result<()> {
        if let Some(&c) = self
            .sim
            .colluders
            .iter()
            .find(|&&c| c >= self.sim.n_entities)
        {
            return Err(config_err(
                "sim.colluders",
                format!(
                    "index {c} out of range for {} entities",
                    self.sim.n_entities
                ),
            ));
        }
        Ok(())
    }

    /// Every resolved setting except the output directory, one `key=value`
    /// line each, sorted by key.
    pub fn canonical(&self) -> String {
        let mut m: BTreeMap<String, String> = BTreeMap::new();
        let path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default()
        };
        m.insert("panel".into(), path(&self.panel));
        m.insert("residuals".into(), path(&self.residuals));
        for (e, p) in &self.cds {
            m.insert(format!("cds.{e}"), p.display().to_string());
        }
        m.insert("benchmark".into(), self.benchmark.clone());
        m.insert(
            "detrend".into(),
            format!("{:?}", self.detrend).to_lowercase(),
        );
        m.insert("threshold_sigmas".into(), self.threshold_sigmas.to_string());
        m.insert("smooth_sigma".into(), self.smooth_sigma.to_string());
        m.insert("substrate".into(), self.substrate.as_str().into());
        m.insert(
            "support".into(),
            format!("{:?}", self.support).to_lowercase(),
        );
        m.insert("wvf.entities".into(), self.wvf_entities.join(","));
        m.insert(
            "wvf.cross".into(),
            self.wvf_cross
                .iter()
                .map(|(a, b)| format!("{a}:{b}"))
                .collect::<Vec<_>>()
                .join(","),
        );
        m.insert("wvf.complex".into(), self.wvf_complex.to_string());
        m.insert("seed".into(), self.seed.to_string());
        let s = &self.sim;
        m.insert("sim.n_entities".into(), s.n_entities.to_string());
        m.insert("sim.n_days".into(), s.n_days.to_string());
        m.insert(
            "sim.colluders".into(),
            s.colluders
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
        m.insert("sim.shared_sigma".into(), s.shared_sigma.to_string());
        m.insert("sim.idio_sigma".into(), s.idio_sigma.to_string());
        m.insert("sim.ar1_rho".into(), s.ar1_rho.to_string());
        m.insert("sim.initial_rate".into(), s.initial_rate.to_string());
        let n = &self.null;
        m.insert(
            "null.model".into(),
            if n.levy { "levy" } else { "gaussian" }.into(),
        );
        m.insert("null.alpha".into(), n.alpha.to_string());
        m.insert("null.series".into(), n.series.to_string());
        m.insert("null.days".into(), n.days.to_string());
        m.insert("null.trials".into(), n.trials.to_string());
        m.insert("null.differenced".into(), n.differenced.to_string());
        let e = &self.evolve;
        m.insert("evolve.a".into(), e.a.to_string());
        m.insert("evolve.b".into(), e.b.to_string());
        m.insert("evolve.c".into(), e.c.to_string());
        m.insert("evolve.x_half".into(), e.x_half.to_string());
        m.insert("evolve.x_points".into(), e.x_points.to_string());
        m.insert("evolve.p_half".into(), e.p_half.to_string());
        m.insert("evolve.p_points".into(), e.p_points.to_string());
        m.insert(
            "evolve.dt".into(),
            e.dt.map(|d| d.to_string()).unwrap_or_else(|| "auto".into()),
        );
        m.insert("evolve.steps".into(), e.steps.to_string());
        m.insert("evolve.sigma0".into(), e.sigma0.to_string());
        m.into_iter().fold(String::new(), |mut acc, (k, v)| {
            writeln!(acc, "{k}={v}").unwrap();
            acc
        })
    }

    pub fn hash(&self) -> String {
        sha256_hex(self.canonical().as_bytes())
    }

    pub fn detector(&self) -> DetectorConfig {
        DetectorConfig {
            substrate: self.substrate,
            threshold_sigmas: self.threshold_sigmas,
            support: self.support,
        }
    }

    pub fn null_spec(&self) -> NullSpec {
        NullSpec {
            n_series: self.null.series,
            n_days: self.null.days,
            model: if self.null.levy {
                NullModel::Levy {
                    alpha: self.null.alpha,
                }
            } else {
                NullModel::Gaussian
            },
            trials: self.null.trials,
            seed: derive_named(self.seed, "calibrate"),
            differenced: self.null.differenced,
            detector: self.detector(),
        }
    }

    pub fn collusion_spec(&self) -> CollusionSpec {
        CollusionSpec {
            colluders: self.sim.colluders.clone(),
            shared_factor_sigma: self.sim.shared_sigma,
            idio_sigma: self.sim.idio_sigma,
            ar1_rho: self.sim.ar1_rho,
            initial_rate: self.sim.initial_rate,
            seed: derive_named(self.seed, "simulate"),
        }
    }
}

/// Resolves flags and files into a [`RunConfig`].
pub fn resolve(common: &CommonArgs) -> Result<RunConfig> {
    let mut pairs = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_config_text(&text)?
        }
        None => BTreeMap::new(),
    };
    for s in &common.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| config_err(s, "--set expects KEY=VALUE"))?;
        pairs.insert(k.trim().to_string(), v.trim().to_string());
    }
    if let Some(seed) = common.seed {
        pairs.insert("seed".into(), seed.to_string());
    }
    if let Some(out) = &common.out {
        pairs.insert("out".into(), out.display().to_string());
    }
    RunConfig::from_pairs(&pairs)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputRecord {
    pub key: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub config_hash: String,
    pub seed: u64,
    pub inputs: Vec<InputRecord>,
    pub outputs: Vec<OutputRecord>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Files produced by one subcommand, not yet written.
#[derive(Debug, Default, Clone)]
pub struct Artifacts {
    pub inputs: Vec<InputRecord>,
    pub files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    fn add(&mut self, name: impl Into<String>, content: impl Into<Vec<u8>>) {
        self.files.push((name.into(), content.into()));
    }

    fn read(&mut self, key: &str, path: &Path) -> Result<String> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        self.inputs.push(InputRecord {
            key: key.to_string(),
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        String::from_utf8(bytes).map_err(|e| Error::Parse {
            line: 0,
            message: format!("{}: {e}", path.display()),
        })
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, b)| b.as_slice())
    }
}

fn json<T: Serialize>(v: &T) -> Vec<u8> {
    (serde_json::to_string_pretty(v).expect("serializable") + "\n").into_bytes()
}

fn require<'a>(p: &'a Option<PathBuf>, key: &str, cmd: &str) -> Result<&'a PathBuf> {
    p.as_ref()
        .ok_or_else(|| config_err(key, format!("required by `{cmd}`")))
}

fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Computes the artifacts of a subcommand without touching the output
/// directory.
pub fn build(subcommand: &str, cfg: &RunConfig) -> Result<Artifacts> {
    let mut art = Artifacts::default();
    match subcommand {
        "simulate" => simulate(cfg, &mut art)?,
        "detrend" => {
            let (dates, results, proxies) = run_detrend(cfg, &mut art)?;
            art.add("residuals.csv", residuals_csv(&dates, &results));
            art.add("regression.csv", regression_csv(&results));
            if let Some(p) = proxies {
                art.add("credit_proxy.csv", p);
            }
        }
        "report" => {
            let (_, results, _) = run_detrend(cfg, &mut art)?;
            art.add("table2.csv", extensive_table(&results));
            art.add("regression.csv", regression_csv(&results));
        }
        "wvf" => wvf_maps(cfg, &mut art)?,
        "correlate" => {
            let (labels, series) = load_residuals(cfg, &mut art, "correlate")?;
            let m = detector(&series, &labels, &cfg.detector())?;
            art.add("correlation.csv", m.to_csv());
            let full = serde_json::json!({
                "labels": m.labels,
                "values": m.values.rows().into_iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
                "detector": m.config,
            });
            art.add("correlation.json", json(&full));
        }
        "calibrate" => {
            let summary = null_calibration(&cfg.null_spec())?;
            art.add("calibration.json", summary.to_json());
        }
        "evolve" => run_evolve(cfg, &mut art)?,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown subcommand `{other}`"
            )))
        }
    }
    Ok(art)
}

fn simulate(cfg: &RunConfig, art: &mut Artifacts) -> Result<()> {
    let spec = cfg.collusion_spec();
    let panel = synthesize_panel(cfg.sim.n_entities, cfg.sim.n_days, &spec)?;
    art.add("panel.csv", panel.to_csv());
    let meta = serde_json::json!({
        "n_entities": cfg.sim.n_entities,
        "n_days": cfg.sim.n_days,
        "benchmark": SYNTHETIC_BENCHMARK,
        "spec": spec,
    });
    art.add("collusion.json", json(&meta));
    Ok(())
}

type DetrendOutput = (
    Vec<chrono::NaiveDate>,
    Vec<RegressionResult>,
    Option<String>,
);

fn run_detrend(cfg: &RunConfig, art: &mut Artifacts) -> Result<DetrendOutput> {
    let path = require(&cfg.panel, "panel", "detrend")?;
    let text = art.read("panel", path)?;
    let (panel, _) = parse_panel_csv(&text, &cfg.benchmark)?;
    match cfg.detrend {
        DetrendMode::Eq2 => {
            let results = detrend_benchmark(&panel)?;
            Ok((panel.dates().to_vec(), results, None))
        }
        DetrendMode::Eq3 => {
            if cfg.cds.is_empty() {
                return Err(config_err(
                    "cds",
                    "detrend = eq3 needs at least one `cds.<entity>` key",
                ));
            }
            let mut cds = Vec::new();
            for (entity, path) in &cfg.cds {
                let text = art.read(&format!("cds.{entity}"), path)?;
                cds.push(parse_cds_csv(&text, entity)?);
            }
            let (aligned, cds): (PanelSeries, _) = align_many(&panel, &cds)?;
            let proxies = cds
                .iter()
                .map(fit_credit_proxy)
                .collect::<Result<Vec<_>>>()?;
            let map = proxies
                .iter()
                .map(|p| (p.entity.clone(), p.clone()))
                .collect();
            let results = detrend_with_credit(&aligned, &map)?;
            Ok((
                aligned.dates().to_vec(),
                results,
                Some(credit_proxy_csv(&proxies)),
            ))
        }
    }
}

fn load_residuals(
    cfg: &RunConfig,
    art: &mut Artifacts,
    cmd: &str,
) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let path = require(&cfg.residuals, "residuals", cmd)?;
    let text = art.read("residuals", path)?;
    let (_, labels, series) = parse_residuals_csv(&text)?;
    Ok((labels, series))
}

fn wvf_maps(cfg: &RunConfig, art: &mut Artifacts) -> Result<()> {
    let (labels, series) = load_residuals(cfg, art, "wvf")?;
    let index = |name: &str, key: &str| {
        labels
            .iter()
            .position(|l| l == name)
            .ok_or_else(|| config_err(key, format!("no residual column `{name}`")))
    };
    let selected: Vec<usize> = if cfg.wvf_entities.is_empty() {
        (0..labels.len()).collect()
    } else {
        cfg.wvf_entities
            .iter()
            .map(|e| index(e, "wvf.entities"))
            .collect::<Result<_>>()?
    };
    let t = cfg.threshold_sigmas;
    for i in selected {
        let stem = file_stem(&labels[i]);
        let w = auto_wvf(&series[i])?;
        art.add(format!("wvf_{stem}_modulus.csv"), csv_grid(&w.modulus()));
        if cfg.wvf_complex {
            let (re, im) = csv_complex_pair(&w.values);
            art.add(format!("wvf_{stem}_re.csv"), re);
            art.add(format!("wvf_{stem}_im.csv"), im);
        }
        let base = entity_array(&series[i], cfg.substrate)?;
        let aliased = threshold_alias(&base, t)?;
        let rigid = threshold_alias(&base, 2.0 * t)?;
        let mut meta = GridMeta::for_wvf(&w, "auto_wvf");
        meta.threshold_sigmas = Some(t);
        meta.array_std = Some(aliased.array_std);
        let sidecar = serde_json::json!({
            "grid": meta,
            "entity": labels[i],
            "substrate": cfg.substrate,
            "aliased_support": aliased.len(),
            "aliased_fraction": aliased.surviving_fraction(),
            "densitogram_threshold_sigmas": 2.0 * t,
            "densitogram_support": rigid.len(),
            "smooth_sigma": cfg.smooth_sigma,
        });
        art.add(format!("wvf_{stem}.json"), json(&sidecar));
        art.add(
            format!("aliased_{stem}.pgm"),
            densitogram(&aliased).to_pgm(),
        );
        let smooth = smooth_aliased(&aliased, cfg.smooth_sigma)?;
        art.add(format!("smoothed_{stem}.csv"), csv_grid(&smooth));
        art.add(format!("smoothed_{stem}.pgm"), pgm(&grayscale(&smooth)));
        let d = densitogram(&rigid);
        art.add(format!("densitogram_{stem}.pgm"), d.to_pgm());
        art.add(format!("densitogram_{stem}.csv"), d.to_csv());
    }
    for (a, b) in &cfg.wvf_cross {
        let (i, k) = (index(a, "wvf.cross")?, index(b, "wvf.cross")?);
        let w = cross_wvf(&series[i], &series[k])?;
        let stem = format!("{}_{}", file_stem(a), file_stem(b));
        art.add(format!("wvf_{stem}_modulus.csv"), csv_grid(&w.modulus()));
        if cfg.wvf_complex {
            let (re, im) = csv_complex_pair(&w.values);
            art.add(format!("wvf_{stem}_re.csv"), re);
            art.add(format!("wvf_{stem}_im.csv"), im);
        }
        art.add(
            format!("wvf_{stem}.json"),
            GridMeta::for_wvf(&w, "cross_wvf").to_json(),
        );
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct EvolveSummary {
    dt: f64,
    steps: usize,
    t: f64,
    stability_limit: f64,
    rank_one_ratio: f64,
    x_variance_initial: f64,
    x_variance_final: f64,
    expected_variance_growth: f64,
    reduction: ReductionReport,
}

fn run_evolve(cfg: &RunConfig, art: &mut Artifacts) -> Result<()> {
    let e = &cfg.evolve;
    let x = Axis::symmetric(e.x_half, e.x_points);
    let p = Axis::symmetric(e.p_half, e.p_points);
    let gen = DiffusionGenerator::constant(e.a, e.b, e.c);
    let limit = stability_limit(&x, &p, &gen)?;
    let dt = match e.dt {
        Some(dt) => dt,
        None if limit.is_finite() => 0.5 * limit,
        None => 0.01,
    };
    let sigma0 = e.sigma0;
    let field = WignerField::separable(
        x,
        p,
        |v| gaussian_profile(v, sigma0),
        |q| gaussian_profile(q, 1.0),
    )?;
    let out = evolve(&field, &gen, dt, e.steps)?;
    let reduction = diffusion_reduction_check(&field, &gen, dt, e.steps)?;
    let mid = p.len / 2;
    let summary = EvolveSummary {
        dt,
        steps: e.steps,
        t: out.t,
        stability_limit: limit,
        rank_one_ratio: out.rank_one_ratio(),
        x_variance_initial: profile_variance(&x, &field.x_profile(mid)),
        x_variance_final: profile_variance(&x, &out.x_profile(mid)),
        expected_variance_growth: 2.0 * e.a * out.t,
        reduction,
    };
    art.add("field_initial.csv", field.to_csv());
    art.add("field_final.csv", out.to_csv());
    art.add("field_final.pgm", out.to_pgm());
    art.add("evolve.json", json(&summary));
    Ok(())
}

/// Writes artifacts and the manifest; returns the manifest.
pub fn write_artifacts(subcommand: &str, cfg: &RunConfig, art: &Artifacts) -> Result<Manifest> {
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    let mut outputs = Vec::new();
    for (name, bytes) in &art.files {
        let path = cfg.out.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        outputs.push(OutputRecord {
            file: name.clone(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
    }
    let manifest = Manifest {
        tool: "wvf-panel".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: subcommand.into(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        inputs: art.inputs.clone(),
        outputs,
    };
    let path = cfg.out.join(MANIFEST_FILE);
    fs::write(&path, json(&manifest)).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// Builds and writes one subcommand's artifacts.
pub fn run(subcommand: &str, cfg: &RunConfig) -> Result<Manifest> {
    let art = build(subcommand, cfg)?;
    write_artifacts(subcommand, cfg, &art)
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let name = cli.command.name();
    let result = resolve(cli.command.common()).and_then(|cfg| run(name, &cfg).map(|m| (cfg, m)));
    match result {
        Ok((cfg, m)) => {
            println!(
                "{name}: wrote {} files to {}",
                m.outputs.len() + 1,
                cfg.out.display()
            );
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
