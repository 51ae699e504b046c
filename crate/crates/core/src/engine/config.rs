//! Run and experiment configuration with flat, globally unique keys.
//!
//! Every tunable has a single key (`rho`, `alpha`, `t_p`, ...). Config files
//! group keys into sections for readability, but a key means the same thing
//! wherever it appears, and `set` applies any key regardless of section.

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::data::{load_dataset, DataFormat, Dataset};
use super::synth::{SyntheticKind, SyntheticSpec};
use crate::error::{CascadeError, Result};
use crate::gamcal::{CalibrationBackend, GamCalConfig};
use crate::supg::{ResidualStrategy, SupgConfig, SupgVariant};
use crate::types::QualityTargets;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    SupgIt,
    SupgSp,
    SupgBase,
    GamCal,
    ProxyOnly,
    OracleOnly,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::SupgIt,
        Algorithm::SupgSp,
        Algorithm::SupgBase,
        Algorithm::GamCal,
        Algorithm::ProxyOnly,
        Algorithm::OracleOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::SupgIt => "supg_it",
            Algorithm::SupgSp => "supg_sp",
            Algorithm::SupgBase => "supg_base",
            Algorithm::GamCal => "gam_cal",
            Algorithm::ProxyOnly => "proxy_only",
            Algorithm::OracleOnly => "oracle_only",
        }
    }

    pub fn supg_variant(self) -> Option<SupgVariant> {
        match self {
            Algorithm::SupgIt => Some(SupgVariant::Iterative),
            Algorithm::SupgSp => Some(SupgVariant::SinglePass),
            Algorithm::SupgBase => Some(SupgVariant::Base),
            _ => None,
        }
    }

    /// The knob each algorithm is swept over by default.
    pub fn native_param(self) -> Option<&'static str> {
        match self {
            Algorithm::SupgIt | Algorithm::SupgSp | Algorithm::SupgBase => Some("t_r"),
            Algorithm::GamCal => Some("alpha"),
            Algorithm::ProxyOnly | Algorithm::OracleOnly => None,
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = CascadeError;

    fn from_str(s: &str) -> Result<Self> {
        let normalized = s.to_ascii_lowercase().replace('-', "_");
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == normalized || a.name().replace('_', "") == normalized)
            .ok_or_else(|| CascadeError::InvalidInput(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupgParams {
    pub t_p: f64,
    pub t_r: f64,
    pub delta: f64,
    pub eta: f64,
    pub clip_delta: f64,
    pub residual: ResidualStrategy,
}

impl Default for SupgParams {
    fn default() -> Self {
        Self {
            t_p: 0.8,
            t_r: 0.8,
            delta: 0.2,
            eta: 0.5,
            clip_delta: 0.05,
            residual: ResidualStrategy::DelegateAll,
        }
    }
}

/// Everything a single run needs apart from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub batch_size: usize,
    pub sub_batch: usize,
    pub workers: usize,
    pub seed: u64,
    /// Per-batch oracle sampling budget shared by every sampling algorithm.
    pub rho: f64,
    /// Weight of recall in the reported and optimized F-beta.
    pub beta: f64,
    pub supg: SupgParams,
    pub gamcal: GamCalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::SupgIt,
            batch_size: 512,
            sub_batch: 64,
            workers: 1,
            seed: 0,
            rho: 0.1,
            beta: 1.0,
            supg: SupgParams::default(),
            gamcal: GamCalConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn supg_config(&self) -> Result<SupgConfig> {
        let targets = QualityTargets::new(self.supg.t_p, self.supg.t_r, self.supg.delta)?;
        let cfg = SupgConfig {
            targets,
            eta: self.supg.eta,
            rho: self.rho,
            clip_delta: self.supg.clip_delta,
            residual: self.supg.residual,
            sub_batch: self.sub_batch,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn gamcal_config(&self) -> Result<GamCalConfig> {
        let mut cfg = self.gamcal;
        cfg.rho = self.rho;
        cfg.beta = self.beta;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(key_error("batch_size", "must be at least 1"));
        }
        if self.sub_batch == 0 {
            return Err(key_error("sub_batch", "must be at least 1"));
        }
        if self.workers == 0 {
            return Err(key_error("workers", "must be at least 1"));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(key_error("rho", "must lie in (0, 1]"));
        }
        if !(self.beta > 0.0) {
            return Err(key_error("beta", "must be positive"));
        }
        match self.algorithm.supg_variant() {
            Some(_) => {
                self.supg_config()?;
            }
            None if self.algorithm == Algorithm::GamCal => {
                self.gamcal_config()?;
            }
            None => {}
        }
        Ok(())
    }
}

/// Where a run's records come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataConfig {
    /// `bimodal`, `miscalibrated`, `imbalance` or `file`.
    pub dataset: String,
    pub path: Option<PathBuf>,
    pub format: Option<DataFormat>,
    pub n: usize,
    pub positive_rate: f64,
    pub overlap: f64,
    pub strength: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            dataset: "bimodal".into(),
            path: None,
            format: None,
            n: 10_000,
            positive_rate: 0.4,
            overlap: 0.4,
            strength: SyntheticSpec::DEFAULT_STRENGTH,
        }
    }
}

impl DataConfig {
    pub fn synthetic_spec(&self, seed: u64) -> Result<Option<SyntheticSpec>> {
        let kind = match self.dataset.as_str() {
            "bimodal" => SyntheticKind::BimodalOverlap,
            "miscalibrated" => SyntheticKind::SShapeMiscalibrated,
            "imbalance" => SyntheticKind::ExtremeImbalance,
            "file" => return Ok(None),
            other => return Err(key_error("dataset", &format!("unknown dataset `{other}`"))),
        };
        Ok(Some(SyntheticSpec {
            kind,
            n: self.n,
            positive_rate: self.positive_rate,
            overlap: self.overlap,
            miscalibration_strength: self.strength,
            seed,
        }))
    }

    /// Generates or loads the records; quantiles derive from `seed`.
    pub fn load(&self, seed: u64) -> Result<Dataset> {
        match self.synthetic_spec(seed)? {
            Some(spec) => spec.generate(),
            None => {
                let path = self
                    .path
                    .as_ref()
                    .ok_or_else(|| key_error("path", "required when dataset = \"file\""))?;
                let format = match self.format {
                    Some(f) => f,
                    None => DataFormat::from_path(path)
                        .ok_or_else(|| key_error("format", "cannot infer from the file extension"))?,
                };
                load_dataset(path, format, seed)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(spec) = self.synthetic_spec(0)? {
            spec.validate().map_err(|e| match e {
                CascadeError::InvalidInput(msg) => CascadeError::InvalidInput(format!("data: {msg}")),
                other => other,
            })?;
        } else if self.path.is_none() {
            return Err(key_error("path", "required when dataset = \"file\""));
        }
        Ok(())
    }
}

/// Sweep, reliability and parallelism study settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    /// Key swept by `sweep`; defaults to the algorithm's native parameter.
    pub sweep_param: Option<String>,
    pub sweep_values: Vec<f64>,
    /// Number of seeds per grid point, starting at the run seed.
    pub seeds: usize,
    pub reliability_t_p: Vec<f64>,
    pub reliability_t_r: Vec<f64>,
    pub parallel_workers: Vec<usize>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            sweep_param: None,
            sweep_values: vec![0.1, 0.2, 0.35, 0.5, 0.65, 0.8],
            seeds: 3,
            reliability_t_p: vec![0.5, 0.6, 0.7, 0.8, 0.9],
            reliability_t_r: vec![0.5, 0.6, 0.7, 0.8, 0.9],
            parallel_workers: vec![1, 4, 8],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub run: RunConfig,
    pub data: DataConfig,
    pub study: StudyConfig,
}

/// `(section, key)` for every settable key, in display order.
pub const KEYS: &[(&str, &str)] = &[
    ("run", "algorithm"),
    ("run", "batch_size"),
    ("run", "sub_batch"),
    ("run", "workers"),
    ("run", "seed"),
    ("run", "rho"),
    ("run", "beta"),
    ("supg", "t_p"),
    ("supg", "t_r"),
    ("supg", "delta"),
    ("supg", "eta"),
    ("supg", "clip_delta"),
    ("supg", "residual"),
    ("gamcal", "alpha"),
    ("gamcal", "n_min"),
    ("gamcal", "lambda"),
    ("gamcal", "knots"),
    ("gamcal", "calibration"),
    ("gamcal", "bootstrap_members"),
    ("gamcal", "reservoir"),
    ("gamcal", "de_population"),
    ("gamcal", "de_mutation"),
    ("gamcal", "de_crossover"),
    ("gamcal", "de_generations"),
    ("gamcal", "de_tolerance"),
    ("gamcal", "de_seed"),
    ("data", "dataset"),
    ("data", "path"),
    ("data", "format"),
    ("data", "n"),
    ("data", "positive_rate"),
    ("data", "overlap"),
    ("data", "strength"),
    ("study", "sweep_param"),
    ("study", "sweep_values"),
    ("study", "seeds"),
    ("study", "reliability_t_p"),
    ("study", "reliability_t_r"),
    ("study", "parallel_workers"),
];

pub(crate) fn key_error(key: &str, message: &str) -> CascadeError {
    CascadeError::InvalidInput(format!("`{key}`: {message}"))
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| key_error(key, &format!("cannot parse `{value}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .trim()
        .trim_start_matches('[')
        .trim_end_matches(']')
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn unit(key: &str, value: &str, lo_open: bool, hi_open: bool) -> Result<f64> {
    let v: f64 = parse(key, value)?;
    let lo_ok = if lo_open { v > 0.0 } else { v >= 0.0 };
    let hi_ok = if hi_open { v < 1.0 } else { v <= 1.0 };
    if !(lo_ok && hi_ok) {
        let range = format!(
            "{}0, 1{}",
            if lo_open { "(" } else { "[" },
            if hi_open { ")" } else { "]" }
        );
        return Err(key_error(key, &format!("{v} outside {range}")));
    }
    Ok(v)
}

fn positive(key: &str, value: &str) -> Result<f64> {
    let v: f64 = parse(key, value)?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(key_error(key, &format!("{v} must be positive")));
    }
    Ok(v)
}

impl ExperimentConfig {
    /// Applies one `key = value` setting, validating its range.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let run = &mut self.run;
        let g = &mut run.gamcal;
        match key {
            "algorithm" => run.algorithm = value.trim().parse().map_err(|_| key_error(key, &format!("unknown algorithm `{value}`")))?,
            "batch_size" => run.batch_size = parse(key, value)?,
            "sub_batch" => run.sub_batch = parse(key, value)?,
            "workers" => run.workers = parse(key, value)?,
            "seed" => run.seed = parse(key, value)?,
            "rho" => run.rho = unit(key, value, true, false)?,
            "beta" => run.beta = positive(key, value)?,
            "t_p" => run.supg.t_p = unit(key, value, true, false)?,
            "t_r" => run.supg.t_r = unit(key, value, true, false)?,
            "delta" => run.supg.delta = unit(key, value, true, true)?,
            "eta" => run.supg.eta = unit(key, value, false, false)?,
            "clip_delta" => {
                let v: f64 = parse(key, value)?;
                if !(v >= 0.0) {
                    return Err(key_error(key, &format!("{v} must be non-negative")));
                }
                run.supg.clip_delta = v;
            }
            "residual" => {
                run.supg.residual = match value.trim() {
                    "delegate_all" => ResidualStrategy::DelegateAll,
                    "fallback_threshold" => ResidualStrategy::FallbackThreshold,
                    other => return Err(key_error(key, &format!("unknown residual strategy `{other}`"))),
                }
            }
            "alpha" => g.alpha = unit(key, value, false, false)?,
            "n_min" => g.n_min = parse(key, value)?,
            "lambda" => g.lambda = positive(key, value)?,
            "knots" => g.knots = parse(key, value)?,
            "calibration" => {
                g.backend = match value.trim() {
                    "laplace" => CalibrationBackend::Laplace,
                    "bootstrap" => CalibrationBackend::Bootstrap,
                    other => return Err(key_error(key, &format!("unknown calibration backend `{other}`"))),
                }
            }
            "bootstrap_members" => {
                let members: usize = parse(key, value)?;
                if members == 0 {
                    return Err(key_error(key, "must be at least 1"));
                }
                g.bootstrap_members = members;
            }
            "reservoir" => g.reservoir_capacity = parse(key, value)?,
            "de_population" => g.de.population_size = parse(key, value)?,
            "de_mutation" => g.de.mutation_factor = parse(key, value)?,
            "de_crossover" => g.de.crossover_rate = parse(key, value)?,
            "de_generations" => g.de.max_generations = parse(key, value)?,
            "de_tolerance" => g.de.convergence_tolerance = parse(key, value)?,
            "de_seed" => g.de.seed = parse(key, value)?,
            "dataset" => self.data.dataset = value.trim().to_string(),
            "path" => self.data.path = Some(PathBuf::from(value.trim())),
            "format" => self.data.format = Some(value.trim().parse().map_err(|_| key_error(key, &format!("unknown format `{value}`")))?),
            "n" => self.data.n = parse(key, value)?,
            "positive_rate" => self.data.positive_rate = unit(key, value, true, true)?,
            "overlap" => self.data.overlap = unit(key, value, false, false)?,
            "strength" => {
                let v: f64 = parse(key, value)?;
                if !(v >= 0.0) {
                    return Err(key_error(key, &format!("{v} must be non-negative")));
                }
                self.data.strength = v;
            }
            "sweep_param" => {
                let p = value.trim().to_string();
                if !KEYS.iter().any(|(_, k)| *k == p) {
                    return Err(key_error(key, &format!("unknown parameter `{p}`")));
                }
                self.study.sweep_param = Some(p);
            }
            "sweep_values" => self.study.sweep_values = parse_list(key, value)?,
            "seeds" => self.study.seeds = parse(key, value)?,
            "reliability_t_p" => self.study.reliability_t_p = parse_list(key, value)?,
            "reliability_t_r" => self.study.reliability_t_r = parse_list(key, value)?,
            "parallel_workers" => self.study.parallel_workers = parse_list(key, value)?,
            other => return Err(CascadeError::InvalidInput(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.run.validate()?;
        self.data.validate()?;
        if self.study.seeds == 0 {
            return Err(key_error("seeds", "must be at least 1"));
        }
        if self.study.parallel_workers.contains(&0) {
            return Err(key_error("parallel_workers", "worker counts must be at least 1"));
        }
        Ok(())
    }

    /// Current value of a key, rendered the way `set` accepts it.
    pub fn get(&self, key: &str) -> Option<String> {
        let r = &self.run;
        let g = &r.gamcal;
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        Some(match key {
            "algorithm" => r.algorithm.name().to_string(),
            "batch_size" => r.batch_size.to_string(),
            "sub_batch" => r.sub_batch.to_string(),
            "workers" => r.workers.to_string(),
            "seed" => r.seed.to_string(),
            "rho" => r.rho.to_string(),
            "beta" => r.beta.to_string(),
            "t_p" => r.supg.t_p.to_string(),
            "t_r" => r.supg.t_r.to_string(),
            "delta" => r.supg.delta.to_string(),
            "eta" => r.supg.eta.to_string(),
            "clip_delta" => r.supg.clip_delta.to_string(),
            "residual" => match r.supg.residual {
                ResidualStrategy::DelegateAll => "delegate_all".into(),
                ResidualStrategy::FallbackThreshold => "fallback_threshold".into(),
            },
            "alpha" => g.alpha.to_string(),
            "n_min" => g.n_min.to_string(),
            "lambda" => g.lambda.to_string(),
            "knots" => g.knots.to_string(),
            "calibration" => match g.backend {
                CalibrationBackend::Laplace => "laplace".into(),
                CalibrationBackend::Bootstrap => "bootstrap".into(),
            },
            "bootstrap_members" => g.bootstrap_members.to_string(),
            "reservoir" => g.reservoir_capacity.to_string(),
            "de_population" => g.de.population_size.to_string(),
            "de_mutation" => g.de.mutation_factor.to_string(),
            "de_crossover" => g.de.crossover_rate.to_string(),
            "de_generations" => g.de.max_generations.to_string(),
            "de_tolerance" => g.de.convergence_tolerance.to_string(),
            "de_seed" => g.de.seed.to_string(),
            "dataset" => self.data.dataset.clone(),
            "path" => self.data.path.as_ref()?.display().to_string(),
            "format" => match self.data.format? {
                DataFormat::Csv => "csv".into(),
                DataFormat::Jsonl => "jsonl".into(),
            },
            "n" => self.data.n.to_string(),
            "positive_rate" => self.data.positive_rate.to_string(),
            "overlap" => self.data.overlap.to_string(),
            "strength" => self.data.strength.to_string(),
            "sweep_param" => self.study.sweep_param.clone()?,
            "sweep_values" => list(&self.study.sweep_values),
            "seeds" => self.study.seeds.to_string(),
            "reliability_t_p" => list(&self.study.reliability_t_p),
            "reliability_t_r" => list(&self.study.reliability_t_r),
            "parallel_workers" => self
                .study
                .parallel_workers
                .iter()
                .map(|w| w.to_string())
                .collect::<Vec<_>>()
                .join(","),
            _ => return None,
        })
    }
}
