//! Experiment configuration (JSON).
//!
//! ```json
//! {
//!   "pattern_file": "pattern.json",
//!   "sizes": [[400, 400], [800, 800]],
//!   "noise": {"kind": "uniform", "bound": 0.5},
//!   "seeds": 10,
//!   "seed_base": 0,
//!   "tau": 0.4,
//!   "gap_threshold": 3.0,
//!   "restarts": 10,
//!   "workers": 1,
//!   "trial_time_limit_secs": 300,
//!   "out_dir": "out"
//! }
//! ```
//!
//! `pattern_file` and `out_dir` are resolved against the directory holding
//! the config. The pattern file's block sizes give the proportions; each
//! sweep size rescales them. A uniform `bound` of 0 runs noiseless trials.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use twoway_core::{NoiseKind, DEFAULT_GAP_THRESHOLD};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub pattern_file: PathBuf,
    pub sizes: Vec<(usize, usize)>,
    pub noise: NoiseKind,
    #[serde(default = "default_seeds")]
    pub seeds: u64,
    #[serde(default)]
    pub seed_base: u64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_gap_threshold")]
    pub gap_threshold: f64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_time_limit")]
    pub trial_time_limit_secs: f64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_seeds() -> u64 {
    10
}

fn default_tau() -> f64 {
    0.4
}

fn default_gap_threshold() -> f64 {
    DEFAULT_GAP_THRESHOLD
}

fn default_restarts() -> usize {
    twoway_core::clustering::DEFAULT_RESTARTS
}

fn default_workers() -> usize {
    1
}

fn default_time_limit() -> f64 {
    300.0
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    /// Reads, validates and resolves relative paths against the config's
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|e| CliError::malformed(path, e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.pattern_file.is_relative() {
            cfg.pattern_file = base.join(&cfg.pattern_file);
        }
        if cfg.out_dir.is_relative() {
            cfg.out_dir = base.join(&cfg.out_dir);
        }
        cfg.validate().map_err(|e| match e {
            CliError::Usage(msg) => CliError::malformed(path, msg),
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Usage(msg));
        if self.sizes.is_empty() {
            return bad("size sweep is empty".into());
        }
        if let Some((m, n)) = self.sizes.iter().find(|(m, n)| *m == 0 || *n == 0) {
            return bad(format!("size ({m}, {n}) has a zero dimension"));
        }
        if self.seeds == 0 {
            return bad("seeds must be at least 1".into());
        }
        if !(self.tau > 0.0 && self.tau < 0.5) {
            return bad(format!("tau = {} must lie in (0, 1/2)", self.tau));
        }
        if !(self.gap_threshold.is_finite() && self.gap_threshold > 0.0) {
            return bad(format!("gap_threshold = {} must be positive", self.gap_threshold));
        }
        if self.restarts == 0 || self.workers == 0 {
            return bad("restarts and workers must be at least 1".into());
        }
        if !(self.trial_time_limit_secs > 0.0) {
            return bad("trial_time_limit_secs must be positive".into());
        }
        match self.noise {
            NoiseKind::Uniform { bound } if !(bound.is_finite() && bound >= 0.0) => bad(format!("uniform bound {bound} must be >= 0")),
            NoiseKind::Gaussian { variance } if !(variance.is_finite() && variance > 0.0) => bad(format!("gaussian variance {variance} must be positive")),
            _ => Ok(()),
        }
    }
}
