use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use survfunnel::funnel::{BenchmarkConfig, Multiplicity};

/// Settings for a benchmarking run as read from a TOML file. Command-line
/// flags override anything set here.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub covariates: Option<Vec<String>>,
    pub tau: Option<f64>,
    pub alpha: Option<f64>,
    pub multiplicity: Option<Multiplicity>,
    pub min_center_size: Option<usize>,
    pub small_center_threshold: Option<usize>,
    pub impute: Option<bool>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub bootstrap: Option<usize>,
}

pub const DEFAULT_TAU: f64 = 12.0;
pub const DEFAULT_BOOTSTRAP: usize = 1000;
pub const DEFAULT_SEED: u64 = 1;

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overlay(self, other: RunConfig) -> RunConfig {
        RunConfig {
            input: other.input.or(self.input),
            covariates: other.covariates.or(self.covariates),
            tau: other.tau.or(self.tau),
            alpha: other.alpha.or(self.alpha),
            multiplicity: other.multiplicity.or(self.multiplicity),
            min_center_size: other.min_center_size.or(self.min_center_size),
            small_center_threshold: other.small_center_threshold.or(self.small_center_threshold),
            impute: other.impute.or(self.impute),
            out_dir: other.out_dir.or(self.out_dir),
            seed: other.seed.or(self.seed),
            bootstrap: other.bootstrap.or(self.bootstrap),
        }
    }

    pub fn input(&self) -> Result<&Path> {
        match &self.input {
            Some(p) => Ok(p),
            None => bail!("no input file: pass --input or set `input` in the config"),
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn tau(&self) -> f64 {
        self.tau.unwrap_or(DEFAULT_TAU)
    }

    pub fn benchmark(&self) -> Result<BenchmarkConfig<f64>> {
        let mut cfg = BenchmarkConfig::new(self.tau());
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        if let Some(m) = self.multiplicity {
            cfg.multiplicity = m;
        }
        if let Some(m) = self.min_center_size {
            cfg.min_center_size = m;
        }
        if let Some(s) = self.small_center_threshold {
            cfg.small_center_threshold = s;
        }
        if let Some(i) = self.impute {
            cfg.imputation_enabled = i;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
