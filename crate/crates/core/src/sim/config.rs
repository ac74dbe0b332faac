use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One simulation scenario. Every field has a default, so a TOML file only
/// lists what it changes. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub n_centers: usize,
    pub center_size_mean: f64,
    pub center_size_sd: f64,

    /// Center censoring Weibull parameters are drawn on the log scale from a
    /// bivariate normal.
    pub censoring_log_shape_mean: f64,
    pub censoring_log_rate_mean: f64,
    pub censoring_log_shape_sd: f64,
    pub censoring_log_rate_sd: f64,
    pub censoring_correlation: f64,

    /// Every center shares one censoring distribution when set.
    pub same_followup: bool,
    pub same_followup_log_shape: f64,
    pub same_followup_log_rate: f64,

    pub covariate_between_var: f64,
    pub covariate_within_var: f64,
    pub covariate_beta: f64,

    /// Event hazard `H(t) = (rate t)^shape` times `exp(beta x)`.
    pub baseline_shape: f64,
    pub baseline_rate: f64,
    /// Variance of the normal center effect on the log rate.
    pub frailty_log_variance: f64,
    /// Center shapes are adjusted so every center has the baseline
    /// cumulative hazard at `non_ph_reference_time`.
    pub non_ph: bool,
    pub non_ph_reference_time: f64,

    pub tau: f64,
    pub alpha: f64,
    pub replications: usize,
    pub pseudo: bool,
    pub bootstrap: usize,
    pub seed: u64,
    /// Fraction of replicates allowed to fail before the run is an error.
    pub max_dropped_fraction: f64,

    /// Sizes used by `paper_scale`.
    pub paper_n_centers: usize,
    pub paper_replications: usize,
    pub paper_bootstrap: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "base".into(),
            n_centers: 100,
            center_size_mean: 200.0,
            center_size_sd: 150.0,
            censoring_log_shape_mean: 0.4,
            censoring_log_rate_mean: -4.8,
            censoring_log_shape_sd: 0.24,
            censoring_log_rate_sd: 1.72,
            censoring_correlation: -0.87,
            same_followup: false,
            same_followup_log_shape: 0.4,
            same_followup_log_rate: 0.8,
            covariate_between_var: 0.056,
            covariate_within_var: 0.224,
            covariate_beta: 1.0,
            baseline_shape: 0.94,
            baseline_rate: 0.032,
            frailty_log_variance: 0.0,
            non_ph: false,
            non_ph_reference_time: 12.0,
            tau: 12.0,
            alpha: 0.05,
            replications: 20,
            pseudo: true,
            bootstrap: 200,
            seed: 20_240_601,
            max_dropped_fraction: 0.05,
            paper_n_centers: 300,
            paper_replications: 50,
            paper_bootstrap: 1000,
        }
    }
}

pub const PRESETS: [&str; 7] =
    ["base", "base-same-fup", "fewer-centers", "fewer-patients", "non-ph", "small-frailty", "large-frailty"];

impl ScenarioConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let base = Self { name: name.to_string(), ..Self::default() };
        let cfg = match name {
            "base" => base,
            "base-same-fup" => Self { same_followup: true, ..base },
            "fewer-centers" => Self {
                n_centers: 30,
                paper_n_centers: 30,
                replications: 60,
                paper_replications: 500,
                ..base
            },
            "fewer-patients" => Self {
                center_size_mean: 20.0,
                center_size_sd: 15.0,
                replications: 40,
                paper_replications: 50,
                ..base
            },
            "non-ph" => Self { frailty_log_variance: 0.15, non_ph: true, ..base },
            "small-frailty" => Self { frailty_log_variance: 0.15, ..base },
            "large-frailty" => Self { frailty_log_variance: 0.3, ..base },
            other => {
                return Err(Error::Config(format!("unknown scenario `{other}`; known: {}", PRESETS.join(", "))))
            }
        };
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    /// Full-size replication counts.
    pub fn paper_scale(&self) -> Self {
        Self {
            n_centers: self.paper_n_centers,
            replications: self.paper_replications,
            bootstrap: self.paper_bootstrap,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        let pos = |v: f64| v.is_finite() && v > 0.0;
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if self.n_centers < 2 {
            return bad("n_centers must be at least 2");
        }
        if !pos(self.center_size_mean) || !nonneg(self.center_size_sd) {
            return bad("center size mean must be positive and sd non-negative");
        }
        if !nonneg(self.censoring_log_shape_sd) || !nonneg(self.censoring_log_rate_sd) {
            return bad("censoring standard deviations must be non-negative");
        }
        if !(self.censoring_correlation.abs() <= 1.0) {
            return bad("censoring_correlation must lie in [-1, 1]");
        }
        if !nonneg(self.covariate_between_var) || !nonneg(self.covariate_within_var) {
            return bad("covariate variances must be non-negative");
        }
        if !nonneg(self.frailty_log_variance) {
            return bad("frailty_log_variance must be non-negative");
        }
        if !pos(self.baseline_shape) || !pos(self.baseline_rate) || !pos(self.non_ph_reference_time) {
            return bad("baseline shape, rate and reference time must be positive");
        }
        if self.non_ph && self.baseline_rate * self.non_ph_reference_time >= 1.0 {
            return bad("non_ph needs baseline_rate * non_ph_reference_time < 1");
        }
        if !pos(self.tau) {
            return bad("tau must be positive");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if self.replications == 0 {
            return bad("replications must be at least 1");
        }
        if self.pseudo && self.bootstrap < 100 {
            return bad("bootstrap must be at least 100");
        }
        if !(0.0..1.0).contains(&self.max_dropped_fraction) {
            return bad("max_dropped_fraction must lie in [0, 1)");
        }
        Ok(())
    }
}
