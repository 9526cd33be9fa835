//! Experiment configuration and its flat key-value file format.
//!
//! Config files are flat TOML tables. Recognised keys:
//!
//! | key            | meaning                                              |
//! |----------------|------------------------------------------------------|
//! | `p`            | signal dimension                                     |
//! | `beta`         | sparsity exponent, support size `round(p^(1-beta))` |
//! | `num_nonzero`  | explicit support size (overrides `beta`)            |
//! | `snr`          | squared amplitude `mu^2`                             |
//! | `trials`       | Monte Carlo trials                                   |
//! | `decay`        | ratio between consecutive step budgets               |
//! | `master_seed`  | 64-bit master seed                                   |
//! | `method`       | `ds`, `nonadaptive` or `both`                        |
//! | `target_fdr`   | FDR to calibrate thresholds to                       |
//! | `threshold_grid` | explicit list of thresholds for sweeps             |
//! | `pilot_trials` | calibration trials                                   |
//! | `common_noise` | share one noise stream between methods               |
//! | `snr_list`     | SNR values for `snr-sweep`                           |
//! | `r_list`       | amplitude exponents for `phase-transition`           |
//! | `workers`      | cap on worker threads                                |
//!
//! `subcommand` and `tool_version` are written into metadata sidecars and
//! accepted (and ignored by the harness) on load.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sensing::DEFAULT_DECAY;
use crate::signal::sparsity_from_beta;

pub const DEFAULT_TRIALS: usize = 1000;
pub const DEFAULT_PILOT_TRIALS: usize = 500;
pub const DEFAULT_TARGET_FDR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ds,
    Nonadaptive,
    Both,
}

impl Method {
    /// The concrete methods this selection runs, in output order.
    pub fn expand(self) -> &'static [Method] {
        match self {
            Method::Ds => &[Method::Ds],
            Method::Nonadaptive => &[Method::Nonadaptive],
            Method::Both => &[Method::Ds, Method::Nonadaptive],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ds => "ds",
            Method::Nonadaptive => "nonadaptive",
            Method::Both => "both",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ds" => Ok(Method::Ds),
            "nonadaptive" | "na" => Ok(Method::Nonadaptive),
            "both" => Ok(Method::Both),
            other => Err(Error::param(format!("unknown method {other:?}; expected ds, nonadaptive or both"))),
        }
    }
}

/// How the support size is specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sparsity {
    Beta(f64),
    Count(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub p: usize,
    pub sparsity: Sparsity,
    pub snr: f64,
    pub trials: usize,
    pub decay: f64,
    pub master_seed: u64,
    pub method: Method,
    pub threshold_grid: Option<Vec<f64>>,
    pub target_fdr: Option<f64>,
    pub pilot_trials: usize,
    pub common_noise: bool,
}

impl ExperimentConfig {
    /// Defaults for the `p = 2^14`, `sqrt(p)`-sparse setting.
    pub fn new(p: usize, sparsity: Sparsity, snr: f64) -> Self {
        ExperimentConfig {
            p,
            sparsity,
            snr,
            trials: DEFAULT_TRIALS,
            decay: DEFAULT_DECAY,
            master_seed: 0,
            method: Method::Both,
            threshold_grid: None,
            target_fdr: None,
            pilot_trials: DEFAULT_PILOT_TRIALS,
            common_noise: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::param(format!("p must be at least 2, got {}", self.p)));
        }
        if self.trials == 0 {
            return Err(Error::param("trials must be at least 1"));
        }
        if self.pilot_trials == 0 {
            return Err(Error::param("pilot_trials must be at least 1"));
        }
        if !(self.snr >= 0.0) || !self.snr.is_finite() {
            return Err(Error::param(format!("snr must be finite and nonnegative, got {}", self.snr)));
        }
        if !(self.decay > 0.5 && self.decay <= 1.0) {
            return Err(Error::param(format!("decay must lie in (1/2, 1], got {}", self.decay)));
        }
        if let Some(t) = self.target_fdr {
            if !(0.0..1.0).contains(&t) {
                return Err(Error::param(format!("target_fdr must lie in [0, 1), got {t}")));
            }
        }
        if let Some(grid) = &self.threshold_grid {
            if grid.is_empty() {
                return Err(Error::param("threshold_grid must not be empty"));
            }
            if grid.iter().any(|t| !(*t > 0.0)) {
                return Err(Error::param("threshold_grid entries must be positive"));
            }
        }
        self.num_nonzero().map(|_| ())
    }

    pub fn num_nonzero(&self) -> Result<usize> {
        match self.sparsity {
            Sparsity::Beta(beta) => sparsity_from_beta(self.p, beta),
            Sparsity::Count(s) if s <= self.p => Ok(s),
            Sparsity::Count(s) => Err(Error::param(format!("num_nonzero {s} exceeds p {}", self.p))),
        }
    }

    pub fn amplitude(&self) -> f64 {
        self.snr.sqrt()
    }

    /// Sparsity exponent: as configured, or `1 - ln s / ln p` for an explicit
    /// count. `None` for an empty support.
    pub fn beta(&self) -> Option<f64> {
        match self.sparsity {
            Sparsity::Beta(b) => Some(b),
            Sparsity::Count(0) => None,
            Sparsity::Count(s) => Some(1.0 - (s as f64).ln() / (self.p as f64).ln()),
        }
    }

    /// Amplitude exponent `r = snr / (2 ln p)`.
    pub fn r(&self) -> f64 {
        self.snr / (2.0 * (self.p as f64).ln())
    }
}

/// Flat on-disk form of a run configuration. Every key is optional; missing
/// keys fall back to defaults when converted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subcommand: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tool_version: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_nonzero: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_fdr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pilot_trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub common_noise: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($field:ident),* $(,)?) => {
        $( if $src.$field.is_some() { $dst.$field = $src.$field.clone(); } )*
    };
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            Error::Parameter(message) => Error::Config { path: path.to_owned(), message },
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::param(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Values present in `other` replace those in `self`.
    pub fn overlay(&mut self, other: &ConfigFile) {
        overlay!(self, other;
            subcommand, tool_version, p, beta, num_nonzero, snr, trials, decay, master_seed,
            method, target_fdr, threshold_grid, pilot_trials, common_noise, snr_list, r_list, workers);
    }

    /// Builds the experiment config. `p` defaults to `2^14`, sparsity to
    /// `beta = 1/2`, `snr` to zero.
    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let p = self.p.unwrap_or(1 << 14);
        let sparsity = match (self.num_nonzero, self.beta) {
            (Some(s), _) => Sparsity::Count(s),
            (None, Some(b)) => Sparsity::Beta(b),
            (None, None) => Sparsity::Beta(0.5),
        };
        let mut cfg = ExperimentConfig::new(p, sparsity, self.snr.unwrap_or(0.0));
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(d) = self.decay {
            cfg.decay = d;
        }
        if let Some(s) = self.master_seed {
            cfg.master_seed = s;
        }
        if let Some(m) = self.method {
            cfg.method = m;
        }
        if let Some(n) = self.pilot_trials {
            cfg.pilot_trials = n;
        }
        cfg.common_noise = self.common_noise.unwrap_or(false);
        cfg.threshold_grid = self.threshold_grid.clone();
        cfg.target_fdr = self.target_fdr;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_file() {
        let text = r#"
            p = 16384
            beta = 0.5
            snr = 8.0
            trials = 10
            master_seed = 7
            method = "ds"
            threshold_grid = [1.0, 2.0]
        "#;
        let cfg = ConfigFile::parse(text).unwrap().experiment().unwrap();
        assert_eq!(cfg.p, 16384);
        assert_eq!(cfg.num_nonzero().unwrap(), 128);
        assert_eq!(cfg.method, Method::Ds);
        assert_eq!(cfg.threshold_grid, Some(vec![1.0, 2.0]));
        assert_eq!(cfg.decay, 0.75);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(ConfigFile::parse("bogus = 1").is_err());
        let bad = ConfigFile { decay: Some(0.4), ..Default::default() };
        assert!(bad.experiment().unwrap_err().is_parameter());
        let bad = ConfigFile { trials: Some(0), ..Default::default() };
        assert!(bad.experiment().is_err());
        let bad = ConfigFile { snr: Some(-1.0), ..Default::default() };
        assert!(bad.experiment().is_err());
    }

    #[test]
    fn overlay_prefers_other_and_round_trips() {
        let mut base = ConfigFile { p: Some(100), snr: Some(1.0), ..Default::default() };
        base.overlay(&ConfigFile { snr: Some(4.0), method: Some(Method::Nonadaptive), ..Default::default() });
        assert_eq!(base.p, Some(100));
        assert_eq!(base.snr, Some(4.0));
        let back = ConfigFile::parse(&base.to_toml()).unwrap();
        assert_eq!(back, base);
    }

    #[test]
    fn derived_exponents() {
        let cfg = ExperimentConfig::new(1 << 16, Sparsity::Count(256), 16.0);
        assert!((cfg.beta().unwrap() - 0.5).abs() < 1e-12);
        assert!((cfg.r() - 16.0 / (2.0 * 65536f64.ln())).abs() < 1e-12);
        assert_eq!(ExperimentConfig::new(10, Sparsity::Count(0), 1.0).beta(), None);
    }
}
