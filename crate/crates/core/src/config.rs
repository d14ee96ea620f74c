//! Declarative experiment files for `hopfield-md compare`.
//!
//! ```json
//! {
//!   "description": "optional free text",
//!   "truth": { "n": 10, "sigma": 1.0, "seed": 61 },
//!   "methods": [
//!     { "label": "md-hopfield", "method": "md", "alpha": 0.001, "epsilon": 1e-6,
//!       "max_iters": 5000, "init": "hopfield" }
//!   ],
//!   "pca": { "grid_size": 100, "margin": 0.1 }
//! }
//! ```
//!
//! Unknown fields are rejected at every level.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::experiment::{MethodSpec, TruthSpec};
use crate::optim::{InitStrategy, Method, OptimizerConfig, DEFAULT_ALPHA, DEFAULT_EPSILON, DEFAULT_MAX_ITERS};
use crate::{Error, Result};

pub const DEFAULT_GRID: usize = 100;
pub const DEFAULT_MARGIN: f64 = 0.1;
pub const DEFAULT_INIT_SIGMA: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    Random,
    Hopfield,
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}
fn default_max_iters() -> usize {
    DEFAULT_MAX_ITERS
}
fn default_init_sigma() -> f64 {
    DEFAULT_INIT_SIGMA
}
fn default_grid() -> usize {
    DEFAULT_GRID
}
fn default_margin() -> f64 {
    DEFAULT_MARGIN
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodEntry {
    pub label: String,
    pub method: Method,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub grad_tol: f64,
    pub init: InitKind,
    #[serde(default)]
    pub init_seed: u64,
    #[serde(default = "default_init_sigma")]
    pub init_sigma: f64,
}

impl MethodEntry {
    pub fn to_spec(&self) -> MethodSpec {
        MethodSpec {
            label: self.label.clone(),
            config: OptimizerConfig {
                method: self.method,
                alpha: self.alpha,
                epsilon: self.epsilon,
                max_iters: self.max_iters,
                grad_tol: self.grad_tol,
            },
            init: match self.init {
                InitKind::Hopfield => InitStrategy::Hopfield,
                InitKind::Random => InitStrategy::Random {
                    seed: self.init_seed,
                    sigma: self.init_sigma,
                },
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PcaOptions {
    #[serde(default = "default_grid")]
    pub grid_size: usize,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

impl Default for PcaOptions {
    fn default() -> Self {
        Self {
            grid_size: DEFAULT_GRID,
            margin: DEFAULT_MARGIN,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    /// Free-form note, e.g. why a seed was chosen.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub truth: TruthSpec,
    pub methods: Vec<MethodEntry>,
    #[serde(default)]
    pub pca: PcaOptions,
}

/// Labels become file names, so they are restricted to a portable alphabet.
fn valid_label(label: &str) -> bool {
    !label.is_empty()
        && !label.starts_with('.')
        && label
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

impl RunConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.truth.validate()?;
        if self.methods.is_empty() {
            return Err(Error::Config("method list is empty".into()));
        }
        let mut seen = HashSet::new();
        for entry in &self.methods {
            if !valid_label(&entry.label) {
                return Err(Error::Config(format!(
                    "label `{}` must be non-empty and use only letters, digits, '-', '_' or '.'",
                    entry.label
                )));
            }
            if !seen.insert(entry.label.as_str()) {
                return Err(Error::Config(format!("duplicate method label `{}`", entry.label)));
            }
            entry.to_spec().config.validate()?;
            if !(entry.init_sigma >= 0.0 && entry.init_sigma.is_finite()) {
                return Err(Error::Config(format!(
                    "init_sigma of `{}` must be non-negative",
                    entry.label
                )));
            }
        }
        if self.pca.grid_size == 0 || self.pca.margin.is_nan() || self.pca.margin < 0.0 {
            return Err(Error::Config("pca grid_size must be positive and margin non-negative".into()));
        }
        Ok(())
    }

    pub fn method_specs(&self) -> Vec<MethodSpec> {
        self.methods.iter().map(MethodEntry::to_spec).collect()
    }
}
