use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::registry::{MetricKind, MetricScope};
use crate::ensembles::EnsembleSpec;
use crate::{LabError, Result, C64};

fn default_true() -> bool {
    true
}

/// One experiment, as read from JSON. Complex numbers are `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub ensemble: EnsembleSpec,
    #[serde(default)]
    pub shifts: Vec<C64>,
    #[serde(default)]
    pub eta_grid: Vec<C64>,
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub metrics: Vec<String>,
    /// Upper bounds on metric values; a threshold passes when every
    /// successful trial stays at or below it.
    #[serde(default)]
    pub thresholds: BTreeMap<String, f64>,
    pub output_directory: PathBuf,
    #[serde(default = "default_true")]
    pub parallel: bool,
    /// Also write `trials/<t>/spectra.csv`.
    #[serde(default)]
    pub save_spectra: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parsed metric list, in config order.
    pub fn metric_kinds(&self) -> Result<Vec<MetricKind>> {
        self.metrics
            .iter()
            .map(|name| {
                MetricKind::from_name(name).ok_or_else(|| {
                    LabError::Config(format!(
                        "unknown metric {name:?}; registered: {}",
                        MetricKind::ALL.iter().map(|m| m.name()).collect::<Vec<_>>().join(", ")
                    ))
                })
            })
            .collect()
    }

    /// Everything that can be checked without sampling.
    pub fn validate(&self) -> Result<()> {
        let cfg_err = |msg: String| Err(LabError::Config(msg));
        if self.trials == 0 {
            return cfg_err("trials must be at least 1".into());
        }
        self.ensemble
            .validate_shape()
            .and_then(|_| self.ensemble.atom.validate())
            .map_err(|e| LabError::Config(e.to_string()))?;
        let kinds = self.metric_kinds()?;
        let mut seen = std::collections::BTreeSet::new();
        for k in &kinds {
            if !seen.insert(k.name()) {
                return cfg_err(format!("metric {} listed twice", k.name()));
            }
        }
        for z in &self.shifts {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return cfg_err(format!("non-finite shift {z}"));
            }
        }
        for eta in &self.eta_grid {
            if !(eta.im > 0.0 && eta.re.is_finite() && eta.im.is_finite()) {
                return cfg_err(format!("eta grid point {eta} needs a finite positive imaginary part"));
            }
        }
        if self.shifts.is_empty() && kinds.iter().any(|k| k.scope() != MetricScope::Trial) {
            return cfg_err("z-dependent metrics requested but shifts is empty".into());
        }
        if self.eta_grid.is_empty() && kinds.iter().any(|k| k.scope() == MetricScope::ShiftEta) {
            return cfg_err("stieltjes_deviation requested but eta_grid is empty".into());
        }
        for (name, t) in &self.thresholds {
            if !kinds.iter().any(|k| k.name() == name) {
                return cfg_err(format!("threshold for {name:?}, which is not in the metric list"));
            }
            if t.is_nan() {
                return cfg_err(format!("threshold for {name} is NaN"));
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON encoding; any field change moves it.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        let hash = Sha256::digest(&bytes);
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}
