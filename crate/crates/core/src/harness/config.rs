use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::estimators::{Access, DEFAULT_C1};
use crate::linalg;
use crate::samplizer::{SamplizerMode, DEFAULT_C0};

pub const CONFIG_VERSION: u32 = 1;
/// Largest supported state dimension.
pub const MAX_DIM: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    Query,
    SampleIdeal,
    SampleLmr,
}

impl RunMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunMode::Query => "query",
            RunMode::SampleIdeal => "sample-ideal",
            RunMode::SampleLmr => "sample-lmr",
        }
    }

    pub fn access(&self) -> Access {
        match self {
            RunMode::Query => Access::Query,
            RunMode::SampleIdeal => Access::Sample(SamplizerMode::Ideal),
            RunMode::SampleLmr => Access::Sample(SamplizerMode::Lmr),
        }
    }

    pub fn is_sample(&self) -> bool {
        !matches!(self, RunMode::Query)
    }
}

impl FromStr for RunMode {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "query" => Ok(RunMode::Query),
            "sample-ideal" => Ok(RunMode::SampleIdeal),
            "sample-lmr" => Ok(RunMode::SampleLmr),
            other => Err(LabError::InvalidArgument(format!(
                "unknown mode '{other}' (expected query, sample-ideal or sample-lmr)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantityKind {
    #[default]
    Affinity,
    Tsallis,
    Hellinger,
}

impl QuantityKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            QuantityKind::Affinity => "affinity",
            QuantityKind::Tsallis => "tsallis",
            QuantityKind::Hellinger => "hellinger",
        }
    }
}

impl FromStr for QuantityKind {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "affinity" => Ok(QuantityKind::Affinity),
            "tsallis" => Ok(QuantityKind::Tsallis),
            "hellinger" => Ok(QuantityKind::Hellinger),
            other => Err(LabError::InvalidArgument(format!(
                "unknown quantity '{other}' (expected affinity, tsallis or hellinger)"
            ))),
        }
    }
}

fn default_c0() -> f64 {
    DEFAULT_C0
}

fn default_c1() -> f64 {
    DEFAULT_C1
}

/// Versioned experiment description, stored as JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub alpha: f64,
    pub dim: usize,
    pub rank: usize,
    pub eps: f64,
    pub trials: usize,
    pub mode: RunMode,
    pub seed: u64,
    #[serde(default)]
    pub quantity: QuantityKind,
    /// `(ε₁, ε₂)` for Hellinger certification.
    #[serde(default)]
    pub thresholds: Option<(f64, f64)>,
    /// Fixture name or instance directory; a random pair is generated when absent.
    #[serde(default)]
    pub instance: Option<String>,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    /// Record wall-clock time per trial (breaks byte-identical output).
    #[serde(default)]
    pub timing: bool,
    #[serde(default = "default_c0")]
    pub c0: f64,
    #[serde(default = "default_c1")]
    pub c1: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            version: CONFIG_VERSION,
            alpha: 0.5,
            dim: 2,
            rank: 1,
            eps: 0.1,
            trials: 30,
            mode: RunMode::Query,
            seed: 0,
            quantity: QuantityKind::Affinity,
            thresholds: None,
            instance: None,
            output_path: None,
            timing: false,
            c0: DEFAULT_C0,
            c1: DEFAULT_C1,
        }
    }
}

fn invalid(msg: String) -> LabError {
    LabError::InvalidArgument(msg)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(invalid(format!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid(format!("alpha = {} must lie in (0, 1)", self.alpha)));
        }
        if !linalg::is_power_of_two(self.dim) || self.dim < 2 || self.dim > MAX_DIM {
            return Err(invalid(format!(
                "dim = {} must be a power of two in 2..={MAX_DIM}",
                self.dim
            )));
        }
        if self.rank == 0 || self.rank > self.dim {
            return Err(invalid(format!("rank = {} must lie in 1..={}", self.rank, self.dim)));
        }
        if self.quantity == QuantityKind::Hellinger {
            match self.thresholds {
                Some((a, b)) if 0.0 <= a && a < b && b <= 1.0 => {}
                Some((a, b)) => {
                    return Err(invalid(format!("thresholds ({a}, {b}) must satisfy 0 ≤ ε₁ < ε₂ ≤ 1")))
                }
                None => return Err(invalid("hellinger runs need --thresholds".into())),
            }
        } else if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(invalid(format!("eps = {} must lie in (0, 1)", self.eps)));
        }
        if !(self.c0 > 0.0 && self.c1 > 0.0) {
            return Err(invalid("sample constants c0 and c1 must be positive".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| LabError::Parse(format!("config: {e}")))?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let cfg = ExperimentConfig {
            mode: RunMode::SampleLmr,
            thresholds: Some((0.05, 0.4)),
            quantity: QuantityKind::Hellinger,
            ..Default::default()
        };
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert!(cfg.to_json().contains("\"sample-lmr\""));
    }

    #[test]
    fn minimal_json_fills_defaults() {
        let text = r#"{"version":1,"alpha":0.3,"dim":4,"rank":2,"eps":0.2,"trials":5,"mode":"query","seed":7}"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.quantity, QuantityKind::Affinity);
        assert_eq!(cfg.c0, DEFAULT_C0);
        cfg.validate().unwrap();
    }

    #[test]
    fn validation_rejects_bad_fields() {
        let bad = [
            ExperimentConfig { version: 2, ..Default::default() },
            ExperimentConfig { alpha: 1.0, ..Default::default() },
            ExperimentConfig { dim: 3, ..Default::default() },
            ExperimentConfig { dim: 32, rank: 1, ..Default::default() },
            ExperimentConfig { rank: 3, ..Default::default() },
            ExperimentConfig { eps: 0.0, ..Default::default() },
            ExperimentConfig { quantity: QuantityKind::Hellinger, ..Default::default() },
        ];
        for cfg in bad {
            assert!(matches!(cfg.validate(), Err(LabError::InvalidArgument(_))), "{cfg:?}");
        }
        assert!(ExperimentConfig::from_json(r#"{"version":1,"bogus":3}"#).is_err());
        assert!("classical".parse::<RunMode>().is_err());
    }
}
