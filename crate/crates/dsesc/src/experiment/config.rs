//! Experiment configuration: JSON in, validated config out.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::datasets::{FileFormat, NormalizeMode, SyntheticSpec};
use crate::error::{Error, Result};
use crate::model::{Activation, HyperParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Pretrain,
    Train,
    Cluster,
    Ablate,
    SweepGamma,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pretrain" => Ok(Mode::Pretrain),
            "train" => Ok(Mode::Train),
            "cluster" => Ok(Mode::Cluster),
            "ablate" => Ok(Mode::Ablate),
            "sweep-gamma" => Ok(Mode::SweepGamma),
            other => Err(Error::Config(format!(
                "unknown mode `{other}` (expected pretrain|train|cluster|ablate|sweep-gamma)"
            ))),
        }
    }
}

/// Which coefficient matrix feeds the affinity used for the headline labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AffinitySource {
    #[serde(rename = "C", alias = "c")]
    C,
    #[serde(rename = "theta")]
    Theta,
    #[serde(rename = "fused")]
    Fused,
}

impl AffinitySource {
    pub const ALL: [AffinitySource; 3] =
        [AffinitySource::C, AffinitySource::Theta, AffinitySource::Fused];

    /// File-name suffix for heatmaps: affinity_{C,theta,fused}.pgm.
    pub fn tag(&self) -> &'static str {
        match self {
            AffinitySource::C => "C",
            AffinitySource::Theta => "theta",
            AffinitySource::Fused => "fused",
        }
    }
}

/// Which loss modules are active during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Modules {
    #[serde(rename = "L1")]
    L1,
    #[serde(rename = "L1+L2")]
    L1L2,
    #[serde(rename = "L1+L2+L3")]
    L1L2L3,
}

impl Modules {
    pub const ALL: [Modules; 3] = [Modules::L1, Modules::L1L2, Modules::L1L2L3];

    pub fn label(&self) -> &'static str {
        match self {
            Modules::L1 => "L1",
            Modules::L1L2 => "L1+L2",
            Modules::L1L2L3 => "L1+L2+L3",
        }
    }

    /// Zeroes the weights of disabled modules.
    pub fn apply(&self, mut hp: HyperParams) -> HyperParams {
        match self {
            Modules::L1 => {
                hp.lambda3 = 0.0;
                hp.lambda4 = 0.0;
                hp.gamma = 0.0;
            }
            Modules::L1L2 => {
                hp.gamma = 0.0;
            }
            Modules::L1L2L3 => {}
        }
        hp
    }

    pub fn includes_l2(&self) -> bool {
        !matches!(self, Modules::L1)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetConfig {
    Synthetic {
        k: usize,
        ambient_dim: usize,
        subspace_dim: usize,
        n_per_cluster: usize,
        #[serde(default)]
        noise_sigma: f64,
    },
    Files {
        data: PathBuf,
        #[serde(default)]
        labels: Option<PathBuf>,
        format: FileFormat,
        #[serde(default)]
        k: Option<usize>,
    },
}

impl DatasetConfig {
    pub fn synthetic_spec(&self) -> Option<SyntheticSpec> {
        match *self {
            DatasetConfig::Synthetic {
                k,
                ambient_dim,
                subspace_dim,
                n_per_cluster,
                noise_sigma,
            } => Some(SyntheticSpec {
                k,
                ambient_dim,
                subspace_dim,
                n_per_cluster,
                noise_sigma,
            }),
            DatasetConfig::Files { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AutoencoderConfig {
    /// When true, encode/decode are exact identity maps and the layer
    /// fields are ignored.
    #[serde(default = "default_true")]
    pub identity: bool,
    #[serde(default)]
    pub hidden: Vec<usize>,
    #[serde(default)]
    pub latent: Option<usize>,
    #[serde(default = "default_activation")]
    pub activation: Activation,
}

fn default_true() -> bool {
    true
}

fn default_activation() -> Activation {
    Activation::Tanh
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        AutoencoderConfig {
            identity: true,
            hidden: Vec::new(),
            latent: None,
            activation: Activation::Tanh,
        }
    }
}

/// The gamma grid swept when the config does not override it.
pub const DEFAULT_GAMMA_GRID: [f64; 7] = [0.001, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0];

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub hyper: HyperParams,
    pub mode: Mode,
    #[serde(default = "default_affinity")]
    pub affinity: AffinitySource,
    #[serde(default = "default_modules")]
    pub modules: Modules,
    #[serde(default)]
    pub autoencoder: AutoencoderConfig,
    #[serde(default = "default_normalize")]
    pub normalize: NormalizeMode,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Checkpoint to load in cluster mode.
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
    /// Gamma values for sweep-gamma mode; defaults to the standard grid.
    #[serde(default)]
    pub gamma_grid: Option<Vec<f64>>,
}

fn default_affinity() -> AffinitySource {
    AffinitySource::Fused
}

fn default_modules() -> Modules {
    Modules::L1L2L3
}

fn default_normalize() -> NormalizeMode {
    NormalizeMode::UnitNorm
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }

    /// Hyperparameters with the module selection applied and the seed
    /// propagated.
    pub fn effective_hyper(&self) -> HyperParams {
        let mut hp = self.modules.apply(self.hyper);
        hp.seed = self.seed;
        hp
    }

    pub fn validate(&self) -> Result<()> {
        self.hyper.validate().map_err(|e| Error::Config(e.to_string()))?;

        // A theta-based affinity is meaningless when the second
        // self-expressive module never trains.
        if self.mode != Mode::Ablate
            && !self.modules.includes_l2()
            && self.affinity != AffinitySource::C
        {
            return Err(Error::Config(format!(
                "affinity source `{}` requires the L2 module (modules = {})",
                self.affinity.tag(),
                self.modules.label()
            )));
        }

        if self.mode == Mode::Cluster && self.checkpoint.is_none() {
            return Err(Error::Config(
                "cluster mode requires a `checkpoint` path".into(),
            ));
        }

        if !self.autoencoder.identity && self.autoencoder.latent.is_none() {
            return Err(Error::Config(
                "non-identity autoencoder requires a `latent` dimension".into(),
            ));
        }

        if let Some(grid) = &self.gamma_grid {
            if grid.is_empty() {
                return Err(Error::Config("gamma_grid must be nonempty".into()));
            }
            if grid.iter().any(|g| !g.is_finite() || *g < 0.0) {
                return Err(Error::Config(
                    "gamma_grid values must be finite and >= 0".into(),
                ));
            }
        }

        if let DatasetConfig::Synthetic {
            k,
            ambient_dim,
            subspace_dim,
            n_per_cluster,
            noise_sigma,
        } = &self.dataset
        {
            if *k == 0 || *subspace_dim == 0 || *subspace_dim >= *ambient_dim {
                return Err(Error::Config(
                    "synthetic dataset needs k >= 1 and 0 < subspace_dim < ambient_dim".into(),
                ));
            }
            if *n_per_cluster < subspace_dim + 1 {
                return Err(Error::Config(
                    "synthetic dataset needs n_per_cluster >= subspace_dim + 1".into(),
                ));
            }
            if !(*noise_sigma >= 0.0) {
                return Err(Error::Config("noise_sigma must be >= 0".into()));
            }
        }

        Ok(())
    }

    pub fn gamma_grid(&self) -> Vec<f64> {
        self.gamma_grid
            .clone()
            .unwrap_or_else(|| DEFAULT_GAMMA_GRID.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_json() -> serde_json::Value {
        serde_json::json!({
            "dataset": {
                "kind": "synthetic",
                "k": 2, "ambient_dim": 10, "subspace_dim": 2, "n_per_cluster": 8,
                "noise_sigma": 0.0
            },
            "mode": "train",
            "out_dir": "/tmp/out",
            "seed": 7
        })
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let config = ExperimentConfig::from_json(&base_json().to_string()).unwrap();
        assert_eq!(config.mode, Mode::Train);
        assert_eq!(config.affinity, AffinitySource::Fused);
        assert_eq!(config.modules, Modules::L1L2L3);
        assert!(config.autoencoder.identity);
        assert_eq!(config.hyper, HyperParams::default());
        assert_eq!(config.gamma_grid(), DEFAULT_GAMMA_GRID.to_vec());
    }

    #[test]
    fn theta_affinity_without_l2_rejected() {
        let mut json = base_json();
        json["affinity"] = "theta".into();
        json["modules"] = "L1".into();
        assert!(matches!(
            ExperimentConfig::from_json(&json.to_string()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn cluster_mode_requires_checkpoint() {
        let mut json = base_json();
        json["mode"] = "cluster".into();
        assert!(ExperimentConfig::from_json(&json.to_string()).is_err());
        json["checkpoint"] = "/tmp/ckpt.bin".into();
        assert!(ExperimentConfig::from_json(&json.to_string()).is_ok());
    }

    #[test]
    fn module_application_zeroes_weights() {
        let hp = HyperParams::default();
        let l1 = Modules::L1.apply(hp);
        assert_eq!(l1.lambda3, 0.0);
        assert_eq!(l1.lambda4, 0.0);
        assert_eq!(l1.gamma, 0.0);
        assert_eq!(l1.lambda1, hp.lambda1);
        let l12 = Modules::L1L2.apply(hp);
        assert_eq!(l12.gamma, 0.0);
        assert_eq!(l12.lambda3, hp.lambda3);
        assert_eq!(Modules::L1L2L3.apply(hp), hp);
    }

    #[test]
    fn bad_tau_rejected() {
        let mut json = base_json();
        json["hyper"] = serde_json::json!({"tau": 0.0});
        assert!(matches!(
            ExperimentConfig::from_json(&json.to_string()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn unknown_field_rejected() {
        let mut json = base_json();
        json["no_such_field"] = 1.into();
        assert!(ExperimentConfig::from_json(&json.to_string()).is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let config = ExperimentConfig::from_json(&base_json().to_string()).unwrap();
        let text = serde_json::to_string(&config).unwrap();
        let back = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(back, config);
    }
}
