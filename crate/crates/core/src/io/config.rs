//! Run configuration files (TOML). Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::csv_io::write_text;
use super::split::validate_fractions;
use crate::error::{Error, Result};
use crate::models::{ModelKind, TrainConfig};
use crate::pendulum::{PendulumParams, PendulumState};
use crate::quantum::{self, PotentialSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum System {
    Pendulum,
    Quantum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PendulumConfig {
    pub m: f64,
    pub l: f64,
    pub b: f64,
    pub k: f64,
    pub g: f64,
    pub t0: f64,
    pub omega_ext: f64,
    pub c: f64,
    pub theta0: f64,
    pub omega0: f64,
    pub t_end: f64,
    pub dt: f64,
}

impl Default for PendulumConfig {
    fn default() -> Self {
        let p = PendulumParams::default();
        let s = PendulumState::default();
        Self {
            m: p.m,
            l: p.l,
            b: p.b,
            k: p.k,
            g: p.g,
            t0: p.t0,
            omega_ext: p.omega_ext,
            c: p.c,
            theta0: s.theta,
            omega0: s.omega,
            t_end: 30.0,
            dt: 0.01,
        }
    }
}

impl PendulumConfig {
    pub fn params(&self) -> PendulumParams {
        PendulumParams {
            m: self.m,
            l: self.l,
            b: self.b,
            k: self.k,
            g: self.g,
            t0: self.t0,
            omega_ext: self.omega_ext,
            c: self.c,
        }
    }

    pub fn initial_state(&self) -> PendulumState {
        PendulumState::new(self.theta0, self.omega0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuantumConfig {
    pub x_max: f64,
    pub n_points: usize,
    pub levels: usize,
    pub lambda_count: usize,
    pub lambda_max: f64,
    pub m: f64,
    pub omega: f64,
    pub hbar: f64,
}

impl Default for QuantumConfig {
    fn default() -> Self {
        Self {
            x_max: quantum::DEFAULT_X_MAX,
            n_points: quantum::DEFAULT_POINTS,
            levels: quantum::DEFAULT_LEVELS,
            lambda_count: 500,
            lambda_max: 1.0,
            m: 1.0,
            omega: 1.0,
            hbar: 1.0,
        }
    }
}

impl QuantumConfig {
    pub fn base_spec(&self) -> PotentialSpec {
        PotentialSpec {
            m: self.m,
            omega: self.omega,
            lambda: 0.0,
            hbar: self.hbar,
        }
    }
}

/// Supervised-training settings; unset fields take per-model defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub lr: Option<f64>,
    pub max_epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub patience: Option<usize>,
    pub min_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PinnConfig {
    pub epochs: usize,
    pub lr: f64,
    pub log_every: usize,
    pub hidden: Vec<usize>,
    pub collocation_pendulum: usize,
    pub collocation_quantum: usize,
    pub x_max: f64,
    pub initial_energy: f64,
}

impl Default for PinnConfig {
    fn default() -> Self {
        Self {
            epochs: 1000,
            lr: 1e-3,
            log_every: 100,
            hidden: vec![32, 32],
            collocation_pendulum: crate::pinn::PENDULUM_COLLOCATION,
            collocation_quantum: crate::pinn::QUANTUM_COLLOCATION,
            x_max: crate::pinn::QUANTUM_X_MAX,
            initial_energy: crate::pinn::INITIAL_ENERGY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: System,
    pub model: ModelKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_split")]
    pub split: [f64; 3],
    /// Input dataset; generated from the sections below when absent.
    #[serde(default)]
    pub data: Option<PathBuf>,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub pendulum: PendulumConfig,
    #[serde(default)]
    pub quantum: QuantumConfig,
    #[serde(default)]
    pub pinn: PinnConfig,
}

fn default_split() -> [f64; 3] {
    [0.7, 0.15, 0.15]
}

impl RunConfig {
    pub fn new(system: System, model: ModelKind) -> Self {
        Self {
            system,
            model,
            seed: 0,
            split: default_split(),
            data: None,
            train: TrainSection::default(),
            pendulum: PendulumConfig::default(),
            quantum: QuantumConfig::default(),
            pinn: PinnConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        validate_fractions(self.split)?;
        let expected = match self.model {
            ModelKind::PendulumAnn => Some(System::Pendulum),
            ModelKind::QuantumCnn | ModelKind::QuantumLstm => Some(System::Quantum),
            ModelKind::PinnMlp => None,
        };
        if expected.is_some_and(|s| s != self.system) {
            return Err(Error::Config(format!(
                "model {} does not belong to system {:?}",
                self.model, self.system
            )));
        }
        self.pendulum.params().validate()?;
        crate::pendulum::step_count(self.pendulum.t_end, self.pendulum.dt)?;
        self.quantum.base_spec().validate()?;
        if self.quantum.n_points < 3 {
            return Err(Error::Config(format!(
                "grid needs at least 3 points, got {}",
                self.quantum.n_points
            )));
        }
        if self.quantum.lambda_count == 0 || !(self.quantum.lambda_max >= 0.0) {
            return Err(Error::Config("lambda sweep needs at least one non-negative value".into()));
        }
        self.train_config().validate()
    }

    /// Supervised settings with per-model defaults filled in.
    pub fn train_config(&self) -> TrainConfig {
        let base = TrainConfig::default();
        let lr_default = match self.model {
            ModelKind::QuantumLstm => 1e-4,
            _ => base.lr,
        };
        TrainConfig {
            lr: self.train.lr.unwrap_or(lr_default),
            max_epochs: self.train.max_epochs.unwrap_or(base.max_epochs),
            batch_size: self.train.batch_size.unwrap_or(base.batch_size),
            early_stop_patience: self.train.patience.unwrap_or(base.early_stop_patience),
            early_stop_min_delta: self.train.min_delta.unwrap_or(base.early_stop_min_delta),
            seed: self.seed,
        }
    }

    /// Copy with every optional field made explicit.
    pub fn resolved(&self) -> Self {
        let t = self.train_config();
        let mut out = self.clone();
        out.train = TrainSection {
            lr: Some(t.lr),
            max_epochs: Some(t.max_epochs),
            batch_size: Some(t.batch_size),
            patience: Some(t.early_stop_patience),
            min_delta: Some(t.early_stop_min_delta),
        };
        out
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// First 16 hex digits of the SHA-256 of the resolved TOML.
    pub fn hash(&self) -> Result<String> {
        let text = self.resolved().to_toml()?;
        let digest = Sha256::digest(text.as_bytes());
        Ok(hex::encode(digest)[..16].to_string())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_text(path, &self.resolved().to_toml()?)
    }
}
