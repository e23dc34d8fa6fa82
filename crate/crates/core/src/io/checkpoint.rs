//! JSON checkpoints: architecture descriptor, per-tensor shapes and values,
//! optimizer settings and the seed. Values round-trip bit-exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::csv_io::write_text;
use crate::error::{Error, Result};
use crate::models::{build, NetworkSpec, Standardizer, TrainConfig};
use crate::nn::{AdamConfig, Network};
use crate::pinn::InputMap;

pub const CHECKPOINT_FORMAT: &str = "physml-checkpoint-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamBlock {
    pub layer: usize,
    pub layer_type: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub spec: NetworkSpec,
    pub seed: u64,
    pub config_hash: String,
    pub optimizer: AdamConfig,
    #[serde(default)]
    pub train: Option<TrainConfig>,
    pub params: Vec<ParamBlock>,
    #[serde(default)]
    pub standardizer: Option<Standardizer>,
    #[serde(default)]
    pub input_map: Option<InputMap>,
    #[serde(default)]
    pub energy: Option<f64>,
}

impl Checkpoint {
    pub fn capture(net: &Network, spec: &NetworkSpec, seed: u64, config_hash: &str, optimizer: AdamConfig) -> Self {
        let mut params = Vec::new();
        for (i, layer) in net.layers.iter().enumerate() {
            for p in layer.params() {
                params.push(ParamBlock {
                    layer: i,
                    layer_type: layer.name().to_string(),
                    shape: p.shape().to_vec(),
                    values: p.data().to_vec(),
                });
            }
        }
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            spec: spec.clone(),
            seed,
            config_hash: config_hash.to_string(),
            optimizer,
            train: None,
            params,
            standardizer: None,
            input_map: None,
            energy: None,
        }
    }

    /// Rebuilds the network. With `expected`, the stored architecture must
    /// match it.
    pub fn restore(&self, expected: Option<&NetworkSpec>) -> Result<Network> {
        if let Some(spec) = expected {
            if spec != &self.spec {
                return Err(Error::Checkpoint(format!(
                    "checkpoint holds a {} network ({:?}), expected {} ({:?})",
                    self.spec.kind(),
                    self.spec,
                    spec.kind(),
                    spec
                )));
            }
        }
        let mut net = build(&self.spec, self.seed)?;
        let expected_shapes = net.param_shapes();
        let found: Vec<Vec<usize>> = self.params.iter().map(|b| b.shape.clone()).collect();
        if expected_shapes != found {
            return Err(Error::Checkpoint(format!(
                "parameter shapes differ: expected {expected_shapes:?}, found {found:?}"
            )));
        }
        for (tensor, block) in net.params_mut().into_iter().zip(&self.params) {
            if block.values.len() != tensor.len() {
                return Err(Error::Checkpoint(format!(
                    "layer {} ({}) has {} values for shape {:?}",
                    block.layer,
                    block.layer_type,
                    block.values.len(),
                    block.shape
                )));
            }
            tensor.data_mut().copy_from_slice(&block.values);
        }
        Ok(net)
    }
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let text = serde_json::to_string_pretty(ckpt).map_err(|e| Error::Checkpoint(e.to_string()))?;
    write_text(path, &text)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ckpt: Checkpoint = serde_json::from_str(&text)
        .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
    if ckpt.format != CHECKPOINT_FORMAT {
        return Err(Error::Checkpoint(format!(
            "{}: unknown format '{}'",
            path.display(),
            ckpt.format
        )));
    }
    Ok(ckpt)
}
