//! Concrete architectures and the supervised training harness.

mod data;
mod train;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use data::{
    make_pendulum_features, quantum_table, FeatureTable, Scaling, Standardizer, Supervised,
    PENDULUM_FEATURES,
};
pub use train::{evaluate, predict, train, EarlyStopping, History, Metrics, TrainConfig};

use crate::error::{Error, Result};
use crate::nn::{Conv1d, Dense, Layer, Lstm, Network, Padding};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    PendulumAnn,
    QuantumCnn,
    QuantumLstm,
    PinnMlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::PendulumAnn,
        ModelKind::QuantumCnn,
        ModelKind::QuantumLstm,
        ModelKind::PinnMlp,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::PendulumAnn => "pendulum_ann",
            ModelKind::QuantumCnn => "quantum_cnn",
            ModelKind::QuantumLstm => "quantum_lstm",
            ModelKind::PinnMlp => "pinn_mlp",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s || k.as_str().replace('_', "-") == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown model kind '{s}' (expected one of pendulum_ann, quantum_cnn, quantum_lstm, pinn_mlp)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub filters: usize,
    pub width: usize,
}

/// Architecture descriptor; resolves to a concrete layer stack.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NetworkSpec {
    /// Dense layers with ReLU between them, scalar output.
    PendulumAnn { inputs: usize, hidden: Vec<usize> },
    /// Same-padded Conv1D+ReLU blocks, global average pooling, dense head.
    QuantumCnn {
        channels: usize,
        convs: Vec<ConvSpec>,
        head: Vec<usize>,
    },
    /// LSTM (tanh cell) over the sequence, then a ReLU dense head.
    QuantumLstm {
        channels: usize,
        units: usize,
        head: Vec<usize>,
    },
    /// Scalar-to-scalar Dense+Tanh stack.
    PinnMlp { hidden: Vec<usize> },
}

impl NetworkSpec {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::PendulumAnn => NetworkSpec::PendulumAnn {
                inputs: PENDULUM_FEATURES.len(),
                hidden: vec![64, 64, 32],
            },
            ModelKind::QuantumCnn => NetworkSpec::QuantumCnn {
                channels: 1,
                convs: vec![
                    ConvSpec {
                        filters: 16,
                        width: 7,
                    },
                    ConvSpec {
                        filters: 32,
                        width: 5,
                    },
                ],
                head: vec![32],
            },
            ModelKind::QuantumLstm => NetworkSpec::QuantumLstm {
                channels: 1,
                units: 64,
                head: vec![32],
            },
            ModelKind::PinnMlp => NetworkSpec::PinnMlp {
                hidden: vec![32, 32],
            },
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            NetworkSpec::PendulumAnn { .. } => ModelKind::PendulumAnn,
            NetworkSpec::QuantumCnn { .. } => ModelKind::QuantumCnn,
            NetworkSpec::QuantumLstm { .. } => ModelKind::QuantumLstm,
            NetworkSpec::PinnMlp { .. } => ModelKind::PinnMlp,
        }
    }

    fn validate(&self) -> Result<()> {
        let zero = |v: &[usize]| v.iter().any(|&w| w == 0);
        let bad = match self {
            NetworkSpec::PendulumAnn { inputs, hidden } => *inputs == 0 || zero(hidden),
            NetworkSpec::QuantumCnn {
                channels,
                convs,
                head,
            } => {
                *channels == 0
                    || convs.is_empty()
                    || convs.iter().any(|c| c.filters == 0 || c.width == 0)
                    || zero(head)
            }
            NetworkSpec::QuantumLstm {
                channels,
                units,
                head,
            } => *channels == 0 || *units == 0 || zero(head),
            NetworkSpec::PinnMlp { hidden } => zero(hidden),
        };
        if bad {
            return Err(Error::Config(format!("invalid network spec {self:?}")));
        }
        Ok(())
    }
}

fn dense_stack(
    layers: &mut Vec<Layer>,
    mut width: usize,
    hidden: &[usize],
    activation: Layer,
    rng: &mut ChaCha8Rng,
) {
    for &h in hidden {
        layers.push(Layer::Dense(Dense::new(width, h, rng)));
        layers.push(activation.clone());
        width = h;
    }
    layers.push(Layer::Dense(Dense::new(width, 1, rng)));
}

/// Builds the layer stack with parameters drawn from a generator seeded by
/// `seed` alone.
pub fn build(spec: &NetworkSpec, seed: u64) -> Result<Network> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::new();
    match spec {
        NetworkSpec::PendulumAnn { inputs, hidden } => {
            dense_stack(&mut layers, *inputs, hidden, Layer::Relu, &mut rng);
        }
        NetworkSpec::QuantumCnn {
            channels,
            convs,
            head,
        } => {
            let mut ch = *channels;
            for c in convs {
                layers.push(Layer::Conv1d(Conv1d::new(
                    ch,
                    c.filters,
                    c.width,
                    Padding::Same,
                    &mut rng,
                )));
                layers.push(Layer::Relu);
                ch = c.filters;
            }
            layers.push(Layer::GlobalAvgPool1d);
            dense_stack(&mut layers, ch, head, Layer::Relu, &mut rng);
        }
        NetworkSpec::QuantumLstm {
            channels,
            units,
            head,
        } => {
            layers.push(Layer::Lstm(Lstm::new(*channels, *units, &mut rng)));
            dense_stack(&mut layers, *units, head, Layer::Relu, &mut rng);
        }
        NetworkSpec::PinnMlp { hidden } => {
            dense_stack(&mut layers, 1, hidden, Layer::Tanh, &mut rng);
        }
    }
    Ok(Network::new(layers))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Tensor;

    #[test]
    fn lstm_parameter_count() {
        let net = build(&NetworkSpec::default_for(ModelKind::QuantumLstm), 0).unwrap();
        assert_eq!(net.param_count(), 19009);
    }

    #[test]
    fn same_seed_same_parameters() {
        for kind in ModelKind::ALL {
            let spec = NetworkSpec::default_for(kind);
            assert_eq!(build(&spec, 42).unwrap(), build(&spec, 42).unwrap());
            assert_ne!(build(&spec, 42).unwrap(), build(&spec, 43).unwrap());
        }
    }

    #[test]
    fn cnn_head_width_is_last_filter_count() {
        let net = build(&NetworkSpec::default_for(ModelKind::QuantumCnn), 1).unwrap();
        let first_dense = net
            .layers
            .iter()
            .find_map(|l| match l {
                Layer::Dense(d) => Some(d.inputs()),
                _ => None,
            })
            .unwrap();
        assert_eq!(first_dense, 32);
        let y = net.forward(&Tensor::zeros(&[2, 500, 1])).unwrap();
        assert_eq!(y.shape(), &[2, 1]);
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("quantum_cnn".parse::<ModelKind>().unwrap(), ModelKind::QuantumCnn);
        assert_eq!("pendulum-ann".parse::<ModelKind>().unwrap(), ModelKind::PendulumAnn);
        assert!(matches!("gru".parse::<ModelKind>(), Err(Error::Config(_))));
    }

    #[test]
    fn invalid_spec_rejected() {
        let spec = NetworkSpec::QuantumLstm {
            channels: 1,
            units: 0,
            head: vec![],
        };
        assert!(build(&spec, 0).is_err());
    }
}
