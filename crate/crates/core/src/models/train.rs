use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::{Standardizer, Supervised};
use crate::error::{Error, Result};
use crate::nn::{mse_loss, Adam, AdamConfig, Network, Tape};

const EVAL_CHUNK: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub lr: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub early_stop_patience: usize,
    pub early_stop_min_delta: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            max_epochs: 500,
            batch_size: 32,
            early_stop_patience: 25,
            early_stop_min_delta: 1e-6,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        if self.early_stop_patience == 0 {
            return Err(Error::Config("early-stopping patience must be at least 1".into()));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::Config("batch size and max epochs must be positive".into()));
        }
        if !(self.early_stop_min_delta >= 0.0) {
            return Err(Error::Config("min_delta must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct History {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// Epochs actually run (1-based count).
    pub stopped_epoch: usize,
    /// Epoch (1-based) whose parameters were kept.
    pub best_epoch: usize,
}

/// Patience-based stopping on validation loss.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    min_delta: f64,
    best: f64,
    since_best: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize, min_delta: f64) -> Self {
        Self {
            patience,
            min_delta,
            best: f64::INFINITY,
            since_best: 0,
        }
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    /// Records one epoch. Returns `(improved, stop)`.
    pub fn update(&mut self, val_loss: f64) -> (bool, bool) {
        if val_loss < self.best - self.min_delta {
            self.best = val_loss;
            self.since_best = 0;
            (true, false)
        } else {
            self.since_best += 1;
            (false, self.since_best >= self.patience)
        }
    }
}

fn mean_loss(net: &Network, set: &Supervised) -> Result<f64> {
    let mut total = 0.0;
    let idx: Vec<usize> = (0..set.len()).collect();
    for chunk in idx.chunks(EVAL_CHUNK) {
        let batch = set.subset(chunk);
        let pred = net.forward(&batch.inputs)?;
        let (loss, _) = mse_loss(&pred, &batch.targets)?;
        total += loss * chunk.len() as f64;
    }
    Ok(total / set.len() as f64)
}

/// Mini-batch Adam on MSE with early stopping; returns the parameters with
/// the best validation loss.
pub fn train(
    mut net: Network,
    train_set: &Supervised,
    val_set: &Supervised,
    cfg: &TrainConfig,
) -> Result<(Network, History)> {
    cfg.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::Config("training and validation splits must be non-empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0f_ba7c);
    let mut adam = Adam::new(AdamConfig::with_lr(cfg.lr));
    let mut stopper = EarlyStopping::new(cfg.early_stop_patience, cfg.early_stop_min_delta);
    let mut history = History::default();
    let mut best = net.clone();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut tape = Tape::new();

    let diverged = |epoch: usize, e: Error| match e {
        Error::NonFinite { .. } => Error::Training {
            epoch,
            reason: e.to_string(),
        },
        other => other,
    };

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = train_set.subset(chunk);
            let pred = net
                .forward_recorded(&batch.inputs, &mut tape)
                .map_err(|e| diverged(epoch, e))?;
            let (loss, grad) = mse_loss(&pred, &batch.targets)?;
            if !loss.is_finite() {
                return Err(Error::Training {
                    epoch,
                    reason: format!("loss became {loss}"),
                });
            }
            let grads = net.backward(&tape, &grad)?;
            adam.step(&mut net, &grads)?;
            epoch_loss += loss * chunk.len() as f64;
        }
        let train_loss = epoch_loss / train_set.len() as f64;
        let val_loss = mean_loss(&net, val_set).map_err(|e| diverged(epoch, e))?;
        if !val_loss.is_finite() {
            return Err(Error::Training {
                epoch,
                reason: format!("validation loss became {val_loss}"),
            });
        }
        history.train_loss.push(train_loss);
        history.val_loss.push(val_loss);
        history.stopped_epoch = epoch;

        let (improved, stop) = stopper.update(val_loss);
        if improved {
            best = net.clone();
            history.best_epoch = epoch;
        }
        if stop {
            break;
        }
    }
    Ok((best, history))
}

/// Predictions in original units.
pub fn predict(net: &Network, set: &Supervised, standardizer: &Standardizer) -> Result<Vec<f64>> {
    let idx: Vec<usize> = (0..set.len()).collect();
    let mut out = Vec::with_capacity(set.len());
    for chunk in idx.chunks(EVAL_CHUNK) {
        let pred = net.forward(&set.subset(chunk).inputs)?;
        out.extend(pred.data().iter().map(|&z| standardizer.inverse_target(z)));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mae: f64,
    pub r_squared: f64,
}

impl Metrics {
    pub fn from_predictions(pred: &[f64], truth: &[f64]) -> Result<Self> {
        if pred.len() != truth.len() || truth.is_empty() {
            return Err(Error::Shape(format!(
                "{} predictions for {} targets",
                pred.len(),
                truth.len()
            )));
        }
        let n = truth.len() as f64;
        let mean = truth.iter().sum::<f64>() / n;
        let ss_tot: f64 = truth.iter().map(|y| (y - mean) * (y - mean)).sum();
        if !(ss_tot > 0.0) {
            return Err(Error::DegenerateMetric(
                "R² is undefined for constant targets".into(),
            ));
        }
        let ss_res: f64 = pred.iter().zip(truth).map(|(p, y)| (y - p) * (y - p)).sum();
        let mae = pred.iter().zip(truth).map(|(p, y)| (y - p).abs()).sum::<f64>() / n;
        Ok(Self {
            mae,
            r_squared: 1.0 - ss_res / ss_tot,
        })
    }
}

/// MAE and R² after mapping predictions and targets back to original units.
pub fn evaluate(net: &Network, test_set: &Supervised, standardizer: &Standardizer) -> Result<Metrics> {
    let pred = predict(net, test_set, standardizer)?;
    let truth: Vec<f64> = test_set
        .targets
        .iter()
        .map(|&z| standardizer.inverse_target(z))
        .collect();
    Metrics::from_predictions(&pred, &truth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Tensor;

    #[test]
    fn metric_examples() {
        let m = Metrics::from_predictions(&[1.0, 2.0, 4.0], &[1.0, 2.0, 4.0]).unwrap();
        assert_eq!((m.mae, m.r_squared), (0.0, 1.0));
        let truth = [1.0, 2.0, 6.0];
        let mean = 3.0;
        let m = Metrics::from_predictions(&[mean; 3], &truth).unwrap();
        assert!(m.r_squared.abs() < 1e-15);
        let m = Metrics::from_predictions(&[0.0, 2.0], &[1.0, 3.0]).unwrap();
        assert_eq!(m.mae, 1.0);
        assert!(matches!(
            Metrics::from_predictions(&[1.0, 2.0], &[5.0, 5.0]),
            Err(Error::DegenerateMetric(_))
        ));
    }

    #[test]
    fn stopping_rule_with_worsening_loss() {
        let mut s = EarlyStopping::new(1, 0.0);
        assert_eq!(s.update(1.0), (true, false));
        assert_eq!(s.update(2.0), (false, true));
    }

    #[test]
    fn stopping_respects_min_delta() {
        let mut s = EarlyStopping::new(2, 0.1);
        s.update(1.0);
        assert_eq!(s.update(0.95), (false, false));
        assert_eq!(s.update(0.85), (true, false));
        assert_eq!(s.best(), 0.85);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig {
            lr: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            early_stop_patience: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn empty_splits_rejected() {
        let net = crate::models::build(&crate::models::NetworkSpec::PendulumAnn { inputs: 1, hidden: vec![2] }, 0).unwrap();
        let empty = Supervised {
            inputs: Tensor::zeros(&[0, 1]),
            targets: vec![],
        };
        assert!(train(net, &empty, &empty, &TrainConfig::default()).is_err());
    }
}
