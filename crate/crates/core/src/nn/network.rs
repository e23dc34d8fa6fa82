use serde::{Deserialize, Serialize};

use super::layers::{Cache, Layer};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// A sequential stack of layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<Layer>,
}

/// Activations recorded by [`Network::forward_recorded`], consumed by
/// [`Network::backward`].
#[derive(Debug, Default)]
pub struct Tape {
    caches: Vec<Cache>,
    output_shape: Vec<usize>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.caches.is_empty()
    }
}

/// One gradient tensor per parameter tensor, in [`Network::params`] order.
pub type Gradients = Vec<Tensor>;

impl Network {
    pub fn new(layers: Vec<Layer>) -> Self {
        Self { layers }
    }

    pub fn params(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        self.params().iter().map(|p| p.shape().to_vec()).collect()
    }

    pub fn zero_grads(&self) -> Gradients {
        self.params().iter().map(|p| Tensor::zeros(p.shape())).collect()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        self.params().iter().flat_map(|p| p.data().iter().copied()).collect()
    }

    pub fn set_flat_params(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.param_count() {
            return Err(Error::Shape(format!(
                "{} parameter values for a network with {}",
                values.len(),
                self.param_count()
            )));
        }
        let mut offset = 0;
        for p in self.params_mut() {
            let n = p.len();
            p.data_mut().copy_from_slice(&values[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    fn check(index: usize, layer: &Layer, y: &Tensor) -> Result<()> {
        if y.all_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite {
                index,
                layer: layer.name().to_string(),
            })
        }
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let mut cur = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            cur = layer.forward(&cur)?;
            Self::check(i, layer, &cur)?;
        }
        Ok(cur)
    }

    pub fn forward_recorded(&self, x: &Tensor, tape: &mut Tape) -> Result<Tensor> {
        tape.caches.clear();
        let mut cur = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let (y, cache) = layer.forward_cached(&cur, true)?;
            Self::check(i, layer, &y)?;
            tape.caches.push(cache.expect("recording forward keeps a cache"));
            cur = y;
        }
        tape.output_shape = cur.shape().to_vec();
        Ok(cur)
    }

    /// Reverse-mode pass from `grad_out` (gradient of the loss with respect to
    /// the network output recorded on `tape`).
    pub fn backward(&self, tape: &Tape, grad_out: &Tensor) -> Result<Gradients> {
        let mut grads = self.zero_grads();
        self.backward_into(tape, grad_out, &mut grads)?;
        Ok(grads)
    }

    pub fn backward_into(&self, tape: &Tape, grad_out: &Tensor, grads: &mut Gradients) -> Result<()> {
        if tape.caches.len() != self.layers.len() {
            return Err(Error::State(
                "backward called without a recorded forward pass".into(),
            ));
        }
        if grad_out.shape() != tape.output_shape.as_slice() {
            return Err(Error::Shape(format!(
                "output gradient {:?} does not match recorded output {:?}",
                grad_out.shape(),
                tape.output_shape
            )));
        }
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for l in &self.layers {
            offsets.push(off);
            off += l.params().len();
        }
        let mut g = grad_out.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let n = layer.params().len();
            let slot = &mut grads[offsets[i]..offsets[i] + n];
            g = layer.backward(&tape.caches[i], &g, slot)?;
        }
        Ok(())
    }
}

/// Mean squared error over all entries, with its gradient.
pub fn mse_loss(pred: &Tensor, target: &[f64]) -> Result<(f64, Tensor)> {
    if pred.len() != target.len() || target.is_empty() {
        return Err(Error::Shape(format!(
            "{} predictions for {} targets",
            pred.len(),
            target.len()
        )));
    }
    let n = target.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(target.len());
    for (p, t) in pred.data().iter().zip(target) {
        let r = p - t;
        loss += r * r;
        grad.push(2.0 * r / n);
    }
    Ok((loss / n, Tensor::new(pred.shape().to_vec(), grad)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::layers::Dense;

    fn single_dense() -> Network {
        Network::new(vec![Layer::Dense(
            Dense::from_parts(
                Tensor::new(vec![1, 3], vec![0.5, -1.0, 2.0]).unwrap(),
                Tensor::scalar(0.25),
            )
            .unwrap(),
        )])
    }

    #[test]
    fn backward_without_forward_is_state_error() {
        let net = single_dense();
        let err = net.backward(&Tape::new(), &Tensor::zeros(&[1, 1])).unwrap_err();
        assert!(matches!(err, Error::State(_)));
    }

    #[test]
    fn dense_mse_gradient_matches_hand_derivation() {
        let net = single_dense();
        let x = [1.0, 2.0, -0.5];
        let y = 0.7;
        let mut tape = Tape::new();
        let pred = net
            .forward_recorded(&Tensor::new(vec![1, 3], x.to_vec()).unwrap(), &mut tape)
            .unwrap();
        let (_, g) = mse_loss(&pred, &[y]).unwrap();
        let grads = net.backward(&tape, &g).unwrap();
        let r = 0.5 * 1.0 - 2.0 - 1.0 + 0.25 - y;
        for (gw, xi) in grads[0].data().iter().zip(x) {
            assert!((gw - 2.0 * r * xi).abs() < 1e-14);
        }
        assert!((grads[1].data()[0] - 2.0 * r).abs() < 1e-14);
    }

    #[test]
    fn zero_output_gradient_gives_zero_grads() {
        let net = single_dense();
        let mut tape = Tape::new();
        net.forward_recorded(&Tensor::new(vec![1, 3], vec![1.0, 1.0, 1.0]).unwrap(), &mut tape)
            .unwrap();
        let grads = net.backward(&tape, &Tensor::zeros(&[1, 1])).unwrap();
        assert!(grads.iter().all(|g| g.data().iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn non_finite_output_names_layer() {
        let net = single_dense();
        let err = net
            .forward(&Tensor::new(vec![1, 3], vec![f64::INFINITY, 0.0, 0.0]).unwrap())
            .unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 0, .. }), "{err}");
    }
}
