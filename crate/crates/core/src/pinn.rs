//! Physics-informed training for the pendulum and the harmonic oscillator.
//!
//! Residuals are built from exact input derivatives of a Dense+Tanh network.
//! The loss is `L_data + L_phys`, with any auxiliary penalty reported as a
//! separate item so the decomposition stays auditable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{forward_dual, jet_backward, jet_forward, Adam, AdamConfig, Dual2, Gradients, JetArrays, Network};
use crate::pendulum::{PendulumParams, Trajectory};

pub const PENDULUM_COLLOCATION: usize = 300;
pub const QUANTUM_COLLOCATION: usize = 201;
pub const QUANTUM_X_MAX: f64 = 5.0;
pub const INITIAL_ENERGY: f64 = 0.51;

/// Affine map from the physical variable to the network input,
/// `s = (x − shift) · scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputMap {
    pub shift: f64,
    pub scale: f64,
}

impl InputMap {
    pub const IDENTITY: InputMap = InputMap {
        shift: 0.0,
        scale: 1.0,
    };

    /// Maps `[lo, hi]` onto `[−1, 1]`.
    pub fn onto_unit(lo: f64, hi: f64) -> Self {
        Self {
            shift: 0.5 * (lo + hi),
            scale: 2.0 / (hi - lo),
        }
    }

    pub fn apply(&self, x: f64) -> f64 {
        (x - self.shift) * self.scale
    }

    fn jet(&self, x: f64) -> Dual2 {
        Dual2::new(self.apply(x), self.scale, 0.0)
    }
}

/// `n` evenly spaced points on `[lo, hi]`, endpoints included.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinnLossReport {
    pub epoch: usize,
    pub data_loss: f64,
    pub phys_loss: f64,
    pub penalty: f64,
    pub total: f64,
    pub energy: Option<f64>,
}

/// Residual of the pendulum equation at `t`:
/// `m l² θ'' + b θ' + k θ + m g l sin θ − T0 cos(ω_ext t) − c θ'²`.
pub fn pendulum_residual(net: &Network, map: &InputMap, t: f64, p: &PendulumParams) -> Result<f64> {
    let th = forward_dual(net, map.jet(t))?;
    Ok(pendulum_residual_terms(th.value, th.d1, th.d2, t, p))
}

fn pendulum_residual_terms(theta: f64, d1: f64, d2: f64, t: f64, p: &PendulumParams) -> f64 {
    p.inertia() * d2 + p.b * d1 + p.k * theta + p.m * p.g * p.l * theta.sin()
        - p.t0 * (p.omega_ext * t).cos()
        - p.c * d1 * d1
}

/// Residual of `−½ψ'' + ½x²ψ − Eψ` at `x`.
pub fn quantum_residual(net: &Network, map: &InputMap, energy: f64, x: f64) -> Result<f64> {
    let psi = forward_dual(net, map.jet(x))?;
    Ok(quantum_residual_terms(psi.value, psi.d2, energy, x))
}

fn quantum_residual_terms(psi: f64, d2: f64, energy: f64, x: f64) -> f64 {
    -0.5 * d2 + 0.5 * x * x * psi - energy * psi
}

/// Loss report plus gradients of `total` with respect to the network
/// parameters and, for the quantum problem, the energy.
pub struct PinnEvaluation {
    pub report: PinnLossReport,
    pub grads: Gradients,
    pub energy_grad: Option<f64>,
}

pub trait PinnProblem {
    fn net(&self) -> &Network;
    fn net_mut(&mut self) -> &mut Network;
    /// Trainable scalar outside the network, if any.
    fn energy_mut(&mut self) -> Option<&mut f64> {
        None
    }
    fn evaluate(&self, epoch: usize) -> Result<PinnEvaluation>;
}

#[derive(Debug, Clone)]
pub struct PendulumPinnProblem {
    pub net: Network,
    pub params: PendulumParams,
    pub map: InputMap,
    pub data_t: Vec<f64>,
    pub data_theta: Vec<f64>,
    pub collocation: Vec<f64>,
}

impl PendulumPinnProblem {
    /// Uses every trajectory sample as a data point and `n_collocation`
    /// evenly spaced collocation times over the simulated span. Time is fed
    /// to the network unscaled.
    pub fn from_trajectory(
        net: Network,
        params: PendulumParams,
        traj: &Trajectory,
        n_collocation: usize,
    ) -> Result<Self> {
        if traj.is_empty() {
            return Err(Error::Config("trajectory has no samples".into()));
        }
        let (lo, hi) = (traj.t[0], traj.t[traj.len() - 1]);
        if !(hi > lo) {
            return Err(Error::Config("trajectory spans no time".into()));
        }
        Ok(Self {
            net,
            params,
            map: InputMap::IDENTITY,
            data_t: traj.t.clone(),
            data_theta: traj.theta.clone(),
            collocation: linspace(lo, hi, n_collocation),
        })
    }

    pub fn predict(&self, t: &[f64]) -> Result<Vec<f64>> {
        let inputs: Vec<f64> = t.iter().map(|&v| self.map.apply(v)).collect();
        Ok(jet_forward(&self.net, &inputs, self.map.scale)?.0.value)
    }
}

impl PinnProblem for PendulumPinnProblem {
    fn net(&self) -> &Network {
        &self.net
    }

    fn net_mut(&mut self) -> &mut Network {
        &mut self.net
    }

    fn evaluate(&self, epoch: usize) -> Result<PinnEvaluation> {
        if self.collocation.is_empty() {
            return Err(Error::Config("no collocation points".into()));
        }
        let p = &self.params;
        let map = &self.map;
        let mut grads = self.net.zero_grads();

        let mut data_loss = 0.0;
        if !self.data_t.is_empty() {
            let inputs: Vec<f64> = self.data_t.iter().map(|&t| map.apply(t)).collect();
            let (jets, tape) = jet_forward(&self.net, &inputs, map.scale)?;
            let n = inputs.len() as f64;
            let mut up = JetArrays {
                value: vec![0.0; inputs.len()],
                d1: vec![0.0; inputs.len()],
                d2: vec![0.0; inputs.len()],
            };
            for (k, (&y, &truth)) in jets.value.iter().zip(&self.data_theta).enumerate() {
                let r = y - truth;
                data_loss += r * r / n;
                up.value[k] = 2.0 * r / n;
            }
            for (g, d) in grads.iter_mut().zip(jet_backward(&self.net, &tape, &up)?) {
                g.add_assign(&d);
            }
        }

        let inputs: Vec<f64> = self.collocation.iter().map(|&t| map.apply(t)).collect();
        let (jets, tape) = jet_forward(&self.net, &inputs, map.scale)?;
        let n = inputs.len() as f64;
        let mut up = JetArrays {
            value: vec![0.0; inputs.len()],
            d1: vec![0.0; inputs.len()],
            d2: vec![0.0; inputs.len()],
        };
        let mut phys_loss = 0.0;
        for (k, &t) in self.collocation.iter().enumerate() {
            let (th, d1, d2) = (jets.value[k], jets.d1[k], jets.d2[k]);
            let r = pendulum_residual_terms(th, d1, d2, t, p);
            phys_loss += r * r / n;
            let w = 2.0 * r / n;
            up.value[k] = w * (p.k + p.m * p.g * p.l * th.cos());
            up.d1[k] = w * (p.b - 2.0 * p.c * d1);
            up.d2[k] = w * p.inertia();
        }
        for (g, d) in grads.iter_mut().zip(jet_backward(&self.net, &tape, &up)?) {
            g.add_assign(&d);
        }

        Ok(PinnEvaluation {
            report: PinnLossReport {
                epoch,
                data_loss,
                phys_loss,
                penalty: 0.0,
                total: data_loss + phys_loss,
                energy: None,
            },
            grads,
            energy_grad: None,
        })
    }
}

/// Harmonic oscillator (`m = ω = 1`) with a trainable energy and a
/// normalization penalty `(Σ ψ² Δx − 1)²` that rules out ψ ≡ 0.
#[derive(Debug, Clone)]
pub struct QuantumPinnProblem {
    pub net: Network,
    pub energy: f64,
    pub map: InputMap,
    pub collocation: Vec<f64>,
    pub penalty_weight: f64,
}

impl QuantumPinnProblem {
    pub fn new(net: Network, x_max: f64, n_collocation: usize, initial_energy: f64) -> Result<Self> {
        if n_collocation < 2 || !(x_max > 0.0) {
            return Err(Error::Config(format!(
                "need at least 2 collocation points on a positive half-width (got {n_collocation}, {x_max})"
            )));
        }
        Ok(Self {
            net,
            energy: initial_energy,
            map: InputMap::IDENTITY,
            collocation: linspace(-x_max, x_max, n_collocation),
            penalty_weight: 1.0,
        })
    }

    pub fn spacing(&self) -> f64 {
        let n = self.collocation.len();
        (self.collocation[n - 1] - self.collocation[0]) / (n - 1) as f64
    }

    /// Raw network output on the collocation grid.
    pub fn wavefunction(&self) -> Result<Vec<f64>> {
        let inputs: Vec<f64> = self.collocation.iter().map(|&x| self.map.apply(x)).collect();
        Ok(jet_forward(&self.net, &inputs, self.map.scale)?.0.value)
    }

    /// ψ rescaled to `Σ ψ² Δx = 1` and signed positive at its largest entry.
    pub fn normalized_wavefunction(&self) -> Result<Vec<f64>> {
        let raw = self.wavefunction()?;
        Ok(normalize(&raw, self.spacing()))
    }

    pub fn norm(&self) -> Result<f64> {
        let raw = self.wavefunction()?;
        Ok(raw.iter().map(|v| v * v).sum::<f64>() * self.spacing())
    }
}

pub fn normalize(psi: &[f64], dx: f64) -> Vec<f64> {
    let norm = (psi.iter().map(|v| v * v).sum::<f64>() * dx).sqrt();
    let peak = psi.iter().copied().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
    let sign = if peak < 0.0 { -1.0 } else { 1.0 };
    if norm > 0.0 {
        psi.iter().map(|v| sign * v / norm).collect()
    } else {
        psi.to_vec()
    }
}

/// Harmonic-oscillator ground state `exp(−x²/2) / π^{1/4}`.
pub fn harmonic_ground_state(x: f64) -> f64 {
    (-0.5 * x * x).exp() / std::f64::consts::PI.powf(0.25)
}

/// `|⟨a, b⟩| Δx` after normalizing both on the grid.
pub fn overlap(a: &[f64], b: &[f64], dx: f64) -> f64 {
    let (a, b) = (normalize(a, dx), normalize(b, dx));
    (a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() * dx).abs()
}

impl PinnProblem for QuantumPinnProblem {
    fn net(&self) -> &Network {
        &self.net
    }

    fn net_mut(&mut self) -> &mut Network {
        &mut self.net
    }

    fn energy_mut(&mut self) -> Option<&mut f64> {
        Some(&mut self.energy)
    }

    fn evaluate(&self, epoch: usize) -> Result<PinnEvaluation> {
        if self.collocation.is_empty() {
            return Err(Error::Config("no collocation points".into()));
        }
        let map = &self.map;
        let dx = self.spacing();
        let e = self.energy;
        let inputs: Vec<f64> = self.collocation.iter().map(|&x| map.apply(x)).collect();
        let (jets, tape) = jet_forward(&self.net, &inputs, map.scale)?;
        let n = inputs.len() as f64;

        let norm: f64 = jets.value.iter().map(|v| v * v).sum::<f64>() * dx;
        let gap = norm - 1.0;
        let penalty = self.penalty_weight * gap * gap;

        let mut up = JetArrays {
            value: vec![0.0; inputs.len()],
            d1: vec![0.0; inputs.len()],
            d2: vec![0.0; inputs.len()],
        };
        let mut phys_loss = 0.0;
        let mut energy_grad = 0.0;
        for (k, &x) in self.collocation.iter().enumerate() {
            let (psi, d2) = (jets.value[k], jets.d2[k]);
            let r = quantum_residual_terms(psi, d2, e, x);
            phys_loss += r * r / n;
            let w = 2.0 * r / n;
            up.value[k] = w * (0.5 * x * x - e) + self.penalty_weight * 2.0 * gap * 2.0 * psi * dx;
            up.d2[k] = -0.5 * w;
            energy_grad -= w * psi;
        }
        let grads = jet_backward(&self.net, &tape, &up)?;
        Ok(PinnEvaluation {
            report: PinnLossReport {
                epoch,
                data_loss: 0.0,
                phys_loss,
                penalty,
                total: 0.0 + phys_loss + penalty,
                energy: Some(e),
            },
            grads,
            energy_grad: Some(energy_grad),
        })
    }
}

/// Full-batch Adam. Reports are taken at epoch 0 and every `log_every`
/// epochs, before that epoch's update.
pub fn train_pinn<P: PinnProblem>(
    problem: &mut P,
    lr: f64,
    max_epochs: usize,
    log_every: usize,
) -> Result<Vec<PinnLossReport>> {
    if max_epochs == 0 || log_every == 0 {
        return Err(Error::Config("max_epochs and log_every must be at least 1".into()));
    }
    if !(lr > 0.0) {
        return Err(Error::Config(format!("learning rate must be positive, got {lr}")));
    }
    let mut adam = Adam::new(AdamConfig::with_lr(lr));
    let mut log = Vec::with_capacity(max_epochs / log_every + 1);
    for epoch in 0..max_epochs {
        let eval = problem.evaluate(epoch).map_err(|e| match e {
            Error::NonFinite { .. } => Error::Training {
                epoch,
                reason: format!("{e}; last report {:?}", log.last()),
            },
            other => other,
        })?;
        if !eval.report.total.is_finite() {
            return Err(Error::Training {
                epoch,
                reason: format!("loss became {}; last finite report {:?}", eval.report.total, log.last()),
            });
        }
        if epoch % log_every == 0 {
            log.push(eval.report);
        }
        let energy_grad = eval.energy_grad;
        let mut groups: Vec<Vec<f64>> = eval.grads.iter().map(|g| g.data().to_vec()).collect();
        if let Some(g) = energy_grad {
            groups.push(vec![g]);
        }
        let grad_refs: Vec<&[f64]> = groups.iter().map(|g| g.as_slice()).collect();

        // Network tensors and the optional energy form one parameter list.
        let mut energy_cell = problem.energy_mut().map(|e| [*e]);
        {
            let net = problem.net_mut();
            let mut params: Vec<&mut [f64]> = net.params_mut().into_iter().map(|p| p.data_mut()).collect();
            if let Some(cell) = energy_cell.as_mut() {
                params.push(cell.as_mut_slice());
            }
            adam.step_slices(&mut params, &grad_refs)?;
        }
        if let (Some(cell), Some(e)) = (energy_cell, problem.energy_mut()) {
            *e = cell[0];
        }
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build, NetworkSpec};
    use crate::nn::{Dense, Layer, Tensor};

    fn zero_net() -> Network {
        let mut net = build(&NetworkSpec::PinnMlp { hidden: vec![4] }, 0).unwrap();
        let n = net.param_count();
        net.set_flat_params(&vec![0.0; n]).unwrap();
        net
    }

    #[test]
    fn zero_net_pendulum_residuals() {
        let net = zero_net();
        let map = InputMap::onto_unit(0.0, 30.0);
        let undriven = PendulumParams {
            t0: 0.0,
            ..Default::default()
        };
        let p = PendulumParams::default();
        for t in [0.0, 1.3, 7.0, 29.0] {
            assert_eq!(pendulum_residual(&net, &map, t, &undriven).unwrap(), 0.0);
            let r = pendulum_residual(&net, &map, t, &p).unwrap();
            assert!((r + 0.3 * t.cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_net_has_zero_quantum_residual() {
        let net = zero_net();
        assert_eq!(quantum_residual(&net, &InputMap::IDENTITY, 0.5, 1.2).unwrap(), 0.0);
    }

    #[test]
    fn report_total_is_sum_of_items() {
        let net = build(&NetworkSpec::default_for(crate::models::ModelKind::PinnMlp), 3).unwrap();
        let q = QuantumPinnProblem::new(net, 5.0, 41, INITIAL_ENERGY).unwrap();
        let r = q.evaluate(0).unwrap().report;
        assert!((r.total - (r.data_loss + r.phys_loss + r.penalty)).abs() <= 1e-15 * r.total.abs());
    }

    #[test]
    fn energy_gradient_matches_finite_difference() {
        let net = build(&NetworkSpec::PinnMlp { hidden: vec![6] }, 9).unwrap();
        let mut q = QuantumPinnProblem::new(net, 5.0, 31, 0.7).unwrap();
        let g = q.evaluate(0).unwrap().energy_grad.unwrap();
        let h = 1e-6;
        q.energy = 0.7 + h;
        let up = q.evaluate(0).unwrap().report.total;
        q.energy = 0.7 - h;
        let down = q.evaluate(0).unwrap().report.total;
        let fd = (up - down) / (2.0 * h);
        assert!((fd - g).abs() < 1e-6 * fd.abs().max(1.0), "{fd} vs {g}");
    }

    #[test]
    fn linear_map_units() {
        let m = InputMap::onto_unit(0.0, 30.0);
        assert_eq!(m.apply(0.0), -1.0);
        assert_eq!(m.apply(30.0), 1.0);
        // y = s, so dy/dt = 2/30.
        let ident = Network::new(vec![Layer::Dense(
            Dense::from_parts(Tensor::new(vec![1, 1], vec![1.0]).unwrap(), Tensor::scalar(0.0)).unwrap(),
        )]);
        let th = forward_dual(&ident, m.jet(12.0)).unwrap();
        assert!((th.d1 - 2.0 / 30.0).abs() < 1e-16);
    }

    #[test]
    fn counts_log_entries() {
        let net = build(&NetworkSpec::PinnMlp { hidden: vec![4] }, 1).unwrap();
        let mut q = QuantumPinnProblem::new(net, 5.0, 21, INITIAL_ENERGY).unwrap();
        let log = train_pinn(&mut q, 1e-3, 1000, 100).unwrap();
        assert_eq!(log.len(), 10);
        assert_eq!(log[9].epoch, 900);
        assert!(train_pinn(&mut q, 1e-3, 0, 100).is_err());
    }

    #[test]
    fn empty_collocation_is_config_error() {
        let net = build(&NetworkSpec::PinnMlp { hidden: vec![4] }, 1).unwrap();
        let mut q = QuantumPinnProblem::new(net, 5.0, 21, INITIAL_ENERGY).unwrap();
        q.collocation.clear();
        assert!(matches!(q.evaluate(0), Err(Error::Config(_))));
    }
}
