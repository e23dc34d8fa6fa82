use physml_core::models::{build, ModelKind, NetworkSpec};
use physml_core::nn::{Dense, Layer, Network, Tensor};
use physml_core::pinn::{
    harmonic_ground_state, linspace, overlap, pendulum_residual, quantum_residual, train_pinn,
    InputMap, PendulumPinnProblem, PinnProblem, QuantumPinnProblem,
};
use physml_core::{simulate, PendulumParams, PendulumState};

/// θ(t) = c·tanh(a t + b) as a two-layer network.
fn tanh_net(a: f64, b: f64, c: f64) -> Network {
    let t = |v: f64| Tensor::new(vec![1, 1], vec![v]).unwrap();
    Network::new(vec![
        Layer::Dense(Dense::from_parts(t(a), Tensor::new(vec![1], vec![b]).unwrap()).unwrap()),
        Layer::Tanh,
        Layer::Dense(Dense::from_parts(t(c), Tensor::new(vec![1], vec![0.0]).unwrap()).unwrap()),
    ])
}

/// Value and first two derivatives of c·tanh(a t + b).
fn tanh_jet(a: f64, b: f64, c: f64, t: f64) -> (f64, f64, f64) {
    let s = (a * t + b).tanh();
    let sech2 = 1.0 - s * s;
    (c * s, c * a * sech2, -2.0 * c * a * a * s * sech2)
}

#[test]
fn pendulum_residual_matches_symbolic_form() {
    let p = PendulumParams::default();
    let (a, b, c) = (0.8, -0.3, 0.25);
    let net = tanh_net(a, b, c);
    for t in [0.0, 0.7, 2.5, 11.0] {
        let (th, d1, d2) = tanh_jet(a, b, c, t);
        let want = p.m * p.l * p.l * d2 + p.b * d1 + p.k * th + p.m * p.g * p.l * th.sin()
            - p.t0 * (p.omega_ext * t).cos()
            - p.c * d1 * d1;
        let got = pendulum_residual(&net, &InputMap::IDENTITY, t, &p).unwrap();
        assert!((got - want).abs() < 1e-12 * want.abs().max(1.0), "t = {t}: {got} vs {want}");
    }
}

#[test]
fn zero_network_leaves_only_the_drive() {
    let p = PendulumParams::default();
    let net = tanh_net(0.0, 0.0, 0.0);
    for t in [0.0, 1.0, 3.3] {
        let r = pendulum_residual(&net, &InputMap::IDENTITY, t, &p).unwrap();
        assert!((r + 0.3 * t.cos()).abs() < 1e-15);
    }
}

#[test]
fn quantum_residual_matches_symbolic_form() {
    let (a, b, c) = (1.3, 0.2, -0.6);
    let net = tanh_net(a, b, c);
    for x in [-2.0, 0.0, 0.5, 3.0] {
        let (psi, _, d2) = tanh_jet(a, b, c, x);
        let want = -0.5 * d2 + 0.5 * x * x * psi - 0.55 * psi;
        let got = quantum_residual(&net, &InputMap::IDENTITY, 0.55, x).unwrap();
        assert!((got - want).abs() < 1e-13, "x = {x}: {got} vs {want}");
    }
}

#[test]
fn logged_losses_decompose_exactly() {
    let traj = simulate(&PendulumParams::default(), PendulumState::default(), 5.0, 0.05).unwrap();
    let net = build(&NetworkSpec::default_for(ModelKind::PinnMlp), 1).unwrap();
    let mut pend = PendulumPinnProblem::from_trajectory(net.clone(), PendulumParams::default(), &traj, 40).unwrap();
    let mut quant = QuantumPinnProblem::new(net, 5.0, 41, 0.51).unwrap();
    let logs = [
        train_pinn(&mut pend, 1e-3, 30, 5).unwrap(),
        train_pinn(&mut quant, 1e-3, 30, 5).unwrap(),
    ];
    for log in &logs {
        assert_eq!(log.len(), 6);
        for r in log {
            assert!((r.total - (r.data_loss + r.phys_loss + r.penalty)).abs() <= 1e-15 * r.total.max(1.0));
        }
    }
    assert!(logs[0].iter().all(|r| r.energy.is_none() && r.penalty == 0.0));
    assert!(logs[1].iter().all(|r| r.energy.is_some() && r.data_loss == 0.0));
}

#[test]
fn training_trace_is_deterministic() {
    let run = || {
        let net = build(&NetworkSpec::default_for(ModelKind::PinnMlp), 4).unwrap();
        let mut q = QuantumPinnProblem::new(net, 5.0, 51, 0.51).unwrap();
        let log = train_pinn(&mut q, 1e-3, 50, 10).unwrap();
        (log, q.energy, q.net.flat_params())
    };
    assert_eq!(run(), run());
}

#[test]
fn energy_gradient_points_towards_rayleigh_quotient() {
    // A fixed ψ makes the loss quadratic in E with its minimum at
    // Σψ·Hψ / Σψ²; the sign of ∂L/∂E must agree.
    let net = build(&NetworkSpec::default_for(ModelKind::PinnMlp), 0).unwrap();
    let q = QuantumPinnProblem::new(net, 5.0, 101, 0.51).unwrap();
    let xs = linspace(-5.0, 5.0, 101);
    let r_at = |e: f64| -> Vec<f64> {
        xs.iter()
            .map(|&x| quantum_residual(&q.net, &q.map, e, x).unwrap())
            .collect()
    };
    let psi = q.wavefunction().unwrap();
    let r0 = r_at(0.0);
    // r(E) = Hψ − Eψ, so r(0) = Hψ.
    let rayleigh = r0.iter().zip(&psi).map(|(h, p)| h * p).sum::<f64>() / psi.iter().map(|p| p * p).sum::<f64>();
    let grad = q.evaluate(0).unwrap().energy_grad.unwrap();
    assert_eq!(grad > 0.0, q.energy > rayleigh, "grad {grad}, E {}, rayleigh {rayleigh}", q.energy);
}

#[test]
fn analytic_ground_state_overlap_is_one() {
    let xs = linspace(-5.0, 5.0, 201);
    let psi: Vec<f64> = xs.iter().map(|&x| harmonic_ground_state(x)).collect();
    let scaled: Vec<f64> = psi.iter().map(|v| -3.0 * v).collect();
    assert!((overlap(&psi, &scaled, 0.05) - 1.0).abs() < 1e-12);
}
