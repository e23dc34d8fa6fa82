//! Multi-force pendulum: right-hand side, per-term torques and a fixed-step
//! RK4 integrator.
//!
//! The equation of motion is
//!
//! ```text
//! m l² θ'' + b θ' + k θ + m g l sin θ = T0 cos(ω_ext t) + c θ'²
//! ```
//!
//! integrated as the first-order system `θ' = ω`, `ω' = Στ / (m l²)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Any |θ| or |ω| above this aborts a simulation.
pub const BLOW_UP_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PendulumParams {
    /// Bob mass (kg).
    pub m: f64,
    /// Rod length (m).
    pub l: f64,
    /// Damping coefficient (kg m²/s).
    pub b: f64,
    /// Torsional spring constant (N m/rad).
    pub k: f64,
    /// Gravitational acceleration (m/s²).
    pub g: f64,
    /// External torque amplitude (N m).
    pub t0: f64,
    /// External torque angular frequency (rad/s).
    pub omega_ext: f64,
    /// Nonlinear air-resistance coefficient (kg m²/rad²).
    pub c: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        Self {
            m: 1.0,
            l: 1.0,
            b: 0.05,
            k: 0.5,
            g: 9.81,
            t0: 0.3,
            omega_ext: 1.0,
            c: 0.02,
        }
    }
}

impl PendulumParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.m,
            self.l,
            self.b,
            self.k,
            self.g,
            self.t0,
            self.omega_ext,
            self.c,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("pendulum parameters must be finite".into()));
        }
        if self.m <= 0.0 || self.l <= 0.0 {
            return Err(Error::Domain(format!(
                "mass and length must be positive (m = {}, l = {})",
                self.m, self.l
            )));
        }
        Ok(())
    }

    /// Moment of inertia `m l²`.
    pub fn inertia(&self) -> f64 {
        self.m * self.l * self.l
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumState {
    pub theta: f64,
    pub omega: f64,
}

impl PendulumState {
    pub fn new(theta: f64, omega: f64) -> Self {
        Self { theta, omega }
    }

    fn is_finite(&self) -> bool {
        self.theta.is_finite() && self.omega.is_finite()
    }
}

impl Default for PendulumState {
    fn default() -> Self {
        Self::new(0.1, 0.0)
    }
}

/// Torques acting on the bob, with every term except inertia moved to the
/// right-hand side. Their sum equals `m l² dω/dt`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TorqueBreakdown {
    pub gravity: f64,
    pub spring: f64,
    pub damping: f64,
    pub external: f64,
    pub air: f64,
}

impl TorqueBreakdown {
    pub fn total(&self) -> f64 {
        self.gravity + self.spring + self.damping + self.external + self.air
    }

    pub fn as_array(&self) -> [f64; 5] {
        [
            self.gravity,
            self.spring,
            self.damping,
            self.external,
            self.air,
        ]
    }
}

/// Uniformly sampled solution with the torque breakdown at every sample.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub theta: Vec<f64>,
    pub omega: Vec<f64>,
    pub torques: Vec<TorqueBreakdown>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn state(&self, i: usize) -> PendulumState {
        PendulumState::new(self.theta[i], self.omega[i])
    }
}

fn check_inputs(t: f64, state: &PendulumState) -> Result<()> {
    if !t.is_finite() || !state.is_finite() {
        return Err(Error::Domain(format!(
            "non-finite input: t = {t}, theta = {}, omega = {}",
            state.theta, state.omega
        )));
    }
    Ok(())
}

pub fn torque_components(
    t: f64,
    state: &PendulumState,
    p: &PendulumParams,
) -> Result<TorqueBreakdown> {
    p.validate()?;
    check_inputs(t, state)?;
    Ok(torques_unchecked(t, state, p))
}

fn torques_unchecked(t: f64, s: &PendulumState, p: &PendulumParams) -> TorqueBreakdown {
    TorqueBreakdown {
        gravity: -p.m * p.g * p.l * s.theta.sin(),
        spring: -p.k * s.theta,
        damping: -p.b * s.omega,
        external: p.t0 * (p.omega_ext * t).cos(),
        air: p.c * s.omega * s.omega,
    }
}

fn rhs_unchecked(t: f64, s: &PendulumState, p: &PendulumParams) -> (f64, f64) {
    (s.omega, torques_unchecked(t, s, p).total() / p.inertia())
}

/// Returns `(dθ/dt, dω/dt)`.
pub fn pendulum_rhs(t: f64, state: &PendulumState, p: &PendulumParams) -> Result<(f64, f64)> {
    p.validate()?;
    check_inputs(t, state)?;
    Ok(rhs_unchecked(t, state, p))
}

/// One classical RK4 step for an arbitrary autonomous-in-form system
/// `y' = f(t, y)` with a two-component state.
pub fn rk4_step_with<F>(f: F, t: f64, y: [f64; 2], dt: f64) -> [f64; 2]
where
    F: Fn(f64, [f64; 2]) -> [f64; 2],
{
    let axpy = |a: [f64; 2], s: f64, k: [f64; 2]| [a[0] + s * k[0], a[1] + s * k[1]];
    let scale = |k: [f64; 2]| [dt * k[0], dt * k[1]];

    let k1 = scale(f(t, y));
    let k2 = scale(f(t + 0.5 * dt, axpy(y, 0.5, k1)));
    let k3 = scale(f(t + 0.5 * dt, axpy(y, 0.5, k2)));
    let k4 = scale(f(t + dt, axpy(y, 1.0, k3)));
    [
        y[0] + (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]) / 6.0,
        y[1] + (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]) / 6.0,
    ]
}

pub fn rk4_step(
    state: &PendulumState,
    t: f64,
    dt: f64,
    p: &PendulumParams,
) -> Result<PendulumState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Config(format!("time step must be positive, got {dt}")));
    }
    p.validate()?;
    check_inputs(t, state)?;
    step_unchecked(state, t, dt, p)
}

fn step_unchecked(
    state: &PendulumState,
    t: f64,
    dt: f64,
    p: &PendulumParams,
) -> Result<PendulumState> {
    let f = |t: f64, y: [f64; 2]| {
        let (a, b) = rhs_unchecked(t, &PendulumState::new(y[0], y[1]), p);
        [a, b]
    };
    let [theta, omega] = rk4_step_with(f, t, [state.theta, state.omega], dt);
    let next = PendulumState::new(theta, omega);
    if !next.is_finite() {
        return Err(Error::Integration { t });
    }
    Ok(next)
}

/// Number of steps for `t_end / dt`, tolerating representation error in the
/// quotient (30 / 0.01 is not exactly 3000 in binary).
pub fn step_count(t_end: f64, dt: f64) -> Result<usize> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::Config(format!("t_end must be positive, got {t_end}")));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Config(format!("time step must be positive, got {dt}")));
    }
    let ratio = t_end / dt;
    let n = (ratio + 1e-9 * ratio.max(1.0)).floor();
    if n < 1.0 || n > u32::MAX as f64 {
        return Err(Error::Config(format!(
            "t_end / dt = {ratio} does not give a usable step count"
        )));
    }
    Ok(n as usize)
}

/// Integrates from `t = 0` to `t_end`, returning `floor(t_end/dt) + 1` samples.
pub fn simulate(
    p: &PendulumParams,
    init: PendulumState,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    p.validate()?;
    check_inputs(0.0, &init)?;
    let steps = step_count(t_end, dt)?;

    let mut traj = Trajectory {
        t: Vec::with_capacity(steps + 1),
        theta: Vec::with_capacity(steps + 1),
        omega: Vec::with_capacity(steps + 1),
        torques: Vec::with_capacity(steps + 1),
    };
    let mut state = init;
    for n in 0..=steps {
        // t_n = n dt rather than accumulated, keeping the grid exactly uniform.
        let t = n as f64 * dt;
        traj.t.push(t);
        traj.theta.push(state.theta);
        traj.omega.push(state.omega);
        traj.torques.push(torques_unchecked(t, &state, p));
        if n == steps {
            break;
        }
        state = step_unchecked(&state, t, dt, p)?;
        if state.theta.abs() > BLOW_UP_LIMIT || state.omega.abs() > BLOW_UP_LIMIT {
            return Err(Error::BlowUp {
                step: n + 1,
                t: t + dt,
                limit: BLOW_UP_LIMIT,
            });
        }
    }
    Ok(traj)
}

/// Total mechanical energy `½ m l² ω² + m g l (1 − cos θ)` (spring excluded).
pub fn mechanical_energy(state: &PendulumState, p: &PendulumParams) -> f64 {
    0.5 * p.inertia() * state.omega * state.omega + p.m * p.g * p.l * (1.0 - state.theta.cos())
}
