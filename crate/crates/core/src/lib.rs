//! Pendulum and anharmonic-oscillator data generation, small neural networks
//! with a hand-written autodiff, and physics-informed training.

pub mod error;
pub mod io;
pub mod models;
pub mod nn;
pub mod pendulum;
pub mod pinn;
pub mod quantum;

pub use error::{Error, Result};
pub use models::{build, ModelKind, NetworkSpec, TrainConfig};
pub use nn::{Network, Tensor};
pub use pendulum::{simulate, PendulumParams, PendulumState, Trajectory};
pub use quantum::{PotentialSpec, QuantumDataset, Spectrum};
