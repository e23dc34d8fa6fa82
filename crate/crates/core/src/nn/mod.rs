//! Minimal neural-network substrate: tensors, layers with reverse-mode
//! gradients, Adam, and forward-mode input derivatives.

pub mod adam;
pub mod dual;
pub mod jet;
pub mod layers;
pub mod network;
pub mod tensor;

pub use adam::{Adam, AdamConfig};
pub use dual::{forward_dual, input_derivatives, Dual2};
pub use jet::{jet_backward, jet_forward, JetArrays, JetTape};
pub use layers::{Conv1d, Dense, Layer, Lstm, Padding};
pub use network::{mse_loss, Gradients, Network, Tape};
pub use tensor::Tensor;
