//! Pipelines behind the `physml` command-line tool.

pub mod pipeline;
pub mod plot;

pub use pipeline::{
    evaluate_run, gen_quantum_to, pinn_run, reproduce, simulate_to, train_run, Experiment,
    MetricsReport,
};
pub use plot::{plot_data, PlotKind};
