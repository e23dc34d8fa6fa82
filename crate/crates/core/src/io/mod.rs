//! Persistence: CSV readers/writers, deterministic splits, checkpoints and
//! run configuration files.

pub mod checkpoint;
pub mod config;
pub mod csv_io;
pub mod split;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use config::{PendulumConfig, PinnConfig, QuantumConfig, RunConfig, System, TrainSection};
pub use csv_io::{
    dataset_meta_path, read_dataset, read_history, read_pinn_log, read_table, read_trajectory,
    write_columns, write_dataset, write_history, write_pinn_log, write_trajectory, NumericTable,
};
pub use split::{split_indices, Splits};
