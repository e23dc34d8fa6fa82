//! Plot-ready CSV tables derived from pipeline artifacts.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

use physml_core::io::{read_dataset, read_history, read_pinn_log, read_table, read_trajectory, write_columns};
use physml_core::quantum::make_grid;

use crate::pipeline::{
    DATASET_FILE, HISTORY_FILE, PINN_LOG_FILE, PINN_PREDICTIONS_FILE, PREDICTIONS_FILE,
    TEST_PREDICTIONS_FILE, TRAJECTORY_FILE, WAVEFUNCTION_FILE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    PendulumSim,
    PendulumAnn,
    PendulumPinn,
    PinnLoss,
    QuantumPinnEnergy,
    QuantumPotential,
    QuantumEnergies,
    QuantumLoss,
    QuantumScatter,
    QuantumPinn,
}

impl PlotKind {
    pub const ALL: [PlotKind; 10] = [
        PlotKind::PendulumSim,
        PlotKind::PendulumAnn,
        PlotKind::PendulumPinn,
        PlotKind::PinnLoss,
        PlotKind::QuantumPinnEnergy,
        PlotKind::QuantumPotential,
        PlotKind::QuantumEnergies,
        PlotKind::QuantumLoss,
        PlotKind::QuantumScatter,
        PlotKind::QuantumPinn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PlotKind::PendulumSim => "pendulum-sim",
            PlotKind::PendulumAnn => "pendulum-ann",
            PlotKind::PendulumPinn => "pendulum-pinn",
            PlotKind::PinnLoss => "pinn-loss",
            PlotKind::QuantumPinnEnergy => "quantum-pinn-energy",
            PlotKind::QuantumPotential => "quantum-potential",
            PlotKind::QuantumEnergies => "quantum-energies",
            PlotKind::QuantumLoss => "quantum-loss",
            PlotKind::QuantumScatter => "quantum-scatter",
            PlotKind::QuantumPinn => "quantum-pinn",
        }
    }

    /// Artifact the figure is built from and the command producing it.
    pub fn source(self) -> (&'static str, &'static str) {
        match self {
            PlotKind::PendulumSim => (TRAJECTORY_FILE, "simulate-pendulum"),
            PlotKind::PendulumAnn => (PREDICTIONS_FILE, "evaluate"),
            PlotKind::PendulumPinn => (PINN_PREDICTIONS_FILE, "pinn-train --system pendulum"),
            PlotKind::PinnLoss => (PINN_LOG_FILE, "pinn-train"),
            PlotKind::QuantumPinnEnergy => (PINN_LOG_FILE, "pinn-train --system quantum"),
            PlotKind::QuantumPotential | PlotKind::QuantumEnergies => (DATASET_FILE, "gen-quantum"),
            PlotKind::QuantumLoss => (HISTORY_FILE, "train"),
            PlotKind::QuantumScatter => (TEST_PREDICTIONS_FILE, "evaluate"),
            PlotKind::QuantumPinn => (WAVEFUNCTION_FILE, "pinn-train --system quantum"),
        }
    }
}

impl fmt::Display for PlotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlotKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        PlotKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = PlotKind::ALL.iter().map(|k| k.as_str()).collect();
                anyhow!("unknown plot kind '{s}' (valid kinds: {})", names.join(", "))
            })
    }
}

/// `from` may name the artifact itself or a directory holding it.
fn locate(kind: PlotKind, from: &Path) -> Result<PathBuf> {
    let (file, command) = kind.source();
    let path = if from.is_dir() { from.join(file) } else { from.to_path_buf() };
    if !path.is_file() {
        bail!(
            "{} not found; produce it with `physml {command}`",
            path.display()
        );
    }
    Ok(path)
}

fn copy_columns(src: &Path, out: &Path, names: &[&str]) -> Result<()> {
    let table = read_table(src)?;
    let cols = names
        .iter()
        .map(|n| {
            table
                .column(n)
                .ok_or_else(|| anyhow!("{} has no column '{n}'", src.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(&str, &[f64])> = names.iter().copied().zip(cols.iter().map(Vec::as_slice)).collect();
    write_columns(out, &pairs)?;
    Ok(())
}

/// Writes the table for `kind` to `out` and returns the source artifact.
pub fn plot_data(kind: PlotKind, from: &Path, out: &Path) -> Result<PathBuf> {
    let src = locate(kind, from)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    match kind {
        PlotKind::PendulumSim => {
            let traj = read_trajectory(&src)?;
            write_columns(out, &[("t", &traj.t), ("theta", &traj.theta), ("omega", &traj.omega)])?;
        }
        PlotKind::PendulumAnn | PlotKind::PendulumPinn => {
            copy_columns(&src, out, &["t", "theta_true", "theta_pred"])?;
        }
        PlotKind::PinnLoss => {
            let log = read_pinn_log(&src)?;
            let epoch: Vec<f64> = log.iter().map(|r| r.epoch as f64).collect();
            let phys: Vec<f64> = log.iter().map(|r| r.phys_loss).collect();
            let total: Vec<f64> = log.iter().map(|r| r.total).collect();
            write_columns(out, &[("epoch", &epoch), ("phys_loss", &phys), ("total", &total)])?;
        }
        PlotKind::QuantumPinnEnergy => {
            let log = read_pinn_log(&src)?;
            let epoch: Vec<f64> = log.iter().map(|r| r.epoch as f64).collect();
            let energy = log
                .iter()
                .map(|r| r.energy)
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| anyhow!("{} has no energy column; it is not a quantum PINN log", src.display()))?;
            write_columns(out, &[("epoch", &epoch), ("energy", &energy)])?;
        }
        PlotKind::QuantumPotential => {
            let ds = read_dataset(&src)?;
            let grid = make_grid(ds.x_max, ds.n_points)?;
            let (first, last) = (&ds.rows[0], &ds.rows[ds.rows.len() - 1]);
            write_columns(
                out,
                &[("x", &grid.x), ("V_first", &first.potential), ("V_last", &last.potential)],
            )?;
        }
        PlotKind::QuantumEnergies => {
            let ds = read_dataset(&src)?;
            let lambda: Vec<f64> = ds.rows.iter().map(|r| r.lambda).collect();
            let e0: Vec<f64> = ds.rows.iter().map(|r| r.energies[0]).collect();
            write_columns(out, &[("lambda", &lambda), ("E0", &e0)])?;
        }
        PlotKind::QuantumLoss => {
            let h = read_history(&src)?;
            let epoch: Vec<f64> = (1..=h.train_loss.len()).map(|e| e as f64).collect();
            write_columns(
                out,
                &[("epoch", &epoch), ("train_loss", &h.train_loss), ("val_loss", &h.val_loss)],
            )?;
        }
        PlotKind::QuantumScatter => copy_columns(&src, out, &["E_true", "E_pred"])?,
        PlotKind::QuantumPinn => copy_columns(&src, out, &["x", "psi_normalized", "psi_exact"])?,
    }
    Ok(src)
}
