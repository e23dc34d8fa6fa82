use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Tensor;
use crate::pendulum::Trajectory;
use crate::quantum::QuantumDataset;

/// Input columns of the pendulum regression, in order. The target is θ.
///
/// The spring torque is `−kθ`, so θ is algebraically recoverable from the
/// same-timestep features; the fit is a consistency check, not a forecast.
pub const PENDULUM_FEATURES: [&str; 7] = [
    "t",
    "omega",
    "tau_gravity",
    "tau_spring",
    "tau_damping",
    "tau_external",
    "tau_air",
];

/// Row-oriented supervised table in original units.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl FeatureTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> FeatureTable {
        FeatureTable {
            columns: self.columns.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            targets: idx.iter().map(|&i| self.targets[i]).collect(),
        }
    }
}

pub fn make_pendulum_features(traj: &Trajectory) -> Result<FeatureTable> {
    if traj.is_empty() {
        return Err(Error::Config("trajectory has no samples".into()));
    }
    let rows = (0..traj.len())
        .map(|i| {
            let tq = &traj.torques[i];
            vec![
                traj.t[i],
                traj.omega[i],
                tq.gravity,
                tq.spring,
                tq.damping,
                tq.external,
                tq.air,
            ]
        })
        .collect();
    Ok(FeatureTable {
        columns: PENDULUM_FEATURES.iter().map(|s| s.to_string()).collect(),
        rows,
        targets: traj.theta.clone(),
    })
}

/// Potential arrays as inputs, ground-state energy as target.
pub fn quantum_table(ds: &QuantumDataset) -> Result<FeatureTable> {
    if ds.is_empty() {
        return Err(Error::Config("quantum dataset has no rows".into()));
    }
    Ok(FeatureTable {
        columns: (0..ds.n_points).map(|i| format!("V{i}")).collect(),
        rows: ds.rows.iter().map(|r| r.potential.clone()).collect(),
        targets: ds.rows.iter().map(|r| r.energies[0]).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    /// Independent mean/std per input column.
    PerColumn,
    /// One mean/std over all input columns jointly (keeps a sampled
    /// function's shape intact).
    Global,
}

/// z-score transform fitted on a training split; population std.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub scaling: Scaling,
    pub input_mean: Vec<f64>,
    pub input_std: Vec<f64>,
    pub target_mean: f64,
    pub target_std: f64,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl Standardizer {
    pub fn fit(train: &FeatureTable, scaling: Scaling) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Config("cannot fit a standardizer on an empty split".into()));
        }
        let width = train.columns.len();
        let (input_mean, input_std) = match scaling {
            Scaling::PerColumn => {
                let mut means = Vec::with_capacity(width);
                let mut stds = Vec::with_capacity(width);
                for c in 0..width {
                    let (m, s) = mean_std(train.rows.iter().map(|r| r[c]));
                    if !(s > 0.0) {
                        return Err(Error::Config(format!(
                            "column '{}' has zero variance in the training split",
                            train.columns[c]
                        )));
                    }
                    means.push(m);
                    stds.push(s);
                }
                (means, stds)
            }
            Scaling::Global => {
                let (m, s) = mean_std(train.rows.iter().flat_map(|r| r.iter().copied()));
                if !(s > 0.0) {
                    return Err(Error::Config("inputs have zero variance in the training split".into()));
                }
                (vec![m; width], vec![s; width])
            }
        };
        let (target_mean, target_std) = mean_std(train.targets.iter().copied());
        if !(target_std > 0.0) {
            return Err(Error::Config("target has zero variance in the training split".into()));
        }
        Ok(Self {
            scaling,
            input_mean,
            input_std,
            target_mean,
            target_std,
        })
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.input_mean.iter().zip(&self.input_std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn inverse_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.input_mean.iter().zip(&self.input_std))
            .map(|(z, (m, s))| z * s + m)
            .collect()
    }

    pub fn apply_target(&self, y: f64) -> f64 {
        (y - self.target_mean) / self.target_std
    }

    pub fn inverse_target(&self, z: f64) -> f64 {
        z * self.target_std + self.target_mean
    }

    /// Standardized tensors, with each row reshaped to `sample_shape`.
    pub fn transform(&self, table: &FeatureTable, sample_shape: &[usize]) -> Result<Supervised> {
        let width: usize = sample_shape.iter().product();
        if width != table.columns.len() || width != self.input_mean.len() {
            return Err(Error::Shape(format!(
                "sample shape {sample_shape:?} does not fit {} columns",
                table.columns.len()
            )));
        }
        let mut data = Vec::with_capacity(table.len() * width);
        for row in &table.rows {
            data.extend(self.apply_row(row));
        }
        let mut shape = vec![table.len()];
        shape.extend_from_slice(sample_shape);
        Ok(Supervised {
            inputs: Tensor::new(shape, data)?,
            targets: table.targets.iter().map(|&y| self.apply_target(y)).collect(),
        })
    }
}

/// Model-ready inputs `[n, ...]` and scalar targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Supervised {
    pub inputs: Tensor,
    pub targets: Vec<f64>,
}

impl Supervised {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> Supervised {
        Supervised {
            inputs: self.inputs.select_rows(idx),
            targets: idx.iter().map(|&i| self.targets[i]).collect(),
        }
    }
}
