//! Plain-text CSV for trajectories, quantum datasets, training histories and
//! PINN logs. Floats are written with 17 significant digits, which
//! round-trips every finite `f64`.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::History;
use crate::pendulum::{TorqueBreakdown, Trajectory};
use crate::pinn::PinnLossReport;
use crate::quantum::{PotentialSpec, QuantumDataset, QuantumRow};

pub const TRAJECTORY_HEADER: [&str; 8] = [
    "t",
    "theta",
    "omega",
    "tau_gravity",
    "tau_spring",
    "tau_damping",
    "tau_external",
    "tau_air",
];

pub const HISTORY_HEADER: [&str; 3] = ["epoch", "train_loss", "val_loss"];

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn format_err(path: &Path, line: u64, msg: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

/// Writes a header and numeric rows. The file is written to a sibling
/// temporary path and renamed into place.
pub fn write_table<I, R>(path: &Path, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[String]>,
{
    let tmp = tmp_path(path);
    {
        let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        let mut w = csv::WriterBuilder::new().from_writer(file);
        let io_err = |e: csv::Error| format_err(path, 0, e.to_string());
        w.write_record(header).map_err(io_err)?;
        for row in rows {
            w.write_record(row.as_ref()).map_err(io_err)?;
        }
        w.flush().map_err(|e| Error::io(&tmp, e))?;
    }
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub(crate) fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".tmp");
    path.with_file_name(name)
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    let tmp = tmp_path(path);
    {
        let mut f = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(text.as_bytes()).map_err(|e| Error::io(&tmp, e))?;
    }
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// A parsed numeric CSV: header plus rows of equal width.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl NumericTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn read_table(path: &Path) -> Result<NumericTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(file);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| format_err(path, 1, e.to_string()))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if header.is_empty() || header.iter().all(|h| h.is_empty()) {
        return Err(format_err(path, 1, "file is empty or has no header"));
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            format_err(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let row = rec
            .iter()
            .enumerate()
            .map(|(i, field)| {
                field.trim().parse::<f64>().map_err(|_| {
                    format_err(
                        path,
                        line,
                        format!("column '{}': cannot parse '{field}' as a number", header[i]),
                    )
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(NumericTable { header, rows })
}

fn require_columns(path: &Path, table: &NumericTable, names: &[&str]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|n| {
            table
                .column_index(n)
                .ok_or_else(|| format_err(path, 1, format!("missing column '{n}'")))
        })
        .collect()
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let header: Vec<String> = TRAJECTORY_HEADER.iter().map(|s| s.to_string()).collect();
    let rows = (0..traj.len()).map(|i| {
        let tq = traj.torques[i].as_array();
        let mut r = vec![fmt_f64(traj.t[i]), fmt_f64(traj.theta[i]), fmt_f64(traj.omega[i])];
        r.extend(tq.iter().map(|v| fmt_f64(*v)));
        r
    });
    write_table(path, &header, rows)
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let table = read_table(path)?;
    let idx = require_columns(path, &table, &TRAJECTORY_HEADER)?;
    let mut traj = Trajectory::default();
    for r in &table.rows {
        traj.t.push(r[idx[0]]);
        traj.theta.push(r[idx[1]]);
        traj.omega.push(r[idx[2]]);
        traj.torques.push(TorqueBreakdown {
            gravity: r[idx[3]],
            spring: r[idx[4]],
            damping: r[idx[5]],
            external: r[idx[6]],
            air: r[idx[7]],
        });
    }
    Ok(traj)
}

/// Grid and potential parameters stored next to a dataset CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub x_max: f64,
    pub n_points: usize,
    pub levels: usize,
    pub spec: PotentialSpec,
}

pub fn dataset_meta_path(csv_path: &Path) -> PathBuf {
    let mut name = csv_path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".meta.toml");
    csv_path.with_file_name(name)
}

pub fn dataset_header(levels: usize, n_points: usize) -> Vec<String> {
    std::iter::once("lambda".to_string())
        .chain((0..levels).map(|i| format!("E{i}")))
        .chain((0..n_points).map(|i| format!("V{i}")))
        .collect()
}

/// Writes the CSV (`lambda,E0..,V0..`) and its `.meta.toml` provenance file.
pub fn write_dataset(path: &Path, ds: &QuantumDataset) -> Result<()> {
    ds.validate()?;
    let header = dataset_header(ds.levels(), ds.n_points);
    let rows = ds.rows.iter().map(|r| {
        std::iter::once(r.lambda)
            .chain(r.energies.iter().copied())
            .chain(r.potential.iter().copied())
            .map(fmt_f64)
            .collect::<Vec<_>>()
    });
    write_table(path, &header, rows)?;
    let meta = DatasetMeta {
        x_max: ds.x_max,
        n_points: ds.n_points,
        levels: ds.levels(),
        spec: ds.spec,
    };
    let text = toml::to_string(&meta).map_err(|e| Error::Config(e.to_string()))?;
    write_text(&dataset_meta_path(path), &text)
}

pub fn read_dataset(path: &Path) -> Result<QuantumDataset> {
    let meta_path = dataset_meta_path(path);
    let meta_text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: DatasetMeta =
        toml::from_str(&meta_text).map_err(|e| format_err(&meta_path, 0, e.to_string()))?;
    let table = read_table(path)?;
    let expected = dataset_header(meta.levels, meta.n_points);
    if let Some(missing) = expected.iter().find(|h| table.column_index(h).is_none()) {
        return Err(format_err(path, 1, format!("missing column '{missing}'")));
    }
    if table.header != expected {
        return Err(format_err(path, 1, "columns are not in lambda,E*,V* order"));
    }
    if table.rows.is_empty() {
        return Err(format_err(path, 2, "dataset has no rows"));
    }
    let k = meta.levels;
    let ds = QuantumDataset {
        rows: table
            .rows
            .into_iter()
            .map(|r| QuantumRow {
                lambda: r[0],
                energies: r[1..1 + k].to_vec(),
                potential: r[1 + k..].to_vec(),
            })
            .collect(),
        x_max: meta.x_max,
        n_points: meta.n_points,
        spec: meta.spec,
    };
    ds.validate()?;
    Ok(ds)
}

pub fn write_history(path: &Path, h: &History) -> Result<()> {
    let header: Vec<String> = HISTORY_HEADER.iter().map(|s| s.to_string()).collect();
    let rows = h
        .train_loss
        .iter()
        .zip(&h.val_loss)
        .enumerate()
        .map(|(i, (t, v))| vec![(i + 1).to_string(), fmt_f64(*t), fmt_f64(*v)]);
    write_table(path, &header, rows)
}

pub fn read_history(path: &Path) -> Result<History> {
    let table = read_table(path)?;
    let idx = require_columns(path, &table, &HISTORY_HEADER)?;
    let mut h = History::default();
    for r in &table.rows {
        h.train_loss.push(r[idx[1]]);
        h.val_loss.push(r[idx[2]]);
    }
    h.stopped_epoch = h.train_loss.len();
    h.best_epoch = h
        .val_loss
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i + 1, v) } else { (bi, bv) })
        .0;
    Ok(h)
}

pub fn pinn_log_header(with_energy: bool) -> Vec<String> {
    let mut h: Vec<String> = ["epoch", "data_loss", "phys_loss", "penalty", "total"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if with_energy {
        h.push("energy".into());
    }
    h
}

pub fn write_pinn_log(path: &Path, log: &[PinnLossReport]) -> Result<()> {
    let with_energy = log.first().is_some_and(|r| r.energy.is_some());
    let rows = log.iter().map(|r| {
        let mut row = vec![
            r.epoch.to_string(),
            fmt_f64(r.data_loss),
            fmt_f64(r.phys_loss),
            fmt_f64(r.penalty),
            fmt_f64(r.total),
        ];
        if with_energy {
            row.push(fmt_f64(r.energy.unwrap_or(f64::NAN)));
        }
        row
    });
    write_table(path, &pinn_log_header(with_energy), rows)
}

pub fn read_pinn_log(path: &Path) -> Result<Vec<PinnLossReport>> {
    let table = read_table(path)?;
    let with_energy = table.column_index("energy").is_some();
    let idx = require_columns(path, &table, &["epoch", "data_loss", "phys_loss", "penalty", "total"])?;
    Ok(table
        .rows
        .iter()
        .map(|r| PinnLossReport {
            epoch: r[idx[0]] as usize,
            data_loss: r[idx[1]],
            phys_loss: r[idx[2]],
            penalty: r[idx[3]],
            total: r[idx[4]],
            energy: with_energy.then(|| r[table.column_index("energy").unwrap()]),
        })
        .collect())
}

/// Writes named numeric columns of equal length.
pub fn write_columns(path: &Path, columns: &[(&str, &[f64])]) -> Result<()> {
    let n = columns.first().map_or(0, |c| c.1.len());
    if columns.iter().any(|c| c.1.len() != n) {
        return Err(Error::Shape("columns have different lengths".into()));
    }
    let header: Vec<String> = columns.iter().map(|c| c.0.to_string()).collect();
    let rows = (0..n).map(|i| columns.iter().map(|c| fmt_f64(c.1[i])).collect::<Vec<_>>());
    write_table(path, &header, rows)
}
