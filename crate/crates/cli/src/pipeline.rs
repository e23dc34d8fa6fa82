//! Generation, training, evaluation and PINN stages, and the one-shot
//! experiment chains built from them.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use serde_json::{json, Map, Value};

use physml_core::io::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
use physml_core::io::{
    read_dataset, read_trajectory, split_indices, write_columns, write_dataset, write_history,
    write_pinn_log, write_trajectory, RunConfig, Splits, System,
};
use physml_core::models::{
    self, make_pendulum_features, predict, quantum_table, FeatureTable, History, Metrics,
    ModelKind, NetworkSpec, Scaling, Standardizer,
};
use physml_core::nn::{AdamConfig, Network};
use physml_core::pinn::{
    harmonic_ground_state, overlap, train_pinn, PendulumPinnProblem, PinnLossReport, PinnProblem,
    QuantumPinnProblem,
};
use physml_core::quantum::{gen_quantum_dataset, lambda_sweep, make_grid, QuantumDataset};
use physml_core::{simulate, Trajectory};

pub const CONFIG_FILE: &str = "config.toml";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const DATASET_FILE: &str = "quantum_dataset.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const HISTORY_FILE: &str = "history.csv";
pub const METRICS_TXT: &str = "metrics.txt";
pub const METRICS_JSON: &str = "metrics.json";
pub const TEST_PREDICTIONS_FILE: &str = "test_predictions.csv";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const PINN_LOG_FILE: &str = "pinn_log.csv";
pub const PINN_PREDICTIONS_FILE: &str = "pinn_predictions.csv";
pub const WAVEFUNCTION_FILE: &str = "wavefunction.csv";

/// Path of the resolved-config copy written next to a standalone artifact.
pub fn config_sidecar(artifact: &Path) -> PathBuf {
    let mut name = artifact.as_os_str().to_owned();
    name.push(".config.toml");
    PathBuf::from(name)
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

/// Relative data paths are looked up in the run directory first.
fn resolve_data(cfg: &RunConfig, run_dir: &Path) -> Result<PathBuf> {
    let data = cfg
        .data
        .as_ref()
        .ok_or_else(|| anyhow!("no dataset given; pass --data or set `data` in the config"))?;
    let local = run_dir.join(data);
    if data.is_relative() && local.exists() {
        return Ok(local);
    }
    Ok(data.clone())
}

pub fn simulate_to(cfg: &RunConfig, out: &Path) -> Result<Trajectory> {
    cfg.validate()?;
    let traj = simulate(
        &cfg.pendulum.params(),
        cfg.pendulum.initial_state(),
        cfg.pendulum.t_end,
        cfg.pendulum.dt,
    )?;
    ensure_parent(out)?;
    write_trajectory(out, &traj)?;
    cfg.save(&config_sidecar(out))?;
    Ok(traj)
}

pub fn gen_quantum_to(cfg: &RunConfig, out: &Path) -> Result<QuantumDataset> {
    cfg.validate()?;
    let q = &cfg.quantum;
    let grid = make_grid(q.x_max, q.n_points)?;
    let lambdas = lambda_sweep(q.lambda_count, q.lambda_max);
    let ds = gen_quantum_dataset(&q.base_spec(), &lambdas, &grid, q.levels)?;
    ensure_parent(out)?;
    write_dataset(out, &ds)?;
    cfg.save(&config_sidecar(out))?;
    Ok(ds)
}

struct Loaded {
    table: FeatureTable,
    scaling: Scaling,
    /// Per-sample tensor shape.
    shape: Vec<usize>,
    trajectory: Option<Trajectory>,
    lambdas: Vec<f64>,
}

fn load_table(cfg: &RunConfig, data: &Path) -> Result<Loaded> {
    match cfg.model {
        ModelKind::PendulumAnn => {
            let traj = read_trajectory(data)?;
            let table = make_pendulum_features(&traj)?;
            let width = table.columns.len();
            Ok(Loaded {
                table,
                scaling: Scaling::PerColumn,
                shape: vec![width],
                trajectory: Some(traj),
                lambdas: Vec::new(),
            })
        }
        ModelKind::QuantumCnn | ModelKind::QuantumLstm => {
            let ds = read_dataset(data)?;
            Ok(Loaded {
                table: quantum_table(&ds)?,
                scaling: Scaling::Global,
                shape: vec![ds.n_points, 1],
                trajectory: None,
                lambdas: ds.rows.iter().map(|r| r.lambda).collect(),
            })
        }
        ModelKind::PinnMlp => bail!("pinn_mlp is trained with `pinn-train`, not `train`"),
    }
}

pub struct TrainOutcome {
    pub net: Network,
    pub standardizer: Standardizer,
    pub history: History,
    pub splits: Splits,
}

/// Fits a supervised model and writes the checkpoint, history and resolved
/// config into `out_dir`.
pub fn train_run(cfg: &RunConfig, out_dir: &Path) -> Result<TrainOutcome> {
    cfg.validate()?;
    let data = resolve_data(cfg, out_dir)?;
    let Loaded {
        table, scaling, shape, ..
    } = load_table(cfg, &data)?;
    let splits = split_indices(table.len(), cfg.split, cfg.seed)?;
    let train_table = table.subset(&splits.train);
    let standardizer = Standardizer::fit(&train_table, scaling)?;
    let train_set = standardizer.transform(&train_table, &shape)?;
    let val_set = standardizer.transform(&table.subset(&splits.val), &shape)?;

    let spec = NetworkSpec::default_for(cfg.model);
    let net = models::build(&spec, cfg.seed)?;
    let tcfg = cfg.train_config();
    let (net, history) = models::train(net, &train_set, &val_set, &tcfg)?;

    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut ckpt = Checkpoint::capture(&net, &spec, cfg.seed, &cfg.hash()?, AdamConfig::with_lr(tcfg.lr));
    ckpt.train = Some(tcfg);
    ckpt.standardizer = Some(standardizer.clone());
    save_checkpoint(&out_dir.join(CHECKPOINT_FILE), &ckpt)?;
    write_history(&out_dir.join(HISTORY_FILE), &history)?;
    cfg.save(&out_dir.join(CONFIG_FILE))?;
    Ok(TrainOutcome {
        net,
        standardizer,
        history,
        splits,
    })
}

/// Key-value metrics report. Keys are sorted so reruns are byte-identical.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub values: Map<String, Value>,
}

impl MetricsReport {
    fn new(experiment: &str, cfg: &RunConfig) -> Result<Self> {
        let mut values = Map::new();
        values.insert("experiment".into(), json!(experiment));
        values.insert("seed".into(), json!(cfg.seed));
        values.insert("config_hash".into(), json!(cfg.hash()?));
        Ok(Self { values })
    }

    fn set(&mut self, key: &str, v: impl Into<Value>) {
        self.values.insert(key.into(), v.into());
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.values.get(key).and_then(Value::as_f64)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.values).expect("metrics are plain values");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let width = self.values.keys().map(String::len).max().unwrap_or(0);
        let mut s = String::new();
        for (k, v) in &self.values {
            let shown = match v {
                Value::String(t) => t.clone(),
                other => other.to_string(),
            };
            s.push_str(&format!("{k:<width$}  {shown}\n"));
        }
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::write(dir.join(METRICS_JSON), self.to_json())
            .with_context(|| format!("writing {}", dir.join(METRICS_JSON).display()))?;
        fs::write(dir.join(METRICS_TXT), self.to_text())
            .with_context(|| format!("writing {}", dir.join(METRICS_TXT).display()))?;
        Ok(())
    }
}

/// Scores the checkpoint in `run_dir` on its test split and writes the
/// metrics files and prediction tables.
pub fn evaluate_run(run_dir: &Path, data_override: Option<&Path>) -> Result<MetricsReport> {
    let ckpt_path = run_dir.join(CHECKPOINT_FILE);
    if !ckpt_path.exists() {
        bail!(
            "no checkpoint at {}; run `physml train` first",
            ckpt_path.display()
        );
    }
    let mut cfg = RunConfig::load(&run_dir.join(CONFIG_FILE))?;
    if let Some(d) = data_override {
        cfg.data = Some(d.to_path_buf());
    }
    let ckpt = load_checkpoint(&ckpt_path)?;
    let net = ckpt.restore(Some(&NetworkSpec::default_for(cfg.model)))?;
    let standardizer = ckpt
        .standardizer
        .clone()
        .ok_or_else(|| anyhow!("{} has no standardizer", ckpt_path.display()))?;

    let data = resolve_data(&cfg, run_dir)?;
    let Loaded {
        table,
        shape,
        trajectory,
        lambdas,
        ..
    } = load_table(&cfg, &data)?;
    let splits = split_indices(table.len(), cfg.split, cfg.seed)?;
    let test_table = table.subset(&splits.test);
    let test_set = standardizer.transform(&test_table, &shape)?;
    let pred = predict(&net, &test_set, &standardizer)?;
    let metrics = Metrics::from_predictions(&pred, &test_table.targets)?;

    let mut report = MetricsReport::new(cfg.model.as_str(), &cfg)?;
    report.set("mae", metrics.mae);
    report.set("r_squared", metrics.r_squared);
    report.set("n_test", test_table.len());
    if let Ok(history) = physml_core::io::read_history(&run_dir.join(HISTORY_FILE)) {
        report.set("epochs_run", history.stopped_epoch);
        report.set("best_epoch", history.best_epoch);
    }

    let test_path = run_dir.join(TEST_PREDICTIONS_FILE);
    match &trajectory {
        Some(traj) => {
            let t: Vec<f64> = splits.test.iter().map(|&i| traj.t[i]).collect();
            write_columns(
                &test_path,
                &[("t", &t), ("theta_true", &test_table.targets), ("theta_pred", &pred)],
            )?;
            let all = standardizer.transform(&table, &shape)?;
            let full = predict(&net, &all, &standardizer)?;
            write_columns(
                &run_dir.join(PREDICTIONS_FILE),
                &[("t", &traj.t), ("theta_true", &traj.theta), ("theta_pred", &full)],
            )?;
        }
        None => {
            let lambdas: Vec<f64> = splits.test.iter().map(|&i| lambdas[i]).collect();
            write_columns(
                &test_path,
                &[("lambda", &lambdas), ("E_true", &test_table.targets), ("E_pred", &pred)],
            )?;
        }
    }
    report.write(run_dir)?;
    Ok(report)
}

pub struct PinnOutcome {
    pub log: Vec<PinnLossReport>,
    pub final_report: PinnLossReport,
    pub report: MetricsReport,
}

/// Trains a PINN for `cfg.system` and writes the loss log, predictions,
/// checkpoint, metrics and resolved config into `out_dir`.
pub fn pinn_run(cfg: &RunConfig, out_dir: &Path) -> Result<PinnOutcome> {
    cfg.validate()?;
    let p = &cfg.pinn;
    let spec = NetworkSpec::PinnMlp {
        hidden: p.hidden.clone(),
    };
    let net = models::build(&spec, cfg.seed)?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let hash = cfg.hash()?;
    let mut ckpt;
    let (log, final_report, mut report) = match cfg.system {
        System::Pendulum => {
            let traj = match &cfg.data {
                Some(_) => read_trajectory(&resolve_data(cfg, out_dir)?)?,
                None => simulate(
                    &cfg.pendulum.params(),
                    cfg.pendulum.initial_state(),
                    cfg.pendulum.t_end,
                    cfg.pendulum.dt,
                )?,
            };
            let mut problem =
                PendulumPinnProblem::from_trajectory(net, cfg.pendulum.params(), &traj, p.collocation_pendulum)?;
            let log = train_pinn(&mut problem, p.lr, p.epochs, p.log_every)?;
            let final_report = problem.evaluate(p.epochs)?.report;
            let pred = problem.predict(&traj.t)?;
            write_columns(
                &out_dir.join(PINN_PREDICTIONS_FILE),
                &[("t", &traj.t), ("theta_true", &traj.theta), ("theta_pred", &pred)],
            )?;
            let mut report = MetricsReport::new("pendulum_pinn", cfg)?;
            let fit = Metrics::from_predictions(&pred, &traj.theta)?;
            report.set("theta_mae", fit.mae);
            report.set("theta_r_squared", fit.r_squared);
            ckpt = Checkpoint::capture(&problem.net, &spec, cfg.seed, &hash, AdamConfig::with_lr(p.lr));
            ckpt.input_map = Some(problem.map);
            (log, final_report, report)
        }
        System::Quantum => {
            let mut problem = QuantumPinnProblem::new(net, p.x_max, p.collocation_quantum, p.initial_energy)?;
            let log = train_pinn(&mut problem, p.lr, p.epochs, p.log_every)?;
            let final_report = problem.evaluate(p.epochs)?.report;
            let raw = problem.wavefunction()?;
            let normalized = problem.normalized_wavefunction()?;
            let exact: Vec<f64> = problem.collocation.iter().map(|&x| harmonic_ground_state(x)).collect();
            write_columns(
                &out_dir.join(WAVEFUNCTION_FILE),
                &[
                    ("x", &problem.collocation),
                    ("psi_raw", &raw),
                    ("psi_normalized", &normalized),
                    ("psi_exact", &exact),
                ],
            )?;
            let mut report = MetricsReport::new("quantum_pinn", cfg)?;
            report.set("energy", problem.energy);
            report.set("norm", problem.norm()?);
            report.set("overlap", overlap(&normalized, &exact, problem.spacing()));
            ckpt = Checkpoint::capture(&problem.net, &spec, cfg.seed, &hash, AdamConfig::with_lr(p.lr));
            ckpt.input_map = Some(problem.map);
            ckpt.energy = Some(problem.energy);
            (log, final_report, report)
        }
    };
    report.set("epochs", p.epochs);
    report.set("final_data_loss", final_report.data_loss);
    report.set("final_phys_loss", final_report.phys_loss);
    report.set("final_penalty", final_report.penalty);
    report.set("final_total", final_report.total);

    write_pinn_log(&out_dir.join(PINN_LOG_FILE), &log)?;
    save_checkpoint(&out_dir.join(CHECKPOINT_FILE), &ckpt)?;
    cfg.save(&out_dir.join(CONFIG_FILE))?;
    report.write(out_dir)?;
    Ok(PinnOutcome {
        log,
        final_report,
        report,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    PendulumAnn,
    PendulumPinn,
    QuantumCnn,
    QuantumLstm,
    QuantumPinn,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::PendulumAnn,
        Experiment::PendulumPinn,
        Experiment::QuantumCnn,
        Experiment::QuantumLstm,
        Experiment::QuantumPinn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::PendulumAnn => "pendulum-ann",
            Experiment::PendulumPinn => "pendulum-pinn",
            Experiment::QuantumCnn => "quantum-cnn",
            Experiment::QuantumLstm => "quantum-lstm",
            Experiment::QuantumPinn => "quantum-pinn",
        }
    }

    /// Default configuration for the experiment, seed 0.
    pub fn config(self) -> RunConfig {
        let (system, model) = match self {
            Experiment::PendulumAnn => (System::Pendulum, ModelKind::PendulumAnn),
            Experiment::PendulumPinn => (System::Pendulum, ModelKind::PinnMlp),
            Experiment::QuantumCnn => (System::Quantum, ModelKind::QuantumCnn),
            Experiment::QuantumLstm => (System::Quantum, ModelKind::QuantumLstm),
            Experiment::QuantumPinn => (System::Quantum, ModelKind::PinnMlp),
        };
        RunConfig::new(system, model)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.as_str() == s || e.as_str().replace('-', "_") == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Experiment::ALL.iter().map(|e| e.as_str()).collect();
                anyhow!("unknown experiment '{s}' (expected one of {})", names.join(", "))
            })
    }
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.with_context(|| format!("stage `{name}` failed"))
}

/// Runs the whole chain for one experiment into `out_dir`.
pub fn reproduce(exp: Experiment, cfg: &RunConfig, out_dir: &Path) -> Result<MetricsReport> {
    let mut cfg = cfg.clone();
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    match exp {
        Experiment::PendulumAnn | Experiment::PendulumPinn => {
            stage("simulate-pendulum", simulate_to(&cfg, &out_dir.join(TRAJECTORY_FILE)))?;
            cfg.data = Some(PathBuf::from(TRAJECTORY_FILE));
        }
        Experiment::QuantumCnn | Experiment::QuantumLstm => {
            stage("gen-quantum", gen_quantum_to(&cfg, &out_dir.join(DATASET_FILE)))?;
            cfg.data = Some(PathBuf::from(DATASET_FILE));
        }
        Experiment::QuantumPinn => {}
    }
    match exp {
        Experiment::PendulumAnn | Experiment::QuantumCnn | Experiment::QuantumLstm => {
            stage("train", train_run(&cfg, out_dir))?;
            stage("evaluate", evaluate_run(out_dir, None))
        }
        Experiment::PendulumPinn | Experiment::QuantumPinn => {
            Ok(stage("pinn-train", pinn_run(&cfg, out_dir))?.report)
        }
    }
}
