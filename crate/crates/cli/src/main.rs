use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use physml_cli::pipeline::{self, Experiment};
use physml_cli::plot::{plot_data, PlotKind};
use physml_core::io::{RunConfig, System};
use physml_core::models::ModelKind;

#[derive(Parser)]
#[command(name = "physml", version, about = "Pendulum and anharmonic-oscillator data generation and neural surrogates")]
struct Cli {
    /// Root directory for outputs whose path is not given explicitly.
    #[arg(long, env = "PHYSML_OUT", default_value = "runs", global = true)]
    out_root: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the driven pendulum and write the trajectory CSV.
    SimulatePendulum(SimulateArgs),
    /// Solve the anharmonic oscillator over a lambda sweep and write the dataset CSV.
    GenQuantum(GenArgs),
    /// Train a supervised surrogate (pendulum_ann, quantum_cnn, quantum_lstm).
    Train(TrainArgs),
    /// Score a trained run on its test split.
    Evaluate(EvaluateArgs),
    /// Train a physics-informed network.
    PinnTrain(PinnArgs),
    /// Write a plot-ready CSV for one figure.
    PlotData(PlotArgs),
    /// Run a complete experiment chain into one directory.
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    theta0: Option<f64>,
    #[arg(long)]
    omega0: Option<f64>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of lambda values.
    #[arg(long)]
    lambdas: Option<usize>,
    #[arg(long)]
    lambda_max: Option<f64>,
    /// Grid points.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    xmax: Option<f64>,
    /// Energy levels per row.
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args)]
struct TrainFlags {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long, value_parser = parse_model)]
    model: Option<ModelKind>,
    /// Trajectory CSV (pendulum) or dataset CSV (quantum).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Run directory; defaults to <out-root>/<model>.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    train: TrainFlags,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Directory written by `train`.
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Print the metrics as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct PinnArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long, value_parser = parse_system)]
    system: Option<System>,
    /// Trajectory CSV for the pendulum data term; simulated when absent.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    log_every: Option<usize>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    kind: String,
    /// Artifact or run directory to read; defaults to the output root.
    #[arg(long)]
    from: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReproduceArgs {
    #[arg(long)]
    experiment: String,
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Defaults to <out-root>/<experiment>.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cap on supervised training epochs.
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    pinn_epochs: Option<usize>,
    /// Number of lambda values in the generated dataset.
    #[arg(long)]
    lambdas: Option<usize>,
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: physml_core::Error| e.to_string())
}

fn parse_system(s: &str) -> Result<System, String> {
    match s {
        "pendulum" => Ok(System::Pendulum),
        "quantum" => Ok(System::Quantum),
        _ => Err(format!("unknown system '{s}' (expected pendulum or quantum)")),
    }
}

fn system_of(model: ModelKind) -> Option<System> {
    match model {
        ModelKind::PendulumAnn => Some(System::Pendulum),
        ModelKind::QuantumCnn | ModelKind::QuantumLstm => Some(System::Quantum),
        ModelKind::PinnMlp => None,
    }
}

fn base_config(args: &ConfigArgs, system: System, model: ModelKind) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::new(system, model),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn simulate_cmd(root: &Path, a: SimulateArgs) -> Result<()> {
    let mut cfg = base_config(&a.cfg, System::Pendulum, ModelKind::PendulumAnn)?;
    set(&mut cfg.pendulum.t_end, a.t_end);
    set(&mut cfg.pendulum.dt, a.dt);
    set(&mut cfg.pendulum.theta0, a.theta0);
    set(&mut cfg.pendulum.omega0, a.omega0);
    let out = a.out.unwrap_or_else(|| root.join(pipeline::TRAJECTORY_FILE));
    let traj = pipeline::simulate_to(&cfg, &out)?;
    println!("wrote {} samples to {}", traj.len(), out.display());
    Ok(())
}

fn gen_cmd(root: &Path, a: GenArgs) -> Result<()> {
    let mut cfg = base_config(&a.cfg, System::Quantum, ModelKind::QuantumCnn)?;
    let q = &mut cfg.quantum;
    set(&mut q.lambda_count, a.lambdas);
    set(&mut q.lambda_max, a.lambda_max);
    set(&mut q.n_points, a.n);
    set(&mut q.x_max, a.xmax);
    set(&mut q.levels, a.k);
    let out = a.out.unwrap_or_else(|| root.join(pipeline::DATASET_FILE));
    let ds = pipeline::gen_quantum_to(&cfg, &out)?;
    println!(
        "wrote {} rows ({} levels, {} grid points) to {}",
        ds.len(),
        ds.levels(),
        ds.n_points,
        out.display()
    );
    Ok(())
}

fn apply_train_flags(cfg: &mut RunConfig, f: &TrainFlags) {
    let t = &mut cfg.train;
    t.max_epochs = f.epochs.or(t.max_epochs);
    t.lr = f.lr.or(t.lr);
    t.batch_size = f.batch_size.or(t.batch_size);
    t.patience = f.patience.or(t.patience);
}

fn train_cmd(root: &Path, a: TrainArgs) -> Result<()> {
    let Some(model) = a.model.or_else(|| {
        a.cfg.config.as_ref().and_then(|p| RunConfig::load(p).ok()).map(|c| c.model)
    }) else {
        bail!("--model is required without a config file");
    };
    let Some(system) = system_of(model) else {
        bail!("pinn_mlp is trained with `pinn-train`");
    };
    let mut cfg = base_config(&a.cfg, system, model)?;
    cfg.model = model;
    cfg.system = system;
    if a.data.is_some() {
        cfg.data = a.data;
    }
    apply_train_flags(&mut cfg, &a.train);
    let out = a.out.unwrap_or_else(|| root.join(model.as_str()));
    let outcome = pipeline::train_run(&cfg, &out)?;
    let h = &outcome.history;
    println!(
        "trained {model} for {} epochs (best epoch {}, val loss {:.6e}); run directory {}",
        h.stopped_epoch,
        h.best_epoch,
        h.val_loss.get(h.best_epoch.saturating_sub(1)).copied().unwrap_or(f64::NAN),
        out.display()
    );
    Ok(())
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<()> {
    let report = pipeline::evaluate_run(&a.run, a.data.as_deref())?;
    if a.json {
        print!("{}", report.to_json());
    } else {
        print!("{}", report.to_text());
    }
    Ok(())
}

fn pinn_cmd(root: &Path, a: PinnArgs) -> Result<()> {
    let from_file = a.cfg.config.as_ref().map(|p| RunConfig::load(p)).transpose()?;
    let Some(system) = a.system.or(from_file.as_ref().map(|c| c.system)) else {
        bail!("--system is required without a config file");
    };
    let mut cfg = base_config(&a.cfg, system, ModelKind::PinnMlp)?;
    cfg.system = system;
    cfg.model = ModelKind::PinnMlp;
    if a.data.is_some() {
        cfg.data = a.data;
    }
    set(&mut cfg.pinn.epochs, a.epochs);
    set(&mut cfg.pinn.lr, a.lr);
    set(&mut cfg.pinn.log_every, a.log_every);
    let name = match system {
        System::Pendulum => "pendulum-pinn",
        System::Quantum => "quantum-pinn",
    };
    let out = a.out.unwrap_or_else(|| root.join(name));
    let outcome = pipeline::pinn_run(&cfg, &out)?;
    for r in &outcome.log {
        match r.energy {
            Some(e) => println!("epoch {:>6}  loss {:.6e}  energy {:.6}", r.epoch, r.total, e),
            None => println!(
                "epoch {:>6}  data {:.6e}  phys {:.6e}  total {:.6e}",
                r.epoch, r.data_loss, r.phys_loss, r.total
            ),
        }
    }
    println!("run directory {}", out.display());
    Ok(())
}

fn plot_cmd(root: &Path, a: PlotArgs) -> Result<()> {
    let kind: PlotKind = a.kind.parse()?;
    let from = a.from.unwrap_or_else(|| root.to_path_buf());
    let out = a
        .out
        .unwrap_or_else(|| root.join("plots").join(format!("{kind}.csv")));
    let src = plot_data(kind, &from, &out)?;
    println!("wrote {} from {}", out.display(), src.display());
    Ok(())
}

fn reproduce_cmd(root: &Path, a: ReproduceArgs) -> Result<()> {
    let exp: Experiment = a.experiment.parse()?;
    let defaults = exp.config();
    let mut cfg = base_config(&a.cfg, defaults.system, defaults.model)?;
    if a.cfg.config.is_some() && (cfg.system, cfg.model) != (defaults.system, defaults.model) {
        bail!(
            "config describes {:?}/{} but experiment {exp} needs {:?}/{}",
            cfg.system,
            cfg.model,
            defaults.system,
            defaults.model
        );
    }
    cfg.train.max_epochs = a.max_epochs.or(cfg.train.max_epochs);
    set(&mut cfg.pinn.epochs, a.pinn_epochs);
    set(&mut cfg.quantum.lambda_count, a.lambdas);
    let out = a.out.unwrap_or_else(|| root.join(exp.as_str()));
    let report = pipeline::reproduce(exp, &cfg, &out)?;
    print!("{}", report.to_text());
    println!("artifacts in {}", out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let root = cli.out_root;
    match cli.command {
        Command::SimulatePendulum(a) => simulate_cmd(&root, a),
        Command::GenQuantum(a) => gen_cmd(&root, a),
        Command::Train(a) => train_cmd(&root, a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::PinnTrain(a) => pinn_cmd(&root, a),
        Command::PlotData(a) => plot_cmd(&root, a),
        Command::Reproduce(a) => reproduce_cmd(&root, a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
