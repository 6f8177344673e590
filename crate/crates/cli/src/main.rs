//! `rfmp`: synthesize demonstrations, train flow matching policies, roll them
//! out, and evaluate the reproductions.
//!
//! Exit codes: 0 success, 2 usage, 3 I/O, 4 schema, 5 numerical failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{InitMode, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Schema(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Schema(_) => 4,
            CliError::Numerical(_) => 5,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
            CliError::Schema(m) => write!(f, "schema error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<rfmp::Error> for CliError {
    fn from(e: rfmp::Error) -> Self {
        use rfmp::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidArgument(_) => CliError::Usage(msg),
            E::Io { .. } => CliError::Io(msg),
            E::Parse { .. } | E::Schema(_) => CliError::Schema(msg),
            E::Domain(_) | E::Numerical(_) | E::NonConvergence { .. } => CliError::Numerical(msg),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "rfmp", version, about = "Flow matching policies on Euclidean space and the sphere")]
struct Cli {
    /// Run configuration (TOML). Flags override values from the file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory for inputs and outputs.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize (or ingest) a dataset and write it to the run directory.
    Synth(SynthArgs),
    /// Train a policy on the run directory's dataset.
    Train(TrainArgs),
    /// Roll out the trained policy from demonstration starts.
    Rollout(RolloutArgs),
    /// Score rollouts against the demonstrations.
    Eval(EvalArgs),
    /// Trace flows from base samples to predicted horizons.
    Flow(FlowArgs),
    /// Train and evaluate one policy per prediction horizon.
    AblateHorizon(AblateArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Letter shape (S, W, J, L, L_mirrored_pair).
    #[arg(long)]
    shape: Option<String>,
    /// Target manifold (euclidean or sphere).
    #[arg(long)]
    manifold: Option<String>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Continue from the run directory's checkpoint up to the configured epoch count.
    #[arg(long)]
    resume: bool,
    #[arg(long)]
    epochs: Option<usize>,
    /// Add per-epoch wall-clock seconds to the training log (breaks byte-identical reruns).
    #[arg(long)]
    log_elapsed: bool,
}

#[derive(Args, Debug)]
struct RolloutArgs {
    /// `demo_starts` or `perturbed`.
    #[arg(long)]
    init: Option<InitMode>,
    /// Standard deviation of the tangent perturbation for `perturbed` starts.
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long)]
    num_steps: Option<usize>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Rollout directory or trajectory CSV (defaults to the run's rollouts).
    #[arg(long)]
    rollouts: Option<PathBuf>,
    /// `matched` or `nearest`.
    #[arg(long)]
    pairing: Option<rfmp::metrics::Pairing>,
}

#[derive(Args, Debug)]
struct FlowArgs {
    #[arg(long)]
    num_samples: Option<usize>,
    #[arg(long)]
    num_snapshots: Option<usize>,
}

#[derive(Args, Debug)]
struct AblateArgs {
    /// Comma-separated prediction horizons.
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<usize>>,
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    match &cli.command {
        Command::Synth(a) => {
            if let Some(s) = &a.shape {
                cfg.dataset.shape = s.clone();
            }
            if let Some(m) = &a.manifold {
                cfg.dataset.manifold = match m.as_str() {
                    "euclidean" => config::ManifoldChoice::Euclidean,
                    "sphere" => config::ManifoldChoice::Sphere,
                    other => return Err(CliError::Usage(format!("unknown manifold `{other}`"))),
                };
            }
        }
        Command::Train(a) => {
            if a.epochs.is_some() {
                cfg.policy.epochs = a.epochs;
            }
        }
        Command::Rollout(a) => {
            if let Some(i) = a.init {
                cfg.rollout.init = i;
            }
            if let Some(s) = a.scale {
                cfg.rollout.perturb_scale = s;
            }
            if let Some(n) = a.num_steps {
                cfg.rollout.num_steps = n;
            }
        }
        Command::Eval(a) => {
            if a.pairing.is_some() {
                cfg.eval.pairing = a.pairing;
            }
        }
        Command::Flow(a) => {
            if let Some(n) = a.num_samples {
                cfg.flow.num_samples = n;
            }
            if let Some(n) = a.num_snapshots {
                cfg.flow.num_snapshots = n;
            }
        }
        Command::AblateHorizon(a) => {
            if let Some(h) = &a.horizons {
                cfg.ablation.horizons = h.clone();
            }
        }
    }
    cfg.check()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = resolve_config(&cli)?;
    match cli.command {
        Command::Synth(_) => commands::synth(&cfg),
        Command::Train(a) => commands::train(&cfg, a.resume, a.log_elapsed),
        Command::Rollout(_) => commands::rollout(&cfg),
        Command::Eval(a) => commands::eval(&cfg, a.rollouts.as_deref()),
        Command::Flow(_) => commands::flow(&cfg),
        Command::AblateHorizon(_) => commands::ablate_horizon(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RFMP_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rfmp: {e}");
            ExitCode::from(e.code())
        }
    }
}
