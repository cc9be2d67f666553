//! Command-line front end. Exit codes: 0 success, 1 validation or usage
//! error, 2 I/O error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use valueprior::maze::{blind_maze, generate_maze, mentor_policy, MazeSpec};
use valueprior::mdp::sample_trajectories;
use valueprior::{alternating_maximize, count_tensor, io, CountTensor, EstimatorConfig, FiniteHorizonMdp, Policy};

use crate::config::{ExperimentConfig, Scenario};
use crate::error::{ExpError, Result};
use crate::results::{render_summary, summarize, write_results};
use crate::sweep::run_sweep;

#[derive(Debug, Parser)]
#[command(name = "valueprior", version, about = "Value-prior imitation learning on tabular MDPs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a maze and write it as an MDP file plus an ASCII map (`<out>.map`).
    GenMaze(GenMazeArgs),
    /// Sample trajectories from a policy (default: a seeded optimal policy).
    Sample(SampleArgs),
    /// Estimate the demonstrator's policy from trajectories or counts.
    Estimate(EstimateArgs),
    /// Run an experiment sweep and write a CSV of results.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct GenMazeArgs {
    /// Config file; only its `[maze]` section is used.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// 30×30 grid with horizon 90 instead of the 10×10 desk maze.
    #[arg(long)]
    pub full: bool,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub mdp: PathBuf,
    /// Policy file (`PI t s a p` lines). Without it, an optimal policy with
    /// ties broken by `--seed` is used.
    #[arg(long)]
    pub policy: Option<PathBuf>,
    #[arg(long)]
    pub trajectories: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub mdp: PathBuf,
    /// Trajectory file.
    #[arg(long, conflicts_with = "counts", required_unless_present = "counts")]
    pub data: Option<PathBuf>,
    /// Count file (`K t s a n` lines).
    #[arg(long)]
    pub counts: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Use only the first N trajectories.
    #[arg(long)]
    pub trajectories: Option<usize>,
    /// Zero the negative rewards of the MDP before estimating.
    #[arg(long)]
    pub blind: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides `master_seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub scenario: Option<Scenario>,
    /// Restrict the sweep to one alpha.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Restrict the sweep to one dataset size.
    #[arg(long)]
    pub trajectories: Option<usize>,
    #[arg(long)]
    pub full: bool,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| ExpError::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| ExpError::io(path, e))
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::from_toml(&read(p)?),
        None => Ok(ExperimentConfig::desk(Scenario::Fig1ValuePrior)),
    }
}

fn gen_maze(args: GenMazeArgs) -> Result<()> {
    let mut spec = if args.full {
        MazeSpec::default()
    } else {
        load_config(args.config.as_deref())?.maze_spec
    };
    spec.seed = args.seed;
    let maze = generate_maze::<f64>(&spec)?;
    write(&args.out, &io::write_mdp(&maze.mdp))?;
    let mut map = args.out.clone().into_os_string();
    map.push(".map");
    write(Path::new(&map), &maze.render())?;
    Ok(())
}

fn sample(args: SampleArgs) -> Result<()> {
    let mdp: FiniteHorizonMdp<f64> = io::read_mdp(&read(&args.mdp)?)?;
    let policy: Policy<f64> = match &args.policy {
        Some(p) => io::read_policy(&read(p)?, mdp.dims())?,
        None => mentor_policy(&mdp, 1.0, args.seed),
    };
    let data = sample_trajectories(&mdp, &policy, args.trajectories, args.seed);
    write(&args.out, &io::write_trajectories(&data))
}

fn estimate(args: EstimateArgs) -> Result<()> {
    let mut mdp: FiniteHorizonMdp<f64> = io::read_mdp(&read(&args.mdp)?)?;
    if args.blind {
        mdp = blind_maze(&mdp);
    }
    let counts: CountTensor = match (&args.data, &args.counts) {
        (Some(path), _) => {
            let mut data = io::read_trajectories(&read(path)?, mdp.dims())?;
            if let Some(n) = args.trajectories {
                data = data.prefix(n.min(data.len()));
            }
            count_tensor(&data, mdp.dims())?
        }
        (None, Some(path)) => io::read_counts(&read(path)?, mdp.dims())?,
        (None, None) => return Err(ExpError::Config("need --data or --counts".into())),
    };
    let base = load_config(args.config.as_deref())?.estimator_config;
    let config = EstimatorConfig {
        alpha: args.alpha,
        seed: args.seed,
        ..base
    };
    let result = alternating_maximize(&mdp, &counts, &config)?;
    let mut report = Vec::new();
    io::write_report(&result, &mut report)?;
    let report = String::from_utf8(report).expect("report is ASCII");
    match &args.out {
        Some(path) => write(path, &report),
        None => {
            print!("{report}");
            Ok(())
        }
    }
}

fn sweep(args: SweepArgs) -> Result<()> {
    let path = args
        .config
        .as_deref()
        .ok_or_else(|| ExpError::Config("sweep needs --config <path>".into()))?;
    let text = read(path)?;
    let mut config = ExperimentConfig::from_toml(&text)?;
    if let Some(sc) = args.scenario {
        let scenario_default = ExperimentConfig::desk(sc);
        if config.scenario != sc {
            config.estimators = scenario_default.estimators;
            if config.perturb_grid.is_empty() {
                config.perturb_grid = scenario_default.perturb_grid;
            }
        }
        config.scenario = sc;
    }
    if args.full {
        config = config.into_full_scale();
    }
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if let Some(t) = args.threads {
        config.threads = t;
    }
    if let Some(a) = args.alpha {
        config.alphas = vec![a];
    }
    if let Some(m) = args.trajectories {
        config.dataset_sizes = vec![m];
    }
    config.validate()?;
    let rows = run_sweep(&config)?;
    write_results(&rows, &args.out)?;
    eprint!("{}", render_summary(&summarize(&rows)));
    Ok(())
}

pub fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenMaze(a) => gen_maze(a),
        Command::Sample(a) => sample(a),
        Command::Estimate(a) => estimate(a),
        Command::Sweep(a) => sweep(a),
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
