//! Command-line interface: argument parsing and dispatch.
//!
//! Every subcommand resolves a `ScenarioConfig` the same way: start from a
//! named scenario (or a config file), apply `--set key=value` overrides,
//! then let `--seed` override the config's seed. The resolved config is
//! embedded in every output header.

use crate::beampattern::{pattern_csv, pattern_plot, run_beam_pattern, BeamPatternSpec};
use crate::report::{config_hash, fmt_f64, CsvDoc};
use crate::scenario::scenario_config;
use crate::sweep::{records_csv, run_sweep, summary_csv, sweep_plot, PrecoderChoice, SweepSpec};
use crate::training::{run_training, TrainSpec};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use leobeam_core::checkpoint::summarize_checkpoint;
use leobeam_core::sac::{calibrate_standardization, SacHyper, TemperatureMode, Transform};
use leobeam_core::seeding::{stream, stream_rng};
use leobeam_core::ScenarioConfig;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "leobeam",
    version,
    about = "LEO satellite SDMA downlink precoding experiments",
    propagate_version = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Paired Monte Carlo sweep of sum rate over angle-error bounds
    Sweep(SweepArgs),
    /// Train the neural precoder and save checkpoints
    Train(TrainArgs),
    /// Export beam-gain curves for one channel realization
    Beampattern(BeampatternArgs),
    /// Compute input standardization statistics and write them to CSV
    Calibrate(CalibrateArgs),
    /// Print the contents of a checkpoint file
    InspectCheckpoint(InspectArgs),
}

/// Flags shared by every scenario-based subcommand.
#[derive(Args)]
pub struct ScenarioArgs {
    /// Scenario id: a, b, c, tiny, or custom
    #[arg(long)]
    pub scenario: Option<String>,
    /// Read the base config from a key=value file instead of the registry
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override one config key, e.g. --set error_bound=0.05 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Master seed; defaults to the config's rng_seed
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ScenarioArgs {
    /// Resolve to (scenario label, config, seed). The seed is also written
    /// back into the config so outputs carry it.
    pub fn resolve(&self) -> Result<(String, ScenarioConfig, u64)> {
        let (label, mut cfg) = match (&self.scenario, &self.config) {
            (Some(id), None) => (id.clone(), scenario_config(id)?),
            (None, Some(path)) => (
                "custom".to_string(),
                ScenarioConfig::from_file(path)
                    .with_context(|| format!("reading config {}", path.display()))?,
            ),
            (Some(id), Some(path)) => {
                if id != "custom" {
                    bail!("--scenario {id} conflicts with --config; use --scenario custom");
                }
                (
                    id.clone(),
                    ScenarioConfig::from_file(path)
                        .with_context(|| format!("reading config {}", path.display()))?,
                )
            }
            (None, None) => ("b".to_string(), scenario_config("b")?),
        };
        for pair in &self.overrides {
            let (key, value) = pair
                .split_once('=')
                .with_context(|| format!("--set {pair:?} is not of the form key=value"))?;
            cfg.set_key(key.trim(), value.trim())
                .map_err(|e| anyhow::anyhow!("--set {pair:?}: {e}"))?;
        }
        let seed = self.seed.unwrap_or(cfg.rng_seed);
        cfg.rng_seed = seed;
        cfg.validate()?;
        Ok((label, cfg, seed))
    }
}

#[derive(Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Error bounds to sweep, ascending
    #[arg(
        long,
        value_delimiter = ',',
        default_values_t = [0.0, 0.01, 0.02, 0.03, 0.05, 0.075, 0.1]
    )]
    pub bounds: Vec<f64>,
    /// Monte Carlo iterations per bound
    #[arg(long, default_value_t = 1000)]
    pub iters: usize,
    /// Precoders to evaluate: mmse, rslnr, sac:<checkpoint>
    #[arg(long, value_delimiter = ',', default_value = "mmse,rslnr")]
    pub precoders: Vec<PrecoderChoice>,
    /// Output directory for sweep_records.csv, sweep_summary.csv, sweep.svg
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Angle-error bound during training (overrides the config's)
    #[arg(long)]
    pub train_bound: Option<f64>,
    /// Total simulation steps (inference interactions with the channel)
    #[arg(long, default_value_t = 1_000_000)]
    pub steps: u64,
    /// Final checkpoint path; best/log files are derived from it
    #[arg(long, default_value = "out/policy.ckpt")]
    pub out: PathBuf,
    /// Hidden layer widths
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    /// Learning batch size
    #[arg(long)]
    pub batch: Option<usize>,
    /// Replay buffer capacity
    #[arg(long)]
    pub buffer: Option<usize>,
    #[arg(long)]
    pub critic_lr: Option<f64>,
    #[arg(long)]
    pub actor_lr: Option<f64>,
    #[arg(long)]
    pub temperature_lr: Option<f64>,
    #[arg(long)]
    pub critic_l2: Option<f64>,
    #[arg(long)]
    pub actor_l2: Option<f64>,
    /// Freeze the entropy temperature at this value instead of auto-tuning
    #[arg(long)]
    pub fixed_alpha: Option<f64>,
    /// Entropy target (default: minus the action dimension)
    #[arg(long)]
    pub target_entropy: Option<f64>,
    /// State transform: magnitude-phase or real-imag
    #[arg(long)]
    pub transform: Option<Transform>,
    /// Standardization calibration sample count
    #[arg(long)]
    pub calibration_samples: Option<usize>,
    /// Inference steps per learning step
    #[arg(long)]
    pub inference_per_learn: Option<usize>,
    /// Evaluate the mean-action policy every this many learning steps
    #[arg(long, default_value_t = 500)]
    pub eval_every: u64,
    /// Held-out evaluation set size
    #[arg(long, default_value_t = 50)]
    pub eval_size: usize,
    /// Diagnostics CSV row interval, in learning steps
    #[arg(long, default_value_t = 100)]
    pub log_every: u64,
}

#[derive(Args)]
pub struct BeampatternArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Angle-error bound the realization is drawn at (overrides config)
    #[arg(long)]
    pub bound: Option<f64>,
    /// Precoders to trace: mmse, rslnr, sac:<checkpoint>
    #[arg(long, value_delimiter = ',', default_value = "mmse,rslnr")]
    pub precoders: Vec<PrecoderChoice>,
    /// Angle-of-departure grid resolution over [0, pi]
    #[arg(long, default_value_t = 1441)]
    pub grid_points: usize,
    /// Output directory for beampattern.csv and beampattern.svg
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// State transform: magnitude-phase or real-imag
    #[arg(long, default_value = "magnitude-phase")]
    pub transform: Transform,
    /// Calibration sample count
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// Output CSV path
    #[arg(long, default_value = "out/standardization.csv")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct InspectArgs {
    /// Checkpoint file to describe
    pub path: PathBuf,
}

/// Parse arguments from the process environment and dispatch.
pub fn run() -> Result<()> {
    dispatch(Cli::parse())
}

pub fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sweep(args) => cmd_sweep(args),
        Command::Train(args) => cmd_train(args),
        Command::Beampattern(args) => cmd_beampattern(args),
        Command::Calibrate(args) => cmd_calibrate(args),
        Command::InspectCheckpoint(args) => cmd_inspect(args),
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let (scenario, config, seed) = args.scenario.resolve()?;
    let spec = SweepSpec {
        scenario,
        config,
        error_bounds: args.bounds,
        monte_carlo_iters: args.iters,
        precoders: args.precoders,
        seed,
    };
    let result = run_sweep(&spec)?;
    records_csv(&spec, &result).write(&args.out_dir.join("sweep_records.csv"))?;
    summary_csv(&spec, &result).write(&args.out_dir.join("sweep_summary.csv"))?;
    sweep_plot(&spec, &result).write(&args.out_dir.join("sweep.svg"))?;

    println!(
        "sweep: scenario {}, {} iterations, seed {seed}, config {}",
        spec.scenario, spec.monte_carlo_iters, result.config_hash
    );
    println!("{:<12} {:>11} {:>14} {:>13}", "precoder", "error_bound", "mean_sum_rate", "std");
    for cell in &result.cells {
        println!(
            "{:<12} {:>11} {:>14.6} {:>13.6}",
            cell.precoder,
            fmt_f64(cell.error_bound),
            cell.mean(),
            cell.std()
        );
    }
    println!("wrote {}", args.out_dir.join("sweep_records.csv").display());
    println!("wrote {}", args.out_dir.join("sweep_summary.csv").display());
    println!("wrote {}", args.out_dir.join("sweep.svg").display());
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let (scenario, mut config, seed) = args.scenario.resolve()?;
    if let Some(bound) = args.train_bound {
        config.error_bound = bound;
        config.validate()?;
    }
    let mut hyper = SacHyper::default();
    if let Some(h) = args.hidden {
        hyper.hidden_widths = h;
    }
    if let Some(b) = args.batch {
        hyper.batch_size = b;
    }
    if let Some(b) = args.buffer {
        hyper.buffer_capacity = b;
    }
    if let Some(v) = args.critic_lr {
        hyper.critic_lr = v;
    }
    if let Some(v) = args.actor_lr {
        hyper.actor_lr = v;
    }
    if let Some(v) = args.temperature_lr {
        hyper.temperature_lr = v;
    }
    if let Some(v) = args.critic_l2 {
        hyper.critic_l2 = v;
    }
    if let Some(v) = args.actor_l2 {
        hyper.actor_l2 = v;
    }
    if let Some(alpha) = args.fixed_alpha {
        anyhow::ensure!(alpha > 0.0, "--fixed-alpha must be positive");
        hyper.init_log_alpha = alpha.ln();
        hyper.temperature_mode = TemperatureMode::Fixed;
    }
    if let Some(t) = args.target_entropy {
        hyper.target_entropy = Some(t);
    }
    if let Some(t) = args.transform {
        hyper.transform = t;
    }
    if let Some(c) = args.calibration_samples {
        hyper.calibration_samples = c;
    }
    if let Some(i) = args.inference_per_learn {
        anyhow::ensure!(i >= 1, "--inference-per-learn must be >= 1");
        hyper.inference_per_learn = i;
    }

    let spec = TrainSpec {
        scenario,
        config,
        hyper,
        sim_steps: args.steps,
        eval_every_learn_steps: args.eval_every,
        eval_realizations: args.eval_size,
        log_every_learn_steps: args.log_every,
        out_checkpoint: args.out,
        seed,
    };
    println!(
        "training: scenario {}, B_train = {}, {} sim steps, seed {seed}, config {}",
        spec.scenario,
        fmt_f64(spec.config.error_bound),
        spec.sim_steps,
        config_hash(&spec.config)
    );
    let outcome = run_training(&spec)?;
    println!(
        "done: {} learn steps, best eval {:.6}, final eval {:.6} bit/s/Hz",
        outcome.learn_steps, outcome.best_eval_sum_rate, outcome.final_eval_sum_rate
    );
    println!("wrote {}", outcome.final_checkpoint.display());
    println!("wrote {}", outcome.best_checkpoint.display());
    println!("wrote {}", outcome.log_path.display());
    Ok(())
}

fn cmd_beampattern(args: BeampatternArgs) -> Result<()> {
    let (scenario, mut config, seed) = args.scenario.resolve()?;
    if let Some(bound) = args.bound {
        config.error_bound = bound;
        config.validate()?;
    }
    let spec = BeamPatternSpec {
        scenario,
        config,
        precoders: args.precoders,
        grid_points: args.grid_points,
        seed,
    };
    let data = run_beam_pattern(&spec)?;
    pattern_csv(&spec, &data).write(&args.out_dir.join("beampattern.csv"))?;
    pattern_plot(&spec, &data).write(&args.out_dir.join("beampattern.svg"))?;
    println!(
        "beam pattern: scenario {}, B = {}, seed {seed}",
        spec.scenario,
        fmt_f64(spec.config.error_bound)
    );
    for curve in &data.curves {
        println!("  {} sum rate {:.6} bit/s/Hz", curve.precoder, curve.sum_rate);
    }
    println!("wrote {}", args.out_dir.join("beampattern.csv").display());
    println!("wrote {}", args.out_dir.join("beampattern.svg").display());
    Ok(())
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<()> {
    let (scenario, config, seed) = args.scenario.resolve()?;
    anyhow::ensure!(args.samples >= 2, "--samples must be >= 2");
    let mut rng = stream_rng(seed, stream::CALIBRATE);
    let stats = calibrate_standardization(&config, args.transform, args.samples, &mut rng);
    let mut doc = CsvDoc::new(&["feature_index", "mean", "scale"]);
    doc.meta("command", "calibrate");
    doc.meta("scenario", &scenario);
    doc.meta("transform", args.transform);
    doc.meta("samples", args.samples);
    doc.meta_config(&config, seed);
    for i in 0..stats.mean.len() {
        doc.push_row(vec![
            i.to_string(),
            fmt_f64(stats.mean[i]),
            fmt_f64(stats.scale[i]),
        ]);
    }
    doc.write(&args.out)?;
    println!(
        "calibrated {} features from {} samples ({})",
        stats.mean.len(),
        args.samples,
        args.transform
    );
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_inspect(args: InspectArgs) -> Result<()> {
    let bytes = std::fs::read(&args.path)
        .with_context(|| format!("reading {}", args.path.display()))?;
    let s = summarize_checkpoint(&bytes)?;
    println!("checkpoint {}", args.path.display());
    println!("  version        = {}", s.version);
    println!("  bytes          = {}", s.total_bytes);
    println!("  config_hash    = {}", config_hash(&s.config));
    println!("  master_seed    = {}", s.master_seed);
    println!("  sim_steps      = {}", s.sim_steps);
    println!("  learn_steps    = {}", s.learn_steps);
    println!("  log_alpha      = {}", fmt_f64(s.log_alpha));
    println!("  target_entropy = {}", fmt_f64(s.target_entropy));
    println!("  transform      = {}", s.transform);
    println!("  calibrated     = {}", s.calibrated);
    println!(
        "  actor          = {} -> {:?} -> {} ({} parameters)",
        s.config.state_dim(),
        s.hidden_widths,
        2 * s.config.state_dim(),
        s.actor_param_count
    );
    println!(
        "  critics        = {} x ({} parameters)",
        s.num_critics, s.critic_param_count
    );
    for line in s.config_text.lines() {
        println!("  config:{line}");
    }
    Ok(())
}
