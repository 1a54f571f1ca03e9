//! Training runs: calibrate, loop, periodically evaluate on a held-out
//! seed, and save best + final checkpoints next to a diagnostics CSV.

use crate::report::{fmt_f64, CsvDoc};
use crate::HarnessError;
use leobeam_core::channel::{sample_realization, ChannelRealization};
use leobeam_core::checkpoint::write_learner;
use leobeam_core::sac::{evaluate_mean_action, SacHyper, SacLearner};
use leobeam_core::seeding::{stream, stream_rng};
use leobeam_core::ScenarioConfig;
use std::path::{Path, PathBuf};

/// Inputs of one training run.
#[derive(Debug, Clone)]
pub struct TrainSpec {
    pub scenario: String,
    /// Resolved config; its `error_bound` is the training bound.
    pub config: ScenarioConfig,
    /// Everything about networks, optimizers, and the step loop. The
    /// cosine-schedule horizon is derived from `sim_steps`, not taken from
    /// here.
    pub hyper: SacHyper,
    /// Total simulation (inference) steps; learning steps are this divided
    /// by `hyper.inference_per_learn`.
    pub sim_steps: u64,
    /// Evaluate the mean-action policy every this many learning steps.
    pub eval_every_learn_steps: u64,
    /// Size of the fixed held-out evaluation set.
    pub eval_realizations: usize,
    /// Append a diagnostics row every this many learning steps.
    pub log_every_learn_steps: u64,
    /// Final checkpoint path; best/crashed/log paths are derived from it.
    pub out_checkpoint: PathBuf,
    pub seed: u64,
}

impl TrainSpec {
    pub fn best_checkpoint_path(&self) -> PathBuf {
        with_suffix(&self.out_checkpoint, "best")
    }

    pub fn crashed_checkpoint_path(&self) -> PathBuf {
        with_suffix(&self.out_checkpoint, "crashed")
    }

    pub fn log_path(&self) -> PathBuf {
        self.out_checkpoint.with_extension("log.csv")
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "checkpoint".into());
    let ext = path
        .extension()
        .map(|e| e.to_string_lossy().into_owned())
        .unwrap_or_else(|| "ckpt".into());
    path.with_file_name(format!("{stem}.{suffix}.{ext}"))
}

/// What a finished run produced.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub final_checkpoint: PathBuf,
    pub best_checkpoint: PathBuf,
    pub log_path: PathBuf,
    pub best_eval_sum_rate: f64,
    pub final_eval_sum_rate: f64,
    pub learn_steps: u64,
    pub sim_steps: u64,
}

/// Mean mean-action sum rate over a fixed realization set.
pub fn evaluate_policy(
    learner: &mut SacLearner,
    eval_set: &[ChannelRealization],
) -> Result<f64, HarnessError> {
    let mut total = 0.0;
    for realization in eval_set {
        let (_, report) = evaluate_mean_action(
            &mut learner.actor,
            &learner.stats,
            learner.hyper.transform,
            &learner.cfg,
            realization,
        )?;
        total += report.sum_rate;
    }
    Ok(total / eval_set.len() as f64)
}

/// Draw the held-out evaluation set from the dedicated evaluation stream.
pub fn held_out_set(cfg: &ScenarioConfig, seed: u64, count: usize) -> Vec<ChannelRealization> {
    let mut rng = stream_rng(seed, stream::EVAL);
    (0..count).map(|_| sample_realization(cfg, &mut rng)).collect()
}

/// Run the training loop. On a non-finite gradient the learner state is
/// dumped to the crashed-checkpoint path before the error surfaces.
pub fn run_training(spec: &TrainSpec) -> Result<TrainOutcome, HarnessError> {
    spec.config.validate()?;
    let mut config = spec.config.clone();
    config.rng_seed = spec.seed;
    let mut hyper = spec.hyper.clone();
    let blocks = spec.sim_steps.div_ceil(hyper.inference_per_learn as u64);
    hyper.total_learn_steps = blocks.max(1);

    let mut learner = SacLearner::new(config.clone(), hyper, spec.seed);
    let eval_set = held_out_set(&config, spec.seed, spec.eval_realizations);

    let mut log = CsvDoc::new(&[
        "learn_step",
        "sim_step",
        "mean_reward",
        "critic_loss_1",
        "critic_loss_2",
        "actor_loss",
        "actor_q_term",
        "actor_entropy_term",
        "alpha",
        "critic_lr",
        "actor_lr",
        "eval_sum_rate",
    ]);
    log.meta("command", "train");
    log.meta("scenario", &spec.scenario);
    log.meta("sim_steps", spec.sim_steps);
    log.meta("hidden", join_usize(&learner.hyper.hidden_widths));
    log.meta("batch_size", learner.hyper.batch_size);
    log.meta("eval_every_learn_steps", spec.eval_every_learn_steps);
    log.meta("eval_realizations", spec.eval_realizations);
    log.meta_config(&config, spec.seed);

    if let Some(parent) = spec.out_checkpoint.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }

    let mut best = f64::NEG_INFINITY;
    let append_row =
        |log: &mut CsvDoc, d: &leobeam_core::sac::StepDiagnostics, eval: Option<f64>| {
            let (c1, c2) = match d.critic_losses.as_slice() {
                [a, b, ..] => (fmt_f64(*a), fmt_f64(*b)),
                [a] => (fmt_f64(*a), String::new()),
                [] => (String::new(), String::new()),
            };
            let (al, aq, ae) = match &d.actor_loss {
                Some(a) => (fmt_f64(a.total), fmt_f64(a.q_term), fmt_f64(a.entropy_term)),
                None => (String::new(), String::new(), String::new()),
            };
            log.push_row(vec![
                d.learn_steps.to_string(),
                d.sim_steps.to_string(),
                fmt_f64(d.mean_reward),
                c1,
                c2,
                al,
                aq,
                ae,
                fmt_f64(d.alpha),
                fmt_f64(d.critic_lr),
                fmt_f64(d.actor_lr),
                eval.map(|e| fmt_f64(e)).unwrap_or_default(),
            ]);
        };

    for block in 0..blocks {
        let diagnostics = match learner.train_step() {
            Ok(d) => d,
            Err(e) => {
                // State dump for post-mortem inspection, then surface.
                let _ = write_learner(&learner, &spec.crashed_checkpoint_path());
                log.write(&spec.log_path())?;
                return Err(e.into());
            }
        };
        let due_eval = spec.eval_every_learn_steps > 0
            && (block + 1) % spec.eval_every_learn_steps == 0;
        let eval = if due_eval {
            let rate = evaluate_policy(&mut learner, &eval_set)?;
            if rate > best {
                best = rate;
                write_learner(&learner, &spec.best_checkpoint_path())?;
            }
            Some(rate)
        } else {
            None
        };
        if eval.is_some()
            || (block + 1) % spec.log_every_learn_steps.max(1) == 0
            || block + 1 == blocks
        {
            append_row(&mut log, &diagnostics, eval);
        }
    }

    let final_eval = evaluate_policy(&mut learner, &eval_set)?;
    if final_eval > best {
        best = final_eval;
        write_learner(&learner, &spec.best_checkpoint_path())?;
    }
    write_learner(&learner, &spec.out_checkpoint)?;
    // A zero-step run still leaves a usable best checkpoint.
    if !spec.best_checkpoint_path().exists() {
        write_learner(&learner, &spec.best_checkpoint_path())?;
    }
    log.write(&spec.log_path())?;
    Ok(TrainOutcome {
        final_checkpoint: spec.out_checkpoint.clone(),
        best_checkpoint: spec.best_checkpoint_path(),
        log_path: spec.log_path(),
        best_eval_sum_rate: best,
        final_eval_sum_rate: final_eval,
        learn_steps: learner.learn_steps,
        sim_steps: learner.sim_steps,
    })
}

fn join_usize(v: &[usize]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::scenario_config;
    use leobeam_core::checkpoint::{read_learner, save_learner};

    fn tmp_dir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("leobeam-train-{tag}"));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    fn quick_spec(tag: &str, sim_steps: u64) -> TrainSpec {
        let dir = tmp_dir(tag);
        TrainSpec {
            scenario: "tiny".into(),
            config: scenario_config("tiny").unwrap(),
            hyper: SacHyper {
                hidden_widths: vec![8],
                batch_size: 16,
                buffer_capacity: 128,
                calibration_samples: 16,
                ..SacHyper::default()
            },
            sim_steps,
            eval_every_learn_steps: 4,
            eval_realizations: 4,
            log_every_learn_steps: 2,
            out_checkpoint: dir.join("run.ckpt"),
            seed: 77,
        }
    }

    #[test]
    fn derived_paths_sit_next_to_the_final_checkpoint() {
        let spec = quick_spec("paths", 10);
        assert!(spec.best_checkpoint_path().ends_with("run.best.ckpt"));
        assert!(spec.crashed_checkpoint_path().ends_with("run.crashed.ckpt"));
        assert!(spec.log_path().ends_with("run.log.csv"));
    }

    #[test]
    fn zero_steps_saves_the_initialization() {
        let spec = quick_spec("zero", 0);
        let outcome = run_training(&spec).unwrap();
        assert_eq!(outcome.learn_steps, 0);
        assert_eq!(outcome.sim_steps, 0);
        let final_learner = read_learner(&outcome.final_checkpoint).unwrap();
        assert_eq!(final_learner.sim_steps, 0);
        // The checkpoint is exactly the (deterministic) initialization.
        let mut hyper = spec.hyper.clone();
        hyper.total_learn_steps = 1;
        let mut config = spec.config.clone();
        config.rng_seed = spec.seed;
        let fresh = SacLearner::new(config, hyper, spec.seed);
        assert_eq!(save_learner(&final_learner), save_learner(&fresh));
    }

    #[test]
    fn short_run_writes_all_artifacts_deterministically() {
        let spec = quick_spec("short", 120);
        let a = run_training(&spec).unwrap();
        assert_eq!(a.sim_steps, 120);
        // The first block only warms the buffer (10 tuples < batch 16), so
        // 12 blocks yield 11 learning steps.
        assert_eq!(a.learn_steps, 11);
        let ckpt_a = std::fs::read(&a.final_checkpoint).unwrap();
        let log_a = std::fs::read_to_string(&a.log_path).unwrap();
        assert!(a.best_eval_sum_rate >= a.final_eval_sum_rate || a.best_eval_sum_rate > 0.0);
        assert!(log_a.lines().any(|l| l.starts_with("# config_hash")));

        let b = run_training(&spec).unwrap();
        let ckpt_b = std::fs::read(&b.final_checkpoint).unwrap();
        let log_b = std::fs::read_to_string(&b.log_path).unwrap();
        assert_eq!(ckpt_a, ckpt_b, "training must be bit-reproducible");
        assert_eq!(log_a, log_b);
        assert!(spec.best_checkpoint_path().exists());
    }

    #[test]
    fn log_rows_track_the_step_counters() {
        let spec = quick_spec("log", 80);
        run_training(&spec).unwrap();
        let log = std::fs::read_to_string(spec.log_path()).unwrap();
        let data_rows: Vec<&str> = log
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("learn_step"))
            .collect();
        assert!(!data_rows.is_empty());
        let last: Vec<&str> = data_rows.last().unwrap().split(',').collect();
        assert_eq!(last[0], "7"); // 8 blocks minus the buffer-warmup block
        assert_eq!(last[1], "80");
        // Final row carries an evaluation column (eval_every = 4 divides 8).
        assert!(!last[11].is_empty());
    }
}
