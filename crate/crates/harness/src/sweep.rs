//! Paired Monte Carlo sweeps over the angle-error bound.
//!
//! For every (bound, iteration) pair one channel realization is drawn from
//! a seed derived as `derive_seed2(master, bound_index, iteration)`, and
//! every requested precoder is evaluated on that same realization. Means
//! can therefore be compared as paired samples, which is how the
//! robustness margins in the acceptance suite are computed.

use crate::report::{bytes_hash, config_hash, fmt_f64, CsvDoc};
use crate::svg::{LinePlot, Series};
use crate::HarnessError;
use leobeam_core::channel::{sample_realization, ChannelRealization};
use leobeam_core::checkpoint::load_learner;
use leobeam_core::metrics::sum_rate;
use leobeam_core::mmse::mmse_precoder;
use leobeam_core::nn::MlpNetwork;
use leobeam_core::rslnr::rslnr_from_realization;
use leobeam_core::sac::{evaluate_mean_action, StandardizationStats, Transform};
use leobeam_core::seeding::{derive_seed2, seeded_rng};
use leobeam_core::ScenarioConfig;
use rayon::prelude::*;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

/// A precoder selected for evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrecoderChoice {
    Mmse,
    Rslnr,
    /// Neural policy loaded from a checkpoint file.
    Sac(PathBuf),
}

impl PrecoderChoice {
    /// Column label used in CSV output and plots.
    pub fn label(&self) -> String {
        match self {
            PrecoderChoice::Mmse => "mmse".to_string(),
            PrecoderChoice::Rslnr => "rslnr".to_string(),
            PrecoderChoice::Sac(path) => {
                let stem = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "policy".to_string());
                format!("sac-{stem}")
            }
        }
    }
}

impl fmt::Display for PrecoderChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrecoderChoice::Mmse => write!(f, "mmse"),
            PrecoderChoice::Rslnr => write!(f, "rslnr"),
            PrecoderChoice::Sac(path) => write!(f, "sac:{}", path.display()),
        }
    }
}

impl FromStr for PrecoderChoice {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mmse" => Ok(PrecoderChoice::Mmse),
            "rslnr" => Ok(PrecoderChoice::Rslnr),
            other => match other.strip_prefix("sac:") {
                Some(path) if !path.is_empty() => Ok(PrecoderChoice::Sac(PathBuf::from(path))),
                _ => Err(HarnessError::UnknownPrecoder(other.to_string())),
            },
        }
    }
}

/// Full description of one sweep run.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    /// Scenario id the config came from (recorded in output headers).
    pub scenario: String,
    /// Resolved config; its `error_bound` is overridden per sweep point.
    pub config: ScenarioConfig,
    pub error_bounds: Vec<f64>,
    pub monte_carlo_iters: usize,
    pub precoders: Vec<PrecoderChoice>,
    pub seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.config.validate()?;
        if self.monte_carlo_iters < 1 {
            return Err(HarnessError::InvalidSweep(
                "monte_carlo_iters must be >= 1".into(),
            ));
        }
        if self.error_bounds.is_empty() {
            return Err(HarnessError::InvalidSweep(
                "need at least one error bound".into(),
            ));
        }
        let sorted = self
            .error_bounds
            .windows(2)
            .all(|w| w[0] < w[1]);
        let nonneg = self.error_bounds.iter().all(|b| *b >= 0.0 && b.is_finite());
        if !sorted || !nonneg {
            return Err(HarnessError::InvalidSweep(format!(
                "error bounds must be non-negative and strictly ascending, got {:?}",
                self.error_bounds
            )));
        }
        if self.precoders.is_empty() {
            return Err(HarnessError::InvalidSweep(
                "need at least one precoder".into(),
            ));
        }
        Ok(())
    }
}

/// A neural policy ready for deterministic evaluation.
#[derive(Clone)]
pub(crate) struct LoadedPolicy {
    pub(crate) label: String,
    pub(crate) actor: MlpNetwork,
    pub(crate) stats: StandardizationStats,
    pub(crate) transform: Transform,
}

/// All sum rates of one (precoder, bound) cell.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub precoder: String,
    pub error_bound: f64,
    /// One realized sum rate per Monte Carlo iteration, iteration order.
    pub records: Vec<f64>,
    /// The derived seed each iteration's realization came from.
    pub iteration_seeds: Vec<u64>,
}

impl SweepCell {
    pub fn mean(&self) -> f64 {
        self.records.iter().sum::<f64>() / self.records.len() as f64
    }

    /// Sample standard deviation (n - 1 in the denominator).
    pub fn std(&self) -> f64 {
        if self.records.len() < 2 {
            return 0.0;
        }
        let mean = self.mean();
        let ss: f64 = self.records.iter().map(|r| (r - mean) * (r - mean)).sum();
        (ss / (self.records.len() - 1) as f64).sqrt()
    }
}

/// Sweep output: one cell per (precoder, bound), plus provenance.
#[derive(Debug, Clone)]
pub struct SweepResult {
    /// Cells in precoder-major, then bound order, following the request's
    /// `precoders` and `error_bounds` lists.
    pub cells: Vec<SweepCell>,
    pub config_hash: String,
    pub seed: u64,
    /// `(label, content hash)` for every loaded checkpoint.
    pub checkpoint_ids: Vec<(String, String)>,
}

impl SweepResult {
    pub fn cell(&self, precoder: &str, bound: f64) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.precoder == precoder && c.error_bound == bound)
    }
}

pub(crate) fn load_policy(path: &PathBuf, cfg: &ScenarioConfig, label: String) -> Result<(LoadedPolicy, String), HarnessError> {
    let bytes = std::fs::read(path)?;
    let learner = load_learner(&bytes)?;
    if learner.cfg.num_users != cfg.num_users || learner.cfg.num_antennas != cfg.num_antennas {
        return Err(HarnessError::CheckpointMismatch {
            path: path.display().to_string(),
            ckpt_users: learner.cfg.num_users,
            ckpt_antennas: learner.cfg.num_antennas,
            want_users: cfg.num_users,
            want_antennas: cfg.num_antennas,
        });
    }
    let id = bytes_hash(&bytes);
    Ok((
        LoadedPolicy {
            label,
            actor: learner.actor,
            stats: learner.stats,
            transform: learner.hyper.transform,
        },
        id,
    ))
}

/// Evaluate one precoder on one realization, returning its sum rate.
pub(crate) fn evaluate_one(
    choice: &PrecoderChoice,
    policies: &mut [LoadedPolicy],
    realization: &ChannelRealization,
    cfg: &ScenarioConfig,
) -> Result<f64, HarnessError> {
    let rate = match choice {
        PrecoderChoice::Mmse => {
            let w = mmse_precoder(
                &realization.estimated_channel,
                cfg.transmit_power_w,
                cfg.noise_power_w,
            )?;
            sum_rate(&realization.true_channel, &w, cfg.noise_power_w).sum_rate
        }
        PrecoderChoice::Rslnr => {
            let w = rslnr_from_realization(realization, cfg)?;
            sum_rate(&realization.true_channel, &w, cfg.noise_power_w).sum_rate
        }
        PrecoderChoice::Sac(_) => {
            let label = choice.label();
            let policy = policies
                .iter_mut()
                .find(|p| p.label == label)
                .expect("policy loaded up front");
            let (_, report) =
                evaluate_mean_action(&mut policy.actor, &policy.stats, policy.transform, cfg, realization)?;
            report.sum_rate
        }
    };
    Ok(rate)
}

/// Run the full sweep. Iterations parallelize across threads; the derived
/// per-iteration seeds make the result independent of the thread count.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, HarnessError> {
    spec.validate()?;
    let mut policies: Vec<LoadedPolicy> = Vec::new();
    let mut checkpoint_ids = Vec::new();
    for choice in &spec.precoders {
        if let PrecoderChoice::Sac(path) = choice {
            let (policy, id) = load_policy(path, &spec.config, choice.label())?;
            checkpoint_ids.push((policy.label.clone(), id));
            policies.push(policy);
        }
    }

    // rates[bound][iteration][precoder]
    let mut per_bound: Vec<Vec<Vec<f64>>> = Vec::with_capacity(spec.error_bounds.len());
    let mut per_bound_seeds: Vec<Vec<u64>> = Vec::with_capacity(spec.error_bounds.len());
    for (b_idx, bound) in spec.error_bounds.iter().enumerate() {
        let mut cfg = spec.config.clone();
        cfg.error_bound = *bound;
        let seeds: Vec<u64> = (0..spec.monte_carlo_iters)
            .map(|i| derive_seed2(spec.seed, b_idx as u64, i as u64))
            .collect();
        let rows: Result<Vec<Vec<f64>>, HarnessError> = seeds
            .par_iter()
            .map_init(
                || policies.clone(),
                |lane_policies, seed| {
                    let mut rng = seeded_rng(*seed);
                    let realization = sample_realization(&cfg, &mut rng);
                    spec.precoders
                        .iter()
                        .map(|choice| evaluate_one(choice, lane_policies, &realization, &cfg))
                        .collect()
                },
            )
            .collect();
        per_bound.push(rows?);
        per_bound_seeds.push(seeds);
    }

    let mut cells = Vec::new();
    for (p_idx, choice) in spec.precoders.iter().enumerate() {
        for (b_idx, bound) in spec.error_bounds.iter().enumerate() {
            cells.push(SweepCell {
                precoder: choice.label(),
                error_bound: *bound,
                records: per_bound[b_idx].iter().map(|row| row[p_idx]).collect(),
                iteration_seeds: per_bound_seeds[b_idx].clone(),
            });
        }
    }
    Ok(SweepResult {
        cells,
        config_hash: config_hash(&spec.config),
        seed: spec.seed,
        checkpoint_ids,
    })
}

fn common_meta(doc: &mut CsvDoc, spec: &SweepSpec, result: &SweepResult) {
    doc.meta("command", "sweep");
    doc.meta("scenario", &spec.scenario);
    doc.meta(
        "error_bounds",
        spec.error_bounds
            .iter()
            .map(|b| fmt_f64(*b))
            .collect::<Vec<_>>()
            .join(" "),
    );
    doc.meta("monte_carlo_iters", spec.monte_carlo_iters);
    doc.meta(
        "precoders",
        spec.precoders
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(" "),
    );
    for (label, id) in &result.checkpoint_ids {
        doc.meta(&format!("checkpoint:{label}"), id);
    }
    doc.meta_config(&spec.config, spec.seed);
}

/// Per-iteration records, one row per (precoder, bound, iteration).
pub fn records_csv(spec: &SweepSpec, result: &SweepResult) -> CsvDoc {
    let mut doc = CsvDoc::new(&[
        "precoder",
        "error_bound",
        "iteration",
        "realization_seed",
        "sum_rate_bps_hz",
    ]);
    common_meta(&mut doc, spec, result);
    for cell in &result.cells {
        for (i, rate) in cell.records.iter().enumerate() {
            doc.push_row(vec![
                cell.precoder.clone(),
                fmt_f64(cell.error_bound),
                i.to_string(),
                cell.iteration_seeds[i].to_string(),
                fmt_f64(*rate),
            ]);
        }
    }
    doc
}

/// Summary statistics, one row per (precoder, bound).
pub fn summary_csv(spec: &SweepSpec, result: &SweepResult) -> CsvDoc {
    let mut doc = CsvDoc::new(&[
        "precoder",
        "error_bound",
        "mean_sum_rate_bps_hz",
        "std_sum_rate_bps_hz",
        "iterations",
    ]);
    common_meta(&mut doc, spec, result);
    for cell in &result.cells {
        doc.push_row(vec![
            cell.precoder.clone(),
            fmt_f64(cell.error_bound),
            fmt_f64(cell.mean()),
            fmt_f64(cell.std()),
            cell.records.len().to_string(),
        ]);
    }
    doc
}

/// Mean sum rate vs error bound, one curve per precoder, ±std bars.
pub fn sweep_plot(spec: &SweepSpec, result: &SweepResult) -> LinePlot {
    let series = spec
        .precoders
        .iter()
        .map(|choice| {
            let label = choice.label();
            let mut points = Vec::new();
            let mut bars = Vec::new();
            for bound in &spec.error_bounds {
                let cell = result.cell(&label, *bound).expect("cell exists");
                points.push((*bound, cell.mean()));
                bars.push(cell.std());
            }
            Series {
                label,
                points,
                error_bars: Some(bars),
            }
        })
        .collect();
    LinePlot {
        title: format!(
            "Mean sum rate vs error bound — scenario {}, {} iterations",
            spec.scenario, spec.monte_carlo_iters
        ),
        x_label: "angle error bound B".into(),
        y_label: "sum rate [bit/s/Hz]".into(),
        series,
        markers: vec![],
    }
}
