//! Beam-gain curves of every precoder on one specific channel realization,
//! with the true and (erroneous) estimated user angles marked.

use crate::report::{fmt_f64, CsvDoc};
use crate::svg::{LinePlot, Series, VerticalMarker};
use crate::sweep::{load_policy, LoadedPolicy, PrecoderChoice};
use crate::HarnessError;
use leobeam_core::channel::sample_realization;
use leobeam_core::metrics::{beam_pattern, sum_rate};
use leobeam_core::mmse::mmse_precoder;
use leobeam_core::rslnr::rslnr_from_realization;
use leobeam_core::sac::evaluate_mean_action;
use leobeam_core::seeding::seeded_rng;
use leobeam_core::{PrecodingMatrix, ScenarioConfig};
use ndarray::Array2;

/// Inputs of one beam-pattern export.
#[derive(Debug, Clone)]
pub struct BeamPatternSpec {
    pub scenario: String,
    /// Resolved config; `error_bound` is the B the realization is drawn at.
    pub config: ScenarioConfig,
    pub precoders: Vec<PrecoderChoice>,
    /// Number of angle-of-departure grid points over `[0, pi]`.
    pub grid_points: usize,
    pub seed: u64,
}

/// One precoder's curves: gain per user over the grid, plus its sum rate.
#[derive(Debug, Clone)]
pub struct PatternCurve {
    pub precoder: String,
    /// `K x G` beam amplitude gains.
    pub gains: Array2<f64>,
    pub sum_rate: f64,
}

/// Everything needed to draw or re-derive the figure.
#[derive(Debug, Clone)]
pub struct BeamPatternData {
    pub aod_grid_rad: Vec<f64>,
    pub curves: Vec<PatternCurve>,
    pub true_aod_rad: Vec<f64>,
    pub estimated_aod_rad: Vec<f64>,
    pub checkpoint_ids: Vec<(String, String)>,
}

fn precoder_matrix(
    choice: &PrecoderChoice,
    policies: &mut [LoadedPolicy],
    realization: &leobeam_core::channel::ChannelRealization,
    cfg: &ScenarioConfig,
) -> Result<PrecodingMatrix, HarnessError> {
    Ok(match choice {
        PrecoderChoice::Mmse => mmse_precoder(
            &realization.estimated_channel,
            cfg.transmit_power_w,
            cfg.noise_power_w,
        )?,
        PrecoderChoice::Rslnr => rslnr_from_realization(realization, cfg)?,
        PrecoderChoice::Sac(_) => {
            let label = choice.label();
            let policy = policies
                .iter_mut()
                .find(|p| p.label == label)
                .expect("policy loaded up front");
            evaluate_mean_action(&mut policy.actor, &policy.stats, policy.transform, cfg, realization)?.0
        }
    })
}

/// Draw one realization from the seed and trace every precoder's beams.
pub fn run_beam_pattern(spec: &BeamPatternSpec) -> Result<BeamPatternData, HarnessError> {
    spec.config.validate()?;
    assert!(spec.grid_points >= 2, "need at least two grid points");
    let mut policies = Vec::new();
    let mut checkpoint_ids = Vec::new();
    for choice in &spec.precoders {
        if let PrecoderChoice::Sac(path) = choice {
            let (policy, id) = load_policy(path, &spec.config, choice.label())?;
            checkpoint_ids.push((policy.label.clone(), id));
            policies.push(policy);
        }
    }

    let mut rng = seeded_rng(spec.seed);
    let realization = sample_realization(&spec.config, &mut rng);
    let grid: Vec<f64> = (0..spec.grid_points)
        .map(|i| std::f64::consts::PI * i as f64 / (spec.grid_points - 1) as f64)
        .collect();

    let mut curves = Vec::new();
    for choice in &spec.precoders {
        let w = precoder_matrix(choice, &mut policies, &realization, &spec.config)?;
        let gains = beam_pattern(&w, &spec.config, &grid);
        let rate = sum_rate(&realization.true_channel, &w, spec.config.noise_power_w).sum_rate;
        curves.push(PatternCurve {
            precoder: choice.label(),
            gains,
            sum_rate: rate,
        });
    }

    let true_aod_rad = realization.users.iter().map(|u| u.aod_rad).collect();
    let estimated_aod_rad = realization
        .estimated_space_angles()
        .iter()
        .map(|phi| phi.clamp(-1.0, 1.0).acos())
        .collect();
    Ok(BeamPatternData {
        aod_grid_rad: grid,
        curves,
        true_aod_rad,
        estimated_aod_rad,
        checkpoint_ids,
    })
}

/// Width of the main lobe at half power (amplitude `peak / sqrt(2)`),
/// measured in the units of `xs` around the global maximum. Crossings are
/// linearly interpolated; a lobe running off the grid ends at the boundary.
pub fn half_power_beamwidth(xs: &[f64], gains: &[f64]) -> f64 {
    assert_eq!(xs.len(), gains.len());
    assert!(xs.len() >= 2);
    let peak_idx = gains
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let level = gains[peak_idx] / std::f64::consts::SQRT_2;

    let cross = |i_in: usize, i_out: usize| -> f64 {
        // Interpolate between a point above the level and its neighbor below.
        let (g_in, g_out) = (gains[i_in], gains[i_out]);
        let t = (g_in - level) / (g_in - g_out);
        xs[i_in] + t * (xs[i_out] - xs[i_in])
    };

    let mut left = xs[0];
    for i in (0..peak_idx).rev() {
        if gains[i] < level {
            left = cross(i + 1, i);
            break;
        }
    }
    let mut right = xs[xs.len() - 1];
    for i in peak_idx + 1..xs.len() {
        if gains[i] < level {
            right = cross(i - 1, i);
            break;
        }
    }
    (right - left).abs()
}

/// CSV with one row per grid point; gain columns in precoder-major, then
/// user order.
pub fn pattern_csv(spec: &BeamPatternSpec, data: &BeamPatternData) -> CsvDoc {
    let mut names: Vec<String> = vec!["aod_rad".into(), "space_angle".into()];
    for curve in &data.curves {
        for k in 0..spec.config.num_users {
            names.push(format!("gain_{}_user{}", curve.precoder, k + 1));
        }
    }
    let cols: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let mut doc = CsvDoc::new(&cols);
    doc.meta("command", "beampattern");
    doc.meta("scenario", &spec.scenario);
    doc.meta("grid_points", spec.grid_points);
    let join = |v: &[f64]| {
        v.iter()
            .map(|x| fmt_f64(*x))
            .collect::<Vec<_>>()
            .join(" ")
    };
    doc.meta("true_aod_rad", join(&data.true_aod_rad));
    doc.meta("estimated_aod_rad", join(&data.estimated_aod_rad));
    for curve in &data.curves {
        doc.meta(
            &format!("sum_rate_bps_hz:{}", curve.precoder),
            fmt_f64(curve.sum_rate),
        );
    }
    for (label, id) in &data.checkpoint_ids {
        doc.meta(&format!("checkpoint:{label}"), id);
    }
    doc.meta_config(&spec.config, spec.seed);

    for (g, aod) in data.aod_grid_rad.iter().enumerate() {
        let mut row = vec![fmt_f64(*aod), fmt_f64(aod.cos())];
        for curve in &data.curves {
            for k in 0..spec.config.num_users {
                row.push(fmt_f64(curve.gains[(k, g)]));
            }
        }
        doc.push_row(row);
    }
    doc
}

/// Gain-vs-angle plot: per-user curves for each precoder, user angles as
/// vertical markers (solid true, dashed estimated).
pub fn pattern_plot(spec: &BeamPatternSpec, data: &BeamPatternData) -> LinePlot {
    let deg = 180.0 / std::f64::consts::PI;
    let mut series = Vec::new();
    for curve in &data.curves {
        for k in 0..spec.config.num_users {
            let points: Vec<(f64, f64)> = data
                .aod_grid_rad
                .iter()
                .enumerate()
                .map(|(g, aod)| (aod * deg, curve.gains[(k, g)]))
                .collect();
            series.push(Series {
                label: format!("{} u{} (R={:.2})", curve.precoder, k + 1, curve.sum_rate),
                points,
                error_bars: None,
            });
        }
    }
    let mut markers = Vec::new();
    for (k, aod) in data.true_aod_rad.iter().enumerate() {
        markers.push(VerticalMarker {
            x: aod * deg,
            label: format!("u{} true", k + 1),
            dashed: false,
        });
    }
    for (k, aod) in data.estimated_aod_rad.iter().enumerate() {
        markers.push(VerticalMarker {
            x: aod * deg,
            label: format!("u{} est", k + 1),
            dashed: true,
        });
    }
    LinePlot {
        title: format!(
            "Beam patterns — scenario {}, B = {}, seed {}",
            spec.scenario,
            fmt_f64(spec.config.error_bound),
            spec.seed
        ),
        x_label: "angle of departure [deg]".into(),
        y_label: "beam amplitude gain".into(),
        series,
        markers,
    }
}
