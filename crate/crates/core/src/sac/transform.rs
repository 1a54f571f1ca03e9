//! Mappings between the complex channel world and the real network world.
//!
//! States: the estimated channel matrix is flattened row-major, each complex
//! entry decomposed into two reals (magnitude/phase or real/imaginary,
//! interleaved), then standardized per dimension with frozen statistics.
//! Actions: consecutive real pairs become complex precoder entries, reshaped
//! row-major to N x K and projected onto the power sphere.

use crate::config::ScenarioConfig;
use crate::error::SacError;
use crate::metrics::PrecodingMatrix;
use crate::{channel, C64};
use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::fmt;
use std::str::FromStr;

/// How a complex entry becomes two real features.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    /// `(|z|, arg(z))` — works best for the network input.
    MagnitudePhase,
    /// `(Re(z), Im(z))` — used on the action side.
    RealImag,
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Transform::MagnitudePhase => "magnitude-phase",
            Transform::RealImag => "real-imag",
        })
    }
}

impl FromStr for Transform {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "magnitude-phase" => Ok(Transform::MagnitudePhase),
            "real-imag" => Ok(Transform::RealImag),
            other => Err(format!(
                "unknown transform `{other}` (expected `magnitude-phase` or `real-imag`)"
            )),
        }
    }
}

/// Frozen per-dimension standardization statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizationStats {
    pub mean: Vec<f64>,
    /// Per-dimension scale (population standard deviation, floored).
    pub scale: Vec<f64>,
    /// Number of samples the statistics were estimated from; zero means
    /// uncalibrated.
    pub sample_count: usize,
}

/// Smallest allowed scale; constant dimensions map to zero instead of
/// dividing by zero.
pub const SCALE_FLOOR: f64 = 1e-12;

impl StandardizationStats {
    /// Placeholder that refuses to standardize until calibration runs.
    pub fn uncalibrated(dim: usize) -> Self {
        StandardizationStats {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
            sample_count: 0,
        }
    }

    /// Identity statistics (mean 0, scale 1), marked calibrated; useful for
    /// tests and for running without standardization.
    pub fn identity(dim: usize) -> Self {
        StandardizationStats {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
            sample_count: usize::MAX,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn is_calibrated(&self) -> bool {
        self.sample_count > 0
    }
}

/// Flatten a complex matrix row-major into interleaved real features.
pub fn raw_features(h: &Array2<C64>, transform: Transform) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * h.len());
    for z in h.iter() {
        match transform {
            Transform::MagnitudePhase => {
                out.push(z.norm());
                out.push(z.arg());
            }
            Transform::RealImag => {
                out.push(z.re);
                out.push(z.im);
            }
        }
    }
    out
}

/// Build the standardized state vector from a channel estimate.
pub fn state_from_estimate(
    h_est: &Array2<C64>,
    stats: &StandardizationStats,
    transform: Transform,
) -> Result<Vec<f64>, SacError> {
    if !stats.is_calibrated() {
        return Err(SacError::NotCalibrated);
    }
    let raw = raw_features(h_est, transform);
    if raw.len() != stats.dim() {
        return Err(SacError::DimensionMismatch {
            expected: stats.dim(),
            got: raw.len(),
        });
    }
    Ok(raw
        .iter()
        .zip(stats.mean.iter().zip(&stats.scale))
        .map(|(x, (m, s))| (x - m) / s)
        .collect())
}

/// Estimate standardization statistics from fresh channel draws.
///
/// Population (1/n) standard deviation per dimension, floored at
/// [`SCALE_FLOOR`] so constant dimensions standardize to zero.
pub fn calibrate_standardization<R: Rng>(
    cfg: &ScenarioConfig,
    transform: Transform,
    n_samples: usize,
    rng: &mut R,
) -> StandardizationStats {
    assert!(n_samples >= 2, "need at least two calibration samples");
    let dim = cfg.state_dim();
    let mut sum = vec![0.0; dim];
    let mut sum_sq = vec![0.0; dim];
    for _ in 0..n_samples {
        let realization = channel::sample_realization(cfg, rng);
        let raw = raw_features(&realization.estimated_channel, transform);
        debug_assert_eq!(raw.len(), dim);
        for (i, x) in raw.iter().enumerate() {
            sum[i] += x;
            sum_sq[i] += x * x;
        }
    }
    let n = n_samples as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let scale: Vec<f64> = sum_sq
        .iter()
        .zip(&mean)
        .map(|(sq, m)| ((sq / n - m * m).max(0.0)).sqrt().max(SCALE_FLOOR))
        .collect();
    StandardizationStats {
        mean,
        scale,
        sample_count: n_samples,
    }
}

/// Turn an action vector into a precoding matrix on the power sphere.
///
/// Consecutive reals pair into complex entries (real, imaginary), reshaped
/// row-major to N x K and scaled by `sqrt(P)/||.||_F`, so the output power
/// is exactly `P`.
pub fn precoder_from_action(
    action: &[f64],
    power: f64,
    num_users: usize,
    num_antennas: usize,
) -> Result<PrecodingMatrix, SacError> {
    let expected = 2 * num_users * num_antennas;
    if action.len() != expected {
        return Err(SacError::DimensionMismatch {
            expected,
            got: action.len(),
        });
    }
    let mut matrix = Array2::zeros((num_antennas, num_users));
    for m in 0..num_users * num_antennas {
        let row = m / num_users;
        let col = m % num_users;
        matrix[(row, col)] = C64::new(action[2 * m], action[2 * m + 1]);
    }
    let norm: f64 = matrix.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(SacError::ZeroAction);
    }
    let matrix = matrix * C64::new(power.sqrt() / norm, 0.0);
    Ok(PrecodingMatrix {
        matrix,
        power_budget: power,
    })
}

/// Baseline precoder: a standard-normal action projected onto the power
/// sphere (uniform direction).
pub fn random_precoder<R: Rng>(
    power: f64,
    num_users: usize,
    num_antennas: usize,
    rng: &mut R,
) -> PrecodingMatrix {
    loop {
        let action: Vec<f64> = (0..2 * num_users * num_antennas)
            .map(|_| StandardNormal.sample(rng))
            .collect();
        match precoder_from_action(&action, power, num_users, num_antennas) {
            Ok(w) => return w,
            // Astronomically unlikely all-zero draw: try again.
            Err(SacError::ZeroAction) => continue,
            Err(e) => unreachable!("dimension is correct by construction: {e}"),
        }
    }
}
