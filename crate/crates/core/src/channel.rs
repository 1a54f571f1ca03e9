//! User geometry, LOS channel vectors, and erroneous channel estimates.
//!
//! Users sit on the ground track along the array axis. User `k` (1-based) has
//! mean offset `(k - (K+1)/2) * D` from the sub-satellite point, with a
//! uniform jitter of `±D/2` per realization, so the constellation is centered
//! below the satellite. All beam math runs on the space angle `cos(eps)`;
//! degrees appear only at the plotting boundary.
//!
//! The angle-of-departure estimate carries a uniform error `U(-B, +B)` on the
//! space angle, which enters the channel estimate as an elementwise
//! multiplication with the steering vector of the error angle. The estimate
//! therefore differs from the true channel in phase only.

use crate::config::{PhaseMode, ScenarioConfig};
use crate::C64;
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::{PI, TAU};

/// Geometry and propagation state of one user in one realization.
#[derive(Debug, Clone)]
pub struct UserState {
    /// Signed ground offset along the array axis from the sub-satellite
    /// point, meters.
    pub ground_offset_m: f64,
    /// Slant distance satellite-to-user, meters.
    pub distance_m: f64,
    /// Angle of departure, radians; `acos(space_angle)`.
    pub aod_rad: f64,
    /// Space angle `cos(eps)` in [-1, 1]; 0 for a user directly below.
    pub space_angle: f64,
    /// Linear path loss including large-scale fading.
    pub path_loss_linear: f64,
    /// Large-scale fading draw, dB.
    pub fading_db: f64,
    /// Overall phase shift kappa in [0, 2 pi).
    pub phase_rad: f64,
}

/// One simulation step: true channel, erroneous estimate, and the state that
/// generated them.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// True channel matrix, K x N; row k is user k's channel vector.
    pub true_channel: Array2<C64>,
    /// Estimated channel matrix, K x N; equals the true channel with a
    /// per-user steering error applied. Entry magnitudes match the true
    /// channel exactly.
    pub estimated_channel: Array2<C64>,
    /// Per-user geometry.
    pub users: Vec<UserState>,
    /// Per-user space-angle errors, each in [-B, +B].
    pub angle_errors: Vec<f64>,
}

impl ChannelRealization {
    /// Erroneous space-angle estimates `cos(eps_k) + delta_k`, the quantity
    /// a position-based precoder would work from.
    pub fn estimated_space_angles(&self) -> Vec<f64> {
        self.users
            .iter()
            .zip(&self.angle_errors)
            .map(|(u, d)| u.space_angle + d)
            .collect()
    }

    /// Realized linear path losses per user.
    pub fn path_losses(&self) -> Vec<f64> {
        self.users.iter().map(|u| u.path_loss_linear).collect()
    }
}

/// Linear free-space path loss `16 pi^2 d^2 / (lambda^2 Gu Gs)`.
pub fn free_space_path_loss(distance_m: f64, cfg: &ScenarioConfig) -> f64 {
    assert!(distance_m > 0.0, "distance must be positive");
    16.0 * PI * PI * distance_m * distance_m
        / (cfg.wavelength_m * cfg.wavelength_m * cfg.user_gain * cfg.sat_gain)
}

/// Steering vector of the ULA at a given space angle.
///
/// Entry `n` (1-based) is `exp(-j pi (d_a/lambda) (N + 1 - 2n) * space_angle)`;
/// all entries have unit magnitude. The argument is not restricted to
/// [-1, 1]: beam-pattern sweeps and error shifts evaluate outside the
/// physical range.
pub fn steering_vector(space_angle: f64, cfg: &ScenarioConfig) -> Array1<C64> {
    let n_ant = cfg.num_antennas;
    let coeff = PI * cfg.antenna_spacing_m / cfg.wavelength_m;
    Array1::from_iter((1..=n_ant).map(|n| {
        let phase = -coeff * ((n_ant as f64) + 1.0 - 2.0 * (n as f64)) * space_angle;
        C64::from_polar(1.0, phase)
    }))
}

/// LOS channel vector of one user: `(1/sqrt(L)) e^{-j kappa} v(cos eps)`.
pub fn channel_vector(user: &UserState, cfg: &ScenarioConfig) -> Array1<C64> {
    let scale = C64::from_polar(1.0 / user.path_loss_linear.sqrt(), -user.phase_rad);
    steering_vector(user.space_angle, cfg) * scale
}

/// Apply a space-angle error as a multiplicative steering error:
/// `h ∘ v(delta)`. Identical to rebuilding the channel at
/// `space_angle + delta` with the same phase and path loss.
pub fn apply_aod_error(h: &Array1<C64>, delta: f64, cfg: &ScenarioConfig) -> Array1<C64> {
    h * &steering_vector(delta, cfg)
}

/// Draw the K user states for one simulation step.
///
/// Per user, in order: position jitter `U(-D/2, +D/2)` (skipped when the
/// jitter hook is off), fading `N(0, sigma_LF^2)` dB, then the phase draw if
/// `phase_mode` is uniform-random. The draw order is part of the determinism
/// contract.
pub fn sample_user_positions<R: Rng>(cfg: &ScenarioConfig, rng: &mut R) -> Vec<UserState> {
    let k_total = cfg.num_users;
    let spread = cfg.mean_user_distance_m;
    let fading = Normal::new(0.0, cfg.fading_std_db).expect("validated std");
    (1..=k_total)
        .map(|k| {
            let mean_offset = (k as f64 - (k_total as f64 + 1.0) / 2.0) * spread;
            let jitter = if cfg.position_jitter && spread > 0.0 {
                rng.random_range(-spread / 2.0..spread / 2.0)
            } else {
                0.0
            };
            let x = mean_offset + jitter;
            let d = (cfg.altitude_m * cfg.altitude_m + x * x).sqrt();
            let space_angle = x / d;
            let fading_db = if cfg.fading_std_db > 0.0 {
                fading.sample(rng)
            } else {
                0.0
            };
            let path_loss_linear =
                free_space_path_loss(d, cfg) * 10f64.powf(fading_db / 10.0);
            let phase_rad = match cfg.phase_mode {
                PhaseMode::Distance => (TAU * d / cfg.wavelength_m) % TAU,
                PhaseMode::UniformRandom => rng.random_range(0.0..TAU),
            };
            UserState {
                ground_offset_m: x,
                distance_m: d,
                aod_rad: space_angle.acos(),
                space_angle,
                path_loss_linear,
                fading_db,
                phase_rad,
            }
        })
        .collect()
}

/// Draw one full channel realization: user states, true channel rows, one
/// space-angle error `U(-B, +B)` per user, and the resulting estimate rows.
pub fn sample_realization<R: Rng>(cfg: &ScenarioConfig, rng: &mut R) -> ChannelRealization {
    let users = sample_user_positions(cfg, rng);
    let b = cfg.error_bound;
    let angle_errors: Vec<f64> = (0..cfg.num_users)
        .map(|_| {
            if b > 0.0 {
                rng.random_range(-b..b)
            } else {
                0.0
            }
        })
        .collect();

    let n = cfg.num_antennas;
    let mut true_channel = Array2::zeros((cfg.num_users, n));
    let mut estimated_channel = Array2::zeros((cfg.num_users, n));
    for (k, user) in users.iter().enumerate() {
        let h = channel_vector(user, cfg);
        let h_est = apply_aod_error(&h, angle_errors[k], cfg);
        true_channel.row_mut(k).assign(&h);
        estimated_channel.row_mut(k).assign(&h_est);
    }
    ChannelRealization {
        true_channel,
        estimated_channel,
        users,
        angle_errors,
    }
}
