//! Scenario configuration: every physical and geometric constant of the
//! downlink model, plus the error bound and reproducibility knobs.
//!
//! Configs load from plain-text `key = value` files. Keys mirror the field
//! names below; antenna gains are given in dBi in the file and converted to
//! linear at load time. [`ScenarioConfig::canonical_text`] produces a stable
//! serialization used for provenance hashes and for embedding the config in
//! output files and checkpoints.

use crate::error::ConfigError;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// Convention for the overall satellite-to-user phase shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMode {
    /// Phase derived from the slant distance: `(2 pi d / lambda) mod 2 pi`.
    /// Physically consistent and reproducible run to run.
    Distance,
    /// Phase drawn uniformly from `[0, 2 pi)` per user per realization.
    UniformRandom,
}

impl fmt::Display for PhaseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseMode::Distance => write!(f, "distance"),
            PhaseMode::UniformRandom => write!(f, "uniform-random"),
        }
    }
}

impl FromStr for PhaseMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "distance" => Ok(PhaseMode::Distance),
            "uniform-random" => Ok(PhaseMode::UniformRandom),
            other => Err(format!(
                "expected `distance` or `uniform-random`, got `{other}`"
            )),
        }
    }
}

/// Physical and simulation constants for one downlink scenario.
///
/// Gains are stored linear; the config file takes them in dBi.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Number of ULA antennas at the satellite (N).
    pub num_antennas: usize,
    /// Number of single-antenna users (K).
    pub num_users: usize,
    /// Satellite altitude above the user plane in meters (d0).
    pub altitude_m: f64,
    /// Carrier wavelength in meters.
    pub wavelength_m: f64,
    /// Inter-antenna distance in meters.
    pub antenna_spacing_m: f64,
    /// Total transmit power budget in watts (P).
    pub transmit_power_w: f64,
    /// Receiver noise power in watts (sigma^2).
    pub noise_power_w: f64,
    /// Satellite transmit gain, linear.
    pub sat_gain: f64,
    /// Per-user receive gain, linear.
    pub user_gain: f64,
    /// Mean inter-user distance in meters (D-bar); also the width of the
    /// uniform position jitter around each mean position.
    pub mean_user_distance_m: f64,
    /// Standard deviation of the lognormal large-scale fading term, in dB.
    pub fading_std_db: f64,
    /// Bound B of the uniform space-angle error `U(-B, +B)`.
    pub error_bound: f64,
    /// Master seed recorded in every output.
    pub rng_seed: u64,
    /// Convention for the overall phase shift kappa.
    pub phase_mode: PhaseMode,
    /// When false, users sit exactly at their mean positions (test hook for
    /// analytic oracles).
    pub position_jitter: bool,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

impl Default for ScenarioConfig {
    /// Table-level defaults: 16-antenna satellite at 600 km serving three
    /// users spread 100 km apart, 100 W against 6e-13 W noise.
    fn default() -> Self {
        let wavelength_m = 0.15;
        ScenarioConfig {
            num_antennas: 16,
            num_users: 3,
            altitude_m: 600e3,
            wavelength_m,
            antenna_spacing_m: 1.5 * wavelength_m,
            transmit_power_w: 100.0,
            noise_power_w: 6e-13,
            sat_gain: db_to_linear(20.0),
            user_gain: db_to_linear(0.0),
            mean_user_distance_m: 100e3,
            fading_std_db: 1.0,
            error_bound: 0.0,
            rng_seed: 0,
            phase_mode: PhaseMode::Distance,
            position_jitter: true,
        }
    }
}

impl ScenarioConfig {
    /// Check the numeric invariants; every loader and constructor goes
    /// through this so downstream code can skip input validation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut problems: Vec<String> = Vec::new();
        if self.num_antennas < 1 {
            problems.push("num_antennas must be >= 1".into());
        }
        if self.num_users < 1 {
            problems.push("num_users must be >= 1".into());
        }
        let positive = [
            ("altitude_m", self.altitude_m),
            ("wavelength_m", self.wavelength_m),
            ("antenna_spacing_m", self.antenna_spacing_m),
            ("transmit_power_w", self.transmit_power_w),
            ("noise_power_w", self.noise_power_w),
            ("sat_gain", self.sat_gain),
            ("user_gain", self.user_gain),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                problems.push(format!("{name} must be finite and > 0, got {v}"));
            }
        }
        let nonneg = [
            ("mean_user_distance_m", self.mean_user_distance_m),
            ("fading_std_db", self.fading_std_db),
            ("error_bound", self.error_bound),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                problems.push(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(problems.join("; ")))
        }
    }

    /// State dimension of the flattened complex channel estimate: `2 K N`.
    pub fn state_dim(&self) -> usize {
        2 * self.num_users * self.num_antennas
    }

    /// Parse from `key = value` text. Unlisted keys keep their defaults;
    /// unknown keys are an error.
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ScenarioConfig::default();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: line_no,
                text: raw_line.trim().to_string(),
            })?;
            let key = key.trim();
            let value = value.trim();
            cfg.set_key(key, value).map_err(|e| match e {
                SetKeyError::Unknown => ConfigError::UnknownKey {
                    line: line_no,
                    key: key.to_string(),
                },
                SetKeyError::Parse(reason) => ConfigError::BadValue {
                    key: key.to_string(),
                    value: value.to_string(),
                    reason,
                },
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    /// Apply one `key = value` override (same keys as the config file).
    pub fn set_key(&mut self, key: &str, value: &str) -> Result<(), SetKeyError> {
        fn num<T: FromStr>(value: &str) -> Result<T, SetKeyError>
        where
            T::Err: fmt::Display,
        {
            value
                .parse::<T>()
                .map_err(|e| SetKeyError::Parse(e.to_string()))
        }
        match key {
            "num_antennas" => self.num_antennas = num(value)?,
            "num_users" => self.num_users = num(value)?,
            "altitude_m" => self.altitude_m = num(value)?,
            "wavelength_m" => self.wavelength_m = num(value)?,
            "antenna_spacing_m" => self.antenna_spacing_m = num(value)?,
            "transmit_power_w" => self.transmit_power_w = num(value)?,
            "noise_power_w" => self.noise_power_w = num(value)?,
            "sat_gain_dbi" => self.sat_gain = db_to_linear(num(value)?),
            "user_gain_dbi" => self.user_gain = db_to_linear(num(value)?),
            "mean_user_distance_m" => self.mean_user_distance_m = num(value)?,
            "fading_std_db" => self.fading_std_db = num(value)?,
            "error_bound" => self.error_bound = num(value)?,
            "rng_seed" => self.rng_seed = num(value)?,
            "phase_mode" => self.phase_mode = value.parse().map_err(SetKeyError::Parse)?,
            "position_jitter" => self.position_jitter = num(value)?,
            _ => return Err(SetKeyError::Unknown),
        }
        Ok(())
    }

    /// Stable `key = value` serialization. Reloading it reproduces the
    /// config exactly (gains round-trip through dB), so it doubles as the
    /// provenance record embedded in outputs and checkpoints.
    pub fn canonical_text(&self) -> String {
        let mut s = String::new();
        let mut push = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        push("num_antennas", self.num_antennas.to_string());
        push("num_users", self.num_users.to_string());
        push("altitude_m", format!("{}", self.altitude_m));
        push("wavelength_m", format!("{}", self.wavelength_m));
        push("antenna_spacing_m", format!("{}", self.antenna_spacing_m));
        push("transmit_power_w", format!("{}", self.transmit_power_w));
        push("noise_power_w", format!("{}", self.noise_power_w));
        push("sat_gain_dbi", format!("{}", linear_to_db(self.sat_gain)));
        push("user_gain_dbi", format!("{}", linear_to_db(self.user_gain)));
        push(
            "mean_user_distance_m",
            format!("{}", self.mean_user_distance_m),
        );
        push("fading_std_db", format!("{}", self.fading_std_db));
        push("error_bound", format!("{}", self.error_bound));
        push("rng_seed", self.rng_seed.to_string());
        push("phase_mode", self.phase_mode.to_string());
        push("position_jitter", self.position_jitter.to_string());
        s
    }
}

/// Error from [`ScenarioConfig::set_key`].
#[derive(Debug)]
pub enum SetKeyError {
    Unknown,
    Parse(String),
}

impl fmt::Display for SetKeyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetKeyError::Unknown => write!(f, "unknown key"),
            SetKeyError::Parse(r) => write!(f, "parse error: {r}"),
        }
    }
}

impl std::error::Error for SetKeyError {}
