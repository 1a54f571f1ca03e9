//! Experiment orchestration on top of `leobeam-core`: named scenarios,
//! paired Monte Carlo sweeps over the angle-error bound, beam-pattern
//! export, training runs, and self-describing CSV/SVG outputs.
//!
//! Every artifact written by this crate embeds the resolved scenario
//! config, its hash, and the master seed in `#`-prefixed header lines, so
//! any output can be reproduced from its own header alone.

pub mod beampattern;
pub mod cli;
pub mod report;
pub mod scenario;
pub mod svg;
pub mod sweep;
pub mod training;

use leobeam_core::{CheckpointError, ConfigError, PrecoderError, SacError};

/// Errors surfaced by the orchestration layer.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    /// A checkpoint was trained on a different (users, antennas) geometry
    /// than the scenario it is asked to serve.
    #[error(
        "checkpoint mismatch: {path} was trained for K={ckpt_users}, N={ckpt_antennas} \
         but the scenario has K={want_users}, N={want_antennas}"
    )]
    CheckpointMismatch {
        path: String,
        ckpt_users: usize,
        ckpt_antennas: usize,
        want_users: usize,
        want_antennas: usize,
    },
    #[error("unknown scenario {0:?} (expected a, b, c, or tiny)")]
    UnknownScenario(String),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("unknown precoder {0:?} (expected mmse, rslnr, or sac:<checkpoint path>)")]
    UnknownPrecoder(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Precoder(#[from] PrecoderError),
    #[error(transparent)]
    Sac(#[from] SacError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
