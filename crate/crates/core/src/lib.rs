//! Link-level simulation of a single-LEO-satellite SDMA downlink with
//! imperfect position knowledge, plus the precoders evaluated on it.
//!
//! The crate is organized around the simulation pipeline:
//!
//! - [`config`] — scenario constants (geometry, gains, power, error bound)
//!   loaded from plain-text key/value files.
//! - [`channel`] — user geometry, LOS channel vectors, and the multiplicative
//!   steering error that models erroneous angle-of-departure estimates.
//! - [`metrics`] — SINR, SLNR, sum rate, and beam-gain patterns.
//! - [`mmse`] — the regularized channel-inverse benchmark precoder.
//! - [`rslnr`] — the robust mean-SLNR precoder built from steering
//!   autocorrelation statistics of the angle error.
//! - [`nn`] / [`optim`] — a small dense/batch-norm network engine with
//!   reverse-mode gradients, Adam, and a cosine learning-rate schedule.
//! - [`sac`] — a soft actor-critic learner that trains a neural precoder
//!   against the simulated link.
//! - [`checkpoint`] — versioned binary serialization of trained learners.
//!
//! Everything is `f64` and deterministic given a seed: random draws go
//! through [`seeding`] so that independent streams can be derived for
//! parallel work without sharing state.

pub mod channel;
pub mod checkpoint;
pub mod config;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod mmse;
pub mod nn;
pub mod optim;
pub mod rslnr;
pub mod sac;
pub mod seeding;

pub use config::{PhaseMode, ScenarioConfig};
pub use error::{CheckpointError, ConfigError, NetError, PrecoderError, SacError};
pub use metrics::{PrecodingMatrix, RateReport};

/// Complex scalar used throughout the channel and precoding code.
pub type C64 = num_complex::Complex64;
