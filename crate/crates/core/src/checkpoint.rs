//! Versioned binary checkpoints for the actor-critic learner.
//!
//! A checkpoint captures everything needed to reproduce evaluation and to
//! resume the random streams: scenario config, hyperparameters,
//! standardization vectors, all network parameters and running statistics,
//! Adam state with schedule position, the entropy temperature, step
//! counters, and the three RNG stream positions. The replay buffer is
//! deliberately not persisted — it is cheap to refill and dominates the
//! file size otherwise.
//!
//! The exact byte layout is documented in `docs/checkpoint-format.md`; all
//! integers and floats are little-endian, and a round trip through
//! [`save_learner`]/[`load_learner`] is bit-identical.

use crate::config::ScenarioConfig;
use crate::error::CheckpointError;
use crate::nn::MlpNetwork;
use crate::optim::AdamState;
use crate::sac::{
    EntropyTemperature, SacHyper, SacLearner, StandardizationStats, TemperatureMode, Transform,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;

/// Leading magic bytes of every checkpoint file.
pub const MAGIC: &[u8; 8] = b"LEOBEAM\0";
/// Current container version.
pub const VERSION: u32 = 1;

struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    fn new() -> Self {
        ByteWriter { buf: Vec::new() }
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u128(&mut self, v: u128) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn bytes(&mut self, v: &[u8]) {
        self.buf.extend_from_slice(v);
    }

    /// Length-prefixed float vector (count as u64).
    fn f64_vec(&mut self, v: &[f64]) {
        self.u64(v.len() as u64);
        for x in v {
            self.f64(*x);
        }
    }
}

struct ByteReader<'a> {
    data: &'a [u8],
    offset: usize,
}

impl<'a> ByteReader<'a> {
    fn new(data: &'a [u8]) -> Self {
        ByteReader { data, offset: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.offset + n > self.data.len() {
            return Err(CheckpointError::Truncated {
                offset: self.offset,
                wanted: n,
            });
        }
        let slice = &self.data[self.offset..self.offset + n];
        self.offset += n;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u128(&mut self) -> Result<u128, CheckpointError> {
        Ok(u128::from_le_bytes(self.take(16)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64_vec(&mut self) -> Result<Vec<f64>, CheckpointError> {
        let count = self.u64()? as usize;
        // Guard against absurd counts before allocating.
        if count.saturating_mul(8) > self.data.len() {
            return Err(CheckpointError::Corrupt(format!(
                "float vector of {count} entries exceeds file size"
            )));
        }
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push(self.f64()?);
        }
        Ok(out)
    }

    fn done(&self) -> Result<(), CheckpointError> {
        if self.offset != self.data.len() {
            return Err(CheckpointError::Corrupt(format!(
                "{} trailing bytes after checkpoint payload",
                self.data.len() - self.offset
            )));
        }
        Ok(())
    }
}

fn transform_tag(t: Transform) -> u8 {
    match t {
        Transform::MagnitudePhase => 0,
        Transform::RealImag => 1,
    }
}

fn transform_from_tag(tag: u8) -> Result<Transform, CheckpointError> {
    match tag {
        0 => Ok(Transform::MagnitudePhase),
        1 => Ok(Transform::RealImag),
        other => Err(CheckpointError::Corrupt(format!(
            "unknown transform tag {other}"
        ))),
    }
}

fn mode_tag(m: TemperatureMode) -> u8 {
    match m {
        TemperatureMode::Auto => 0,
        TemperatureMode::Fixed => 1,
    }
}

fn mode_from_tag(tag: u8) -> Result<TemperatureMode, CheckpointError> {
    match tag {
        0 => Ok(TemperatureMode::Auto),
        1 => Ok(TemperatureMode::Fixed),
        other => Err(CheckpointError::Corrupt(format!(
            "unknown temperature mode tag {other}"
        ))),
    }
}

fn write_network(w: &mut ByteWriter, net: &MlpNetwork, adam: &AdamState) {
    w.u32(net.input_dim() as u32);
    w.u32(net.output_dim() as u32);
    w.u32(net.hidden_widths().len() as u32);
    for width in net.hidden_widths() {
        w.u32(*width as u32);
    }
    w.f64_vec(&net.flat_params());
    w.f64_vec(&net.running_stats());
    w.f64_vec(&adam.first_moment);
    w.f64_vec(&adam.second_moment);
    w.u64(adam.step_count);
    w.f64(adam.schedule.base_lr);
    w.f64(adam.schedule.final_lr);
    w.u64(adam.schedule.total_steps);
}

fn read_network(
    r: &mut ByteReader,
    net: &mut MlpNetwork,
    adam: &mut AdamState,
    label: &str,
) -> Result<(), CheckpointError> {
    let input = r.u32()? as usize;
    let output = r.u32()? as usize;
    let depth = r.u32()? as usize;
    let mut widths = Vec::with_capacity(depth);
    for _ in 0..depth {
        widths.push(r.u32()? as usize);
    }
    if input != net.input_dim() || output != net.output_dim() || widths != net.hidden_widths() {
        return Err(CheckpointError::Corrupt(format!(
            "{label} architecture {input}x{widths:?}x{output} disagrees with \
             config-derived {}x{:?}x{}",
            net.input_dim(),
            net.hidden_widths(),
            net.output_dim()
        )));
    }
    let params = r.f64_vec()?;
    net.load_flat_params(&params)
        .map_err(|e| CheckpointError::Corrupt(format!("{label} parameters: {e}")))?;
    let stats = r.f64_vec()?;
    net.load_running_stats(&stats)
        .map_err(|e| CheckpointError::Corrupt(format!("{label} running stats: {e}")))?;
    let first = r.f64_vec()?;
    let second = r.f64_vec()?;
    if first.len() != params.len() || second.len() != params.len() {
        return Err(CheckpointError::Corrupt(format!(
            "{label} optimizer moments sized {}/{} for {} parameters",
            first.len(),
            second.len(),
            params.len()
        )));
    }
    adam.first_moment = first;
    adam.second_moment = second;
    adam.step_count = r.u64()?;
    adam.schedule.base_lr = r.f64()?;
    adam.schedule.final_lr = r.f64()?;
    adam.schedule.total_steps = r.u64()?;
    Ok(())
}

fn write_rng(w: &mut ByteWriter, rng: &ChaCha8Rng) {
    w.bytes(&rng.get_seed());
    w.u128(rng.get_word_pos());
}

fn read_rng(r: &mut ByteReader) -> Result<ChaCha8Rng, CheckpointError> {
    let seed: [u8; 32] = r.take(32)?.try_into().unwrap();
    let pos = r.u128()?;
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_word_pos(pos);
    Ok(rng)
}

/// Serialize the full learner state (minus the replay buffer).
pub fn save_learner(learner: &SacLearner) -> Vec<u8> {
    let mut w = ByteWriter::new();
    w.bytes(MAGIC);
    w.u32(VERSION);

    let text = learner.cfg.canonical_text();
    w.u32(text.len() as u32);
    w.bytes(text.as_bytes());

    w.u64(learner.master_seed);
    w.u64(learner.sim_steps);
    w.u64(learner.learn_steps);

    w.f64(learner.temperature.log_alpha);
    w.f64(learner.temperature.target_entropy);

    let h = &learner.hyper;
    w.u32(h.hidden_widths.len() as u32);
    for width in &h.hidden_widths {
        w.u32(*width as u32);
    }
    w.f64(h.critic_lr);
    w.f64(h.actor_lr);
    w.f64(h.temperature_lr);
    w.f64(h.critic_l2);
    w.f64(h.actor_l2);
    w.u64(h.batch_size as u64);
    w.u64(h.buffer_capacity as u64);
    w.u64(h.inference_per_learn as u64);
    w.u64(h.total_learn_steps);
    match h.target_entropy {
        Some(t) => {
            w.u8(1);
            w.f64(t);
        }
        None => {
            w.u8(0);
            w.f64(0.0);
        }
    }
    w.f64(h.init_log_alpha);
    w.u8(mode_tag(h.temperature_mode));
    w.u8(transform_tag(h.transform));
    w.u64(h.calibration_samples as u64);
    w.u32(h.num_critics as u32);

    let s = &learner.stats;
    w.u64(s.sample_count as u64);
    w.u32(s.mean.len() as u32);
    for m in &s.mean {
        w.f64(*m);
    }
    for sc in &s.scale {
        w.f64(*sc);
    }

    write_network(&mut w, &learner.actor, &learner.actor_adam);
    w.u32(learner.critics.len() as u32);
    for (critic, adam) in learner.critics.iter().zip(&learner.critic_adams) {
        write_network(&mut w, critic, adam);
    }

    write_rng(&mut w, &learner.world_rng);
    write_rng(&mut w, &learner.policy_rng);
    write_rng(&mut w, &learner.learn_rng);
    w.buf
}

/// Rebuild a learner from checkpoint bytes. The buffer comes back empty.
pub fn load_learner(bytes: &[u8]) -> Result<SacLearner, CheckpointError> {
    let mut r = ByteReader::new(bytes);
    if r.take(8)? != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(CheckpointError::UnsupportedVersion(version));
    }

    let text_len = r.u32()? as usize;
    let text = std::str::from_utf8(r.take(text_len)?)
        .map_err(|e| CheckpointError::Corrupt(format!("config text not UTF-8: {e}")))?
        .to_string();
    let cfg = ScenarioConfig::from_text(&text)?;

    let master_seed = r.u64()?;
    let sim_steps = r.u64()?;
    let learn_steps = r.u64()?;
    let log_alpha = r.f64()?;
    let target_entropy = r.f64()?;

    let depth = r.u32()? as usize;
    let mut hidden_widths = Vec::with_capacity(depth);
    for _ in 0..depth {
        hidden_widths.push(r.u32()? as usize);
    }
    let critic_lr = r.f64()?;
    let actor_lr = r.f64()?;
    let temperature_lr = r.f64()?;
    let critic_l2 = r.f64()?;
    let actor_l2 = r.f64()?;
    let batch_size = r.u64()? as usize;
    let buffer_capacity = r.u64()? as usize;
    let inference_per_learn = r.u64()? as usize;
    let total_learn_steps = r.u64()?;
    let target_flag = r.u8()?;
    let target_value = r.f64()?;
    let init_log_alpha = r.f64()?;
    let temperature_mode = mode_from_tag(r.u8()?)?;
    let transform = transform_from_tag(r.u8()?)?;
    let calibration_samples = r.u64()? as usize;
    let num_critics = r.u32()? as usize;

    let hyper = SacHyper {
        hidden_widths,
        critic_lr,
        actor_lr,
        temperature_lr,
        critic_l2,
        actor_l2,
        batch_size,
        buffer_capacity,
        inference_per_learn,
        total_learn_steps,
        target_entropy: if target_flag == 1 {
            Some(target_value)
        } else {
            None
        },
        init_log_alpha,
        temperature_mode,
        transform,
        calibration_samples,
        num_critics,
    };

    let sample_count = r.u64()? as usize;
    let dim = r.u32()? as usize;
    if dim != cfg.state_dim() {
        return Err(CheckpointError::Corrupt(format!(
            "standardization dimension {dim} disagrees with state dimension {}",
            cfg.state_dim()
        )));
    }
    let mut mean = Vec::with_capacity(dim);
    for _ in 0..dim {
        mean.push(r.f64()?);
    }
    let mut scale = Vec::with_capacity(dim);
    for _ in 0..dim {
        scale.push(r.f64()?);
    }

    // Rebuild from config + hyper, then overwrite every stateful field so
    // the result is bit-identical to the saved learner.
    let mut learner = SacLearner::new(cfg, hyper, master_seed);
    learner.sim_steps = sim_steps;
    learner.learn_steps = learn_steps;
    learner.temperature = EntropyTemperature {
        log_alpha,
        target_entropy,
        lr: temperature_lr,
        mode: temperature_mode,
    };
    learner.stats = StandardizationStats {
        mean,
        scale,
        sample_count,
    };

    read_network(&mut r, &mut learner.actor, &mut learner.actor_adam, "actor")?;
    let critic_count = r.u32()? as usize;
    if critic_count != learner.critics.len() {
        return Err(CheckpointError::Corrupt(format!(
            "checkpoint carries {critic_count} critics, hyperparameters say {}",
            learner.critics.len()
        )));
    }
    for (i, (critic, adam)) in learner
        .critics
        .iter_mut()
        .zip(&mut learner.critic_adams)
        .enumerate()
    {
        read_network(&mut r, critic, adam, &format!("critic {i}"))?;
    }

    learner.world_rng = read_rng(&mut r)?;
    learner.policy_rng = read_rng(&mut r)?;
    learner.learn_rng = read_rng(&mut r)?;
    r.done()?;
    Ok(learner)
}

/// Write a checkpoint file.
pub fn write_learner(learner: &SacLearner, path: &Path) -> Result<(), CheckpointError> {
    std::fs::write(path, save_learner(learner))?;
    Ok(())
}

/// Read a checkpoint file.
pub fn read_learner(path: &Path) -> Result<SacLearner, CheckpointError> {
    let bytes = std::fs::read(path)?;
    load_learner(&bytes)
}

/// Human-oriented digest of a checkpoint, for inspection tooling.
#[derive(Debug, Clone)]
pub struct CheckpointSummary {
    pub version: u32,
    pub config: ScenarioConfig,
    pub config_text: String,
    pub master_seed: u64,
    pub sim_steps: u64,
    pub learn_steps: u64,
    pub log_alpha: f64,
    pub target_entropy: f64,
    pub hidden_widths: Vec<usize>,
    pub num_critics: usize,
    pub transform: Transform,
    pub actor_param_count: usize,
    pub critic_param_count: usize,
    pub calibrated: bool,
    pub total_bytes: usize,
}

/// Parse a checkpoint and report its contents without exposing the learner.
pub fn summarize_checkpoint(bytes: &[u8]) -> Result<CheckpointSummary, CheckpointError> {
    let learner = load_learner(bytes)?;
    Ok(CheckpointSummary {
        version: VERSION,
        config_text: learner.cfg.canonical_text(),
        master_seed: learner.master_seed,
        sim_steps: learner.sim_steps,
        learn_steps: learner.learn_steps,
        log_alpha: learner.temperature.log_alpha,
        target_entropy: learner.temperature.target_entropy,
        hidden_widths: learner.hyper.hidden_widths.clone(),
        num_critics: learner.critics.len(),
        transform: learner.hyper.transform,
        actor_param_count: learner.actor.param_count(),
        critic_param_count: learner.critics[0].param_count(),
        calibrated: learner.stats.is_calibrated(),
        total_bytes: bytes.len(),
        config: learner.cfg,
    })
}
