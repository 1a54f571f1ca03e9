//! Losses, gradients, and the inference/learning loop of the soft
//! actor-critic precoder.
//!
//! The actor maps a state to `4 K N` outputs grouped in pairs: even indices
//! are Gaussian means, odd indices raw log-scales (clamped to `[-10, 3]`).
//! An action is a sample of that diagonal Gaussian — no squashing; the
//! Frobenius projection in `precoder_from_action` absorbs any magnitude.
//! Critics take `[state || action]` and predict the immediate sum rate.
//!
//! Batch-norm mode protocol: data collection and every critic evaluation
//! inside the actor loss run in inference mode (frozen running statistics);
//! each network's own parameter update runs its forward in training mode on
//! its batch.

use crate::channel::{sample_realization, ChannelRealization};
use crate::config::ScenarioConfig;
use crate::error::SacError;
use crate::metrics::{sum_rate, PrecodingMatrix, RateReport};
use crate::nn::{MlpNetwork, NetMode};
use crate::optim::AdamState;
use crate::sac::buffer::{Experience, ExperienceBuffer};
use crate::sac::transform::{
    calibrate_standardization, precoder_from_action, state_from_estimate, StandardizationStats,
    Transform,
};
use crate::seeding::{stream, stream_rng};
use ndarray::{concatenate, Array1, Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Clamp bounds for the raw log-scale head.
pub const LOG_SCALE_MIN: f64 = -10.0;
pub const LOG_SCALE_MAX: f64 = 3.0;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Whether an action is drawn stochastically or taken at the mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyMode {
    Stochastic,
    Mean,
}

/// A sampled (or mean) action and its Gaussian log-density.
#[derive(Debug, Clone)]
pub struct ActionVector {
    pub values: Vec<f64>,
    pub log_prob: f64,
}

/// Actor-loss value split into its three terms.
#[derive(Debug, Clone, Copy)]
pub struct ActorLossBreakdown {
    /// `-(1/B) sum min_c Q_c(s, a~)`.
    pub q_term: f64,
    /// `(1/B) sum exp(alpha_log) log pi(a~|s)`.
    pub entropy_term: f64,
    /// `a_A ||theta_A||` (unsquared norm).
    pub l2_term: f64,
    pub total: f64,
    /// Mean log-density over the batch; feeds the temperature update.
    pub mean_log_prob: f64,
}

/// Split one raw actor output row into means and clamped log-scales.
fn split_policy_row(raw: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let dim = raw.len() / 2;
    let mut means = Vec::with_capacity(dim);
    let mut log_scales = Vec::with_capacity(dim);
    for i in 0..dim {
        means.push(raw[2 * i]);
        log_scales.push(raw[2 * i + 1].clamp(LOG_SCALE_MIN, LOG_SCALE_MAX));
    }
    (means, log_scales)
}

fn policy_head(actor: &mut MlpNetwork, state: &[f64]) -> Result<(Vec<f64>, Vec<f64>), SacError> {
    let input = Array2::from_shape_vec((1, state.len()), state.to_vec())
        .expect("shape matches by construction");
    let out = actor.forward(&input, NetMode::Infer)?;
    let row: Vec<f64> = out.row(0).to_vec();
    Ok(split_policy_row(&row))
}

/// Draw an action from the policy for one state.
///
/// Stochastic mode consumes one standard-normal draw per action dimension,
/// in index order; mean mode consumes none. The log-probability is the plain
/// diagonal-Gaussian log-density of the returned action.
pub fn sample_action<R: Rng>(
    actor: &mut MlpNetwork,
    state: &[f64],
    rng: &mut R,
    mode: PolicyMode,
) -> Result<ActionVector, SacError> {
    let (means, log_scales) = policy_head(actor, state)?;
    let mut values = Vec::with_capacity(means.len());
    let mut log_prob = 0.0;
    for (m, ls) in means.iter().zip(&log_scales) {
        let xi: f64 = match mode {
            PolicyMode::Stochastic => StandardNormal.sample(rng),
            PolicyMode::Mean => 0.0,
        };
        values.push(m + ls.exp() * xi);
        log_prob += -ls - 0.5 * LN_2PI - 0.5 * xi * xi;
    }
    Ok(ActionVector { values, log_prob })
}

/// Mean action without touching any RNG; used for evaluation.
pub fn mean_action(actor: &mut MlpNetwork, state: &[f64]) -> Result<ActionVector, SacError> {
    let (means, log_scales) = policy_head(actor, state)?;
    let log_prob = log_scales.iter().map(|ls| -ls - 0.5 * LN_2PI).sum();
    Ok(ActionVector {
        values: means,
        log_prob,
    })
}

/// Critic predictions for a batch, one value per row.
pub fn critic_values(
    critic: &mut MlpNetwork,
    states: &Array2<f64>,
    actions: &Array2<f64>,
    mode: NetMode,
) -> Result<Array1<f64>, SacError> {
    let inputs = concatenate(Axis(1), &[states.view(), actions.view()])
        .expect("row counts agree");
    let out = critic.forward(&inputs, mode)?;
    Ok(out.column(0).to_owned())
}

/// Evaluate `(1/B) sum (Q - R)^2 + a_C ||theta||^2` per critic, in inference
/// mode (diagnostic view; the training path is
/// [`critic_loss_and_grad`]).
pub fn critic_loss_value(
    critics: &mut [MlpNetwork],
    states: &Array2<f64>,
    actions: &Array2<f64>,
    rewards: &Array1<f64>,
    l2_scale: f64,
) -> Result<Vec<f64>, SacError> {
    let b = rewards.len() as f64;
    let mut losses = Vec::with_capacity(critics.len());
    for critic in critics.iter_mut() {
        let q = critic_values(critic, states, actions, NetMode::Infer)?;
        let mse = (&q - rewards).mapv(|e| e * e).sum() / b;
        let l2: f64 = critic.flat_params().iter().map(|p| p * p).sum();
        losses.push(mse + l2_scale * l2);
    }
    Ok(losses)
}

/// Training-mode loss and flat parameter gradient for one critic.
///
/// Leaves the gradient in the network's stores and returns a copy with the
/// L2 term `2 a_C theta` already added.
pub fn critic_loss_and_grad(
    critic: &mut MlpNetwork,
    states: &Array2<f64>,
    actions: &Array2<f64>,
    rewards: &Array1<f64>,
    l2_scale: f64,
) -> Result<(f64, Vec<f64>), SacError> {
    let b = rewards.len() as f64;
    let q = critic_values(critic, states, actions, NetMode::Train)?;
    let diff = &q - rewards;
    let params = critic.flat_params();
    let l2: f64 = params.iter().map(|p| p * p).sum();
    let loss = diff.mapv(|e| e * e).sum() / b + l2_scale * l2;

    let upstream = diff
        .mapv(|e| 2.0 * e / b)
        .into_shape_with_order((rewards.len(), 1))
        .expect("column vector");
    critic.backward(&upstream)?;
    let mut grads = critic.flat_grads();
    for (g, p) in grads.iter_mut().zip(&params) {
        *g += 2.0 * l2_scale * p;
    }
    Ok((loss, grads))
}

/// Everything the actor loss needs from one forward sweep.
struct ActorPass {
    scales: Array2<f64>,
    clamp_mask: Array2<f64>,
    log_probs: Array1<f64>,
    q_min: Array1<f64>,
    /// Which critic achieved the minimum per row.
    argmin: Vec<usize>,
}

/// Shared forward pass: actor in training mode on the batch, critics in
/// inference mode on the reparameterized actions `a~ = mu + sigma * xi`.
fn actor_pass(
    actor: &mut MlpNetwork,
    critics: &mut [MlpNetwork],
    states: &Array2<f64>,
    noise: &Array2<f64>,
) -> Result<ActorPass, SacError> {
    assert!(!critics.is_empty(), "need at least one critic");
    let raw = actor.forward(states, NetMode::Train)?;
    let (batch, action_dim) = (states.nrows(), raw.ncols() / 2);
    assert_eq!(noise.dim(), (batch, action_dim), "noise shape mismatch");

    let mut means = Array2::zeros((batch, action_dim));
    let mut log_scales = Array2::zeros((batch, action_dim));
    let mut clamp_mask = Array2::zeros((batch, action_dim));
    for b in 0..batch {
        for i in 0..action_dim {
            means[(b, i)] = raw[(b, 2 * i)];
            let r = raw[(b, 2 * i + 1)];
            log_scales[(b, i)] = r.clamp(LOG_SCALE_MIN, LOG_SCALE_MAX);
            clamp_mask[(b, i)] = if (LOG_SCALE_MIN..=LOG_SCALE_MAX).contains(&r) {
                1.0
            } else {
                0.0
            };
        }
    }
    let scales = log_scales.mapv(f64::exp);
    let actions = &means + &scales * noise;
    let log_probs = Array1::from_iter((0..batch).map(|b| {
        (0..action_dim)
            .map(|i| -log_scales[(b, i)] - 0.5 * LN_2PI - 0.5 * noise[(b, i)] * noise[(b, i)])
            .sum()
    }));

    let mut q_min = Array1::from_elem(batch, f64::INFINITY);
    let mut argmin = vec![0usize; batch];
    for (c, critic) in critics.iter_mut().enumerate() {
        let q = critic_values(critic, states, &actions, NetMode::Infer)?;
        for b in 0..batch {
            if q[b] < q_min[b] {
                q_min[b] = q[b];
                argmin[b] = c;
            }
        }
    }
    Ok(ActorPass {
        scales,
        clamp_mask,
        log_probs,
        q_min,
        argmin,
    })
}

fn breakdown_from_pass(
    actor: &MlpNetwork,
    pass: &ActorPass,
    log_alpha: f64,
    l2_scale: f64,
) -> ActorLossBreakdown {
    let b = pass.q_min.len() as f64;
    let q_term = -pass.q_min.sum() / b;
    let mean_log_prob = pass.log_probs.sum() / b;
    let entropy_term = log_alpha.exp() * mean_log_prob;
    let norm: f64 = actor.flat_params().iter().map(|p| p * p).sum::<f64>().sqrt();
    let l2_term = l2_scale * norm;
    ActorLossBreakdown {
        q_term,
        entropy_term,
        l2_term,
        total: q_term + entropy_term + l2_term,
        mean_log_prob,
    }
}

/// Actor-loss value for a frozen noise matrix (finite-difference target).
pub fn actor_loss_value(
    actor: &mut MlpNetwork,
    critics: &mut [MlpNetwork],
    states: &Array2<f64>,
    noise: &Array2<f64>,
    log_alpha: f64,
    l2_scale: f64,
) -> Result<ActorLossBreakdown, SacError> {
    let pass = actor_pass(actor, critics, states, noise)?;
    Ok(breakdown_from_pass(actor, &pass, log_alpha, l2_scale))
}

/// Actor-loss value plus the flat actor gradient.
///
/// The critics' own gradient stores are clobbered as a side effect of
/// backpropagating to the action inputs; callers update critics from their
/// dedicated pass, never from here. The minimum is attributed per row: only
/// the critic achieving it receives upstream signal for that row.
pub fn actor_loss_and_grad(
    actor: &mut MlpNetwork,
    critics: &mut [MlpNetwork],
    states: &Array2<f64>,
    noise: &Array2<f64>,
    log_alpha: f64,
    l2_scale: f64,
) -> Result<(ActorLossBreakdown, Vec<f64>), SacError> {
    let pass = actor_pass(actor, critics, states, noise)?;
    let breakdown = breakdown_from_pass(actor, &pass, log_alpha, l2_scale);
    let (batch, action_dim) = pass.scales.dim();
    let state_dim = states.ncols();
    let b = batch as f64;
    let alpha = log_alpha.exp();

    // d(loss)/d(action) accumulated from the min-attributed critics.
    let mut d_action: Array2<f64> = Array2::zeros((batch, action_dim));
    for (c, critic) in critics.iter_mut().enumerate() {
        let mut upstream = Array2::zeros((batch, 1));
        let mut any = false;
        for row in 0..batch {
            if pass.argmin[row] == c {
                upstream[(row, 0)] = -1.0 / b;
                any = true;
            }
        }
        let d_input = critic.backward(&upstream)?;
        if any {
            d_action += &d_input.slice(ndarray::s![.., state_dim..]);
        }
    }

    // Assemble the actor's upstream gradient: even outputs are means, odd
    // outputs raw log-scales. The entropy term contributes -alpha/B to every
    // log-scale; the clamp zeroes gradients outside its range.
    let mut upstream_actor = Array2::zeros((batch, 2 * action_dim));
    for row in 0..batch {
        for i in 0..action_dim {
            let da = d_action[(row, i)];
            upstream_actor[(row, 2 * i)] = da;
            let dls = da * pass.scales[(row, i)] * noise[(row, i)] - alpha / b;
            upstream_actor[(row, 2 * i + 1)] = dls * pass.clamp_mask[(row, i)];
        }
    }
    actor.backward(&upstream_actor)?;
    let mut grads = actor.flat_grads();
    let params = actor.flat_params();
    let norm: f64 = params.iter().map(|p| p * p).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (g, p) in grads.iter_mut().zip(&params) {
            *g += l2_scale * p / norm;
        }
    }
    Ok((breakdown, grads))
}

/// Fixed or auto-tuned entropy temperature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemperatureMode {
    /// Gradient steps on `log_alpha` toward the entropy target.
    Auto,
    /// `log_alpha` never moves.
    Fixed,
}

/// Trainable log entropy temperature.
#[derive(Debug, Clone)]
pub struct EntropyTemperature {
    pub log_alpha: f64,
    pub target_entropy: f64,
    pub lr: f64,
    pub mode: TemperatureMode,
}

impl EntropyTemperature {
    pub fn alpha(&self) -> f64 {
        self.log_alpha.exp()
    }

    /// One SGD step on `L(log_alpha) = -exp(log_alpha) (mean_log_prob +
    /// target_entropy)`. Returns the gradient (zero in fixed mode).
    pub fn update(&mut self, mean_log_prob: f64) -> f64 {
        match self.mode {
            TemperatureMode::Fixed => 0.0,
            TemperatureMode::Auto => {
                let grad = -self.log_alpha.exp() * (mean_log_prob + self.target_entropy);
                self.log_alpha -= self.lr * grad;
                grad
            }
        }
    }
}

/// Hyperparameters of one training run.
#[derive(Debug, Clone)]
pub struct SacHyper {
    pub hidden_widths: Vec<usize>,
    pub critic_lr: f64,
    pub actor_lr: f64,
    pub temperature_lr: f64,
    pub critic_l2: f64,
    pub actor_l2: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Inference steps per learning step.
    pub inference_per_learn: usize,
    /// Cosine-decay horizon in learning steps.
    pub total_learn_steps: u64,
    /// Entropy target; `None` means `-(action dimension)` = `-2KN`.
    pub target_entropy: Option<f64>,
    pub init_log_alpha: f64,
    pub temperature_mode: TemperatureMode,
    pub transform: Transform,
    pub calibration_samples: usize,
    pub num_critics: usize,
}

impl Default for SacHyper {
    fn default() -> Self {
        SacHyper {
            hidden_widths: vec![512, 512, 512, 512],
            critic_lr: 1e-4,
            actor_lr: 1e-5,
            temperature_lr: 1e-4,
            critic_l2: 0.1,
            actor_l2: 0.1,
            batch_size: 1024,
            buffer_capacity: 100_000,
            inference_per_learn: 10,
            total_learn_steps: 100_000,
            target_entropy: None,
            init_log_alpha: 0.0,
            temperature_mode: TemperatureMode::Auto,
            transform: Transform::MagnitudePhase,
            calibration_samples: 100,
            num_critics: 2,
        }
    }
}

/// What one inference step produced; the same tuple lands in the buffer.
#[derive(Debug, Clone)]
pub struct InferenceRecord {
    pub realization: ChannelRealization,
    pub precoder: PrecodingMatrix,
    pub reward: f64,
}

/// Diagnostics of one `train_step` call.
#[derive(Debug, Clone)]
pub struct StepDiagnostics {
    pub sim_steps: u64,
    pub learn_steps: u64,
    /// Mean reward over this call's inference steps.
    pub mean_reward: f64,
    /// True if a learning step ran; false while the buffer is underfull.
    pub learned: bool,
    pub critic_losses: Vec<f64>,
    pub actor_loss: Option<ActorLossBreakdown>,
    pub alpha: f64,
    pub critic_lr: f64,
    pub actor_lr: f64,
}

/// The full training state: networks, optimizers, buffer, temperature, and
/// the three random streams (world, policy, learning).
pub struct SacLearner {
    pub cfg: ScenarioConfig,
    pub hyper: SacHyper,
    pub actor: MlpNetwork,
    pub critics: Vec<MlpNetwork>,
    pub actor_adam: AdamState,
    pub critic_adams: Vec<AdamState>,
    pub temperature: EntropyTemperature,
    pub stats: StandardizationStats,
    pub buffer: ExperienceBuffer,
    pub master_seed: u64,
    pub sim_steps: u64,
    pub learn_steps: u64,
    pub(crate) world_rng: ChaCha8Rng,
    pub(crate) policy_rng: ChaCha8Rng,
    pub(crate) learn_rng: ChaCha8Rng,
}

impl SacLearner {
    /// Build networks, calibrate standardization, and seed the streams.
    ///
    /// Initialization order (part of the determinism contract): actor first,
    /// then critics in index order, all from the `INIT` stream; calibration
    /// uses its own stream.
    pub fn new(cfg: ScenarioConfig, hyper: SacHyper, master_seed: u64) -> Self {
        assert!(hyper.batch_size >= 2, "batch size must be at least 2");
        assert!(hyper.num_critics >= 1, "need at least one critic");
        assert!(hyper.inference_per_learn >= 1, "need at least one inference step");
        let state_dim = cfg.state_dim();
        let action_dim = state_dim;

        let mut init_rng = stream_rng(master_seed, stream::INIT);
        let actor = MlpNetwork::new(state_dim, &hyper.hidden_widths, 2 * action_dim, &mut init_rng);
        let critics: Vec<MlpNetwork> = (0..hyper.num_critics)
            .map(|_| MlpNetwork::new(state_dim + action_dim, &hyper.hidden_widths, 1, &mut init_rng))
            .collect();

        let mut calibrate_rng = stream_rng(master_seed, stream::CALIBRATE);
        let stats = calibrate_standardization(
            &cfg,
            hyper.transform,
            hyper.calibration_samples,
            &mut calibrate_rng,
        );

        let actor_adam = AdamState::new(actor.param_count(), hyper.actor_lr, hyper.total_learn_steps);
        let critic_adams = critics
            .iter()
            .map(|c| AdamState::new(c.param_count(), hyper.critic_lr, hyper.total_learn_steps))
            .collect();
        let temperature = EntropyTemperature {
            log_alpha: hyper.init_log_alpha,
            target_entropy: hyper.target_entropy.unwrap_or(-(action_dim as f64)),
            lr: hyper.temperature_lr,
            mode: hyper.temperature_mode,
        };
        let buffer = ExperienceBuffer::new(hyper.buffer_capacity);

        SacLearner {
            world_rng: stream_rng(master_seed, stream::WORLD),
            policy_rng: stream_rng(master_seed, stream::POLICY),
            learn_rng: stream_rng(master_seed, stream::LEARN),
            cfg,
            hyper,
            actor,
            critics,
            actor_adam,
            critic_adams,
            temperature,
            stats,
            buffer,
            master_seed,
            sim_steps: 0,
            learn_steps: 0,
        }
    }

    /// One interaction with the world: draw a realization, act
    /// stochastically, earn the true-channel sum rate, store the tuple.
    pub fn inference_step(&mut self) -> Result<InferenceRecord, SacError> {
        let realization = sample_realization(&self.cfg, &mut self.world_rng);
        let state =
            state_from_estimate(&realization.estimated_channel, &self.stats, self.hyper.transform)?;
        let action = sample_action(
            &mut self.actor,
            &state,
            &mut self.policy_rng,
            PolicyMode::Stochastic,
        )?;
        let precoder = precoder_from_action(
            &action.values,
            self.cfg.transmit_power_w,
            self.cfg.num_users,
            self.cfg.num_antennas,
        )?;
        let reward = sum_rate(
            &realization.true_channel,
            &precoder,
            self.cfg.noise_power_w,
        )
        .sum_rate;
        self.buffer.push(Experience {
            state,
            action: action.values,
            reward,
        });
        self.sim_steps += 1;
        Ok(InferenceRecord {
            realization,
            precoder,
            reward,
        })
    }

    /// One learning step on a uniformly sampled batch: critics first (each
    /// on its own training-mode pass), then the actor against the frozen
    /// critics, then the temperature.
    fn learn_step(&mut self) -> Result<(Vec<f64>, ActorLossBreakdown), SacError> {
        let (states, actions, rewards) = self
            .buffer
            .sample_batch(self.hyper.batch_size, &mut self.learn_rng);

        let mut critic_losses = Vec::with_capacity(self.critics.len());
        for (critic, adam) in self.critics.iter_mut().zip(&mut self.critic_adams) {
            let (loss, grads) =
                critic_loss_and_grad(critic, &states, &actions, &rewards, self.hyper.critic_l2)?;
            let mut params = critic.flat_params();
            adam.step(&mut params, &grads)?;
            critic.load_flat_params(&params)?;
            critic_losses.push(loss);
        }

        let batch = states.nrows();
        let action_dim = actions.ncols();
        let noise = Array2::from_shape_fn((batch, action_dim), |_| {
            StandardNormal.sample(&mut self.learn_rng)
        });
        let (breakdown, grads) = actor_loss_and_grad(
            &mut self.actor,
            &mut self.critics,
            &states,
            &noise,
            self.temperature.log_alpha,
            self.hyper.actor_l2,
        )?;
        let mut params = self.actor.flat_params();
        self.actor_adam.step(&mut params, &grads)?;
        self.actor.load_flat_params(&params)?;

        self.temperature.update(breakdown.mean_log_prob);
        self.learn_steps += 1;
        Ok((critic_losses, breakdown))
    }

    /// The 10:1 block of Fig-style training: `inference_per_learn` inference
    /// steps, then one learning step if the buffer holds a full batch.
    pub fn train_step(&mut self) -> Result<StepDiagnostics, SacError> {
        let mut reward_sum = 0.0;
        for _ in 0..self.hyper.inference_per_learn {
            reward_sum += self.inference_step()?.reward;
        }
        let mean_reward = reward_sum / self.hyper.inference_per_learn as f64;

        let critic_lr = self.critic_adams[0].current_lr();
        let actor_lr = self.actor_adam.current_lr();
        let (learned, critic_losses, actor_loss) = if self.buffer.len() >= self.hyper.batch_size {
            let (c, a) = self.learn_step()?;
            (true, c, Some(a))
        } else {
            (false, Vec::new(), None)
        };
        Ok(StepDiagnostics {
            sim_steps: self.sim_steps,
            learn_steps: self.learn_steps,
            mean_reward,
            learned,
            critic_losses,
            actor_loss,
            alpha: self.temperature.alpha(),
            critic_lr,
            actor_lr,
        })
    }
}

/// Deterministic evaluation: mean action on a given realization, returning
/// the precoder and its true-channel rate report.
pub fn evaluate_mean_action(
    actor: &mut MlpNetwork,
    stats: &StandardizationStats,
    transform: Transform,
    cfg: &ScenarioConfig,
    realization: &ChannelRealization,
) -> Result<(PrecodingMatrix, RateReport), SacError> {
    let state = state_from_estimate(&realization.estimated_channel, stats, transform)?;
    let action = mean_action(actor, &state)?;
    let precoder = precoder_from_action(
        &action.values,
        cfg.transmit_power_w,
        cfg.num_users,
        cfg.num_antennas,
    )?;
    let report = sum_rate(&realization.true_channel, &precoder, cfg.noise_power_w);
    Ok((precoder, report))
}
