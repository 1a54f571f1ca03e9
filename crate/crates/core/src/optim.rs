//! Adam optimizer with a cosine learning-rate decay schedule.
//!
//! Operates on the flat parameter/gradient vectors exposed by
//! [`crate::nn::MlpNetwork`]. L2 regularization is not the optimizer's job —
//! the losses add their own regularizer gradients — so this is plain Adam,
//! not a decoupled-weight-decay variant.

use crate::error::NetError;

/// Cosine decay from a base to a final learning rate over a fixed horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineSchedule {
    /// Learning rate at step 0.
    pub base_lr: f64,
    /// Learning rate at and beyond `total_steps`.
    pub final_lr: f64,
    /// Decay horizon in optimizer steps.
    pub total_steps: u64,
}

/// Default final learning rate as a fraction of the base.
pub const DEFAULT_FINAL_LR_FRACTION: f64 = 0.01;

impl CosineSchedule {
    /// Schedule decaying to 1% of `base_lr` over `total_steps`.
    pub fn new(base_lr: f64, total_steps: u64) -> Self {
        CosineSchedule {
            base_lr,
            final_lr: base_lr * DEFAULT_FINAL_LR_FRACTION,
            total_steps,
        }
    }

    /// `lr(t) = final + (base - final) (1 + cos(pi min(t, T)/T)) / 2`.
    pub fn lr_at(&self, step: u64) -> f64 {
        if self.total_steps == 0 {
            return self.final_lr;
        }
        let t = step.min(self.total_steps) as f64 / self.total_steps as f64;
        self.final_lr
            + (self.base_lr - self.final_lr) * (1.0 + (std::f64::consts::PI * t).cos()) / 2.0
    }
}

/// Adam state for one parameter vector.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    /// Number of completed updates.
    pub step_count: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub schedule: CosineSchedule,
}

impl AdamState {
    /// Fresh state with the standard (0.9, 0.999, 1e-8) hyperparameters.
    pub fn new(param_count: usize, base_lr: f64, total_steps: u64) -> Self {
        AdamState {
            first_moment: vec![0.0; param_count],
            second_moment: vec![0.0; param_count],
            step_count: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            schedule: CosineSchedule::new(base_lr, total_steps),
        }
    }

    /// Learning rate the next `step` call will use.
    pub fn current_lr(&self) -> f64 {
        self.schedule.lr_at(self.step_count)
    }

    /// One Adam update in place. Returns the learning rate used.
    ///
    /// Any non-finite gradient entry aborts the whole update (parameters and
    /// moments untouched) and surfaces its flat index.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<f64, NetError> {
        assert_eq!(params.len(), self.first_moment.len(), "parameter count changed");
        assert_eq!(grads.len(), params.len(), "gradient count mismatch");
        if let Some((index, &value)) = grads.iter().enumerate().find(|(_, g)| !g.is_finite()) {
            return Err(NetError::NonFiniteGradient { index, value });
        }
        let lr = self.schedule.lr_at(self.step_count);
        self.step_count += 1;
        let bias1 = 1.0 - self.beta1.powi(self.step_count as i32);
        let bias2 = 1.0 - self.beta2.powi(self.step_count as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.first_moment[i] = self.beta1 * self.first_moment[i] + (1.0 - self.beta1) * g;
            self.second_moment[i] =
                self.beta2 * self.second_moment[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.first_moment[i] / bias1;
            let v_hat = self.second_moment[i] / bias2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(lr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_endpoints_and_midpoint() {
        let s = CosineSchedule::new(1e-3, 1000);
        assert!((s.lr_at(0) - 1e-3).abs() < 1e-18);
        // Midpoint: average of base and final.
        let mid = (1e-3 + 1e-5) / 2.0;
        assert!((s.lr_at(500) - mid).abs() < 1e-12);
        // Clamped beyond the horizon.
        assert!((s.lr_at(1000) - 1e-5).abs() < 1e-18);
        assert!((s.lr_at(10_000) - 1e-5).abs() < 1e-18);
        // Monotone non-increasing.
        let mut prev = f64::INFINITY;
        for t in (0..=1000).step_by(50) {
            let lr = s.lr_at(t);
            assert!(lr <= prev);
            prev = lr;
        }
    }

    #[test]
    fn zero_gradients_leave_parameters_unchanged() {
        let mut adam = AdamState::new(4, 1e-2, 100);
        let mut params = vec![1.0, -2.0, 0.5, 3.0];
        let before = params.clone();
        for _ in 0..5 {
            adam.step(&mut params, &[0.0; 4]).unwrap();
        }
        assert_eq!(params, before);
        assert_eq!(adam.step_count, 5);
    }

    #[test]
    fn first_step_magnitude_is_learning_rate() {
        // With a constant gradient g, the bias-corrected first step is
        // -lr * g / (|g| + eps-effects): magnitude ~ lr, direction -sign(g).
        let mut adam = AdamState::new(2, 1e-2, 1_000_000);
        let mut params = vec![0.0, 0.0];
        adam.step(&mut params, &[3.0, -0.25]).unwrap();
        assert!((params[0] + 1e-2).abs() < 1e-6);
        assert!((params[1] - 1e-2).abs() < 1e-6);
    }

    #[test]
    fn non_finite_gradient_aborts_update() {
        let mut adam = AdamState::new(3, 1e-2, 100);
        let mut params = vec![1.0, 2.0, 3.0];
        let before_params = params.clone();
        let before_moments = adam.first_moment.clone();
        let err = adam.step(&mut params, &[0.1, f64::NAN, 0.2]).unwrap_err();
        match err {
            NetError::NonFiniteGradient { index, value } => {
                assert_eq!(index, 1);
                assert!(value.is_nan());
            }
            other => panic!("unexpected error {other:?}"),
        }
        assert_eq!(params, before_params);
        assert_eq!(adam.first_moment, before_moments);
        assert_eq!(adam.step_count, 0);
    }

    #[test]
    fn quadratic_bowl_converges() {
        // Minimize sum(theta^2): Adam should drive parameters near zero.
        let mut adam = AdamState::new(3, 5e-2, 2_000);
        let mut params = vec![1.0, -0.7, 0.4];
        for _ in 0..2_000 {
            let grads: Vec<f64> = params.iter().map(|p| 2.0 * p).collect();
            adam.step(&mut params, &grads).unwrap();
        }
        for p in &params {
            assert!(p.abs() < 1e-3, "parameter {p} did not converge");
        }
    }
}
