//! FIFO experience ring for (state, action, reward) tuples.

use ndarray::{Array1, Array2};
use rand::Rng;

/// One logged interaction.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
}

/// Fixed-capacity ring buffer; once full, each push overwrites the oldest
/// tuple.
#[derive(Debug, Clone)]
pub struct ExperienceBuffer {
    storage: Vec<Experience>,
    capacity: usize,
    write_cursor: usize,
}

impl ExperienceBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "capacity must be positive");
        ExperienceBuffer {
            storage: Vec::with_capacity(capacity.min(1 << 20)),
            capacity,
            write_cursor: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn push(&mut self, experience: Experience) {
        if self.storage.len() < self.capacity {
            self.storage.push(experience);
        } else {
            self.storage[self.write_cursor] = experience;
        }
        self.write_cursor = (self.write_cursor + 1) % self.capacity;
    }

    /// Iterate over stored tuples (no particular age order).
    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        self.storage.iter()
    }

    /// Draw a batch uniformly with replacement, packed into arrays
    /// (states B x D_s, actions B x D_a, rewards B).
    ///
    /// Panics if the buffer is empty; callers gate on
    /// [`len`](Self::len) >= batch size first.
    pub fn sample_batch<R: Rng>(
        &self,
        batch_size: usize,
        rng: &mut R,
    ) -> (Array2<f64>, Array2<f64>, Array1<f64>) {
        assert!(!self.is_empty(), "cannot sample from an empty buffer");
        assert!(batch_size > 0, "batch size must be positive");
        let d_s = self.storage[0].state.len();
        let d_a = self.storage[0].action.len();
        let mut states = Array2::zeros((batch_size, d_s));
        let mut actions = Array2::zeros((batch_size, d_a));
        let mut rewards = Array1::zeros(batch_size);
        for b in 0..batch_size {
            let e = &self.storage[rng.random_range(0..self.storage.len())];
            for (j, v) in e.state.iter().enumerate() {
                states[(b, j)] = *v;
            }
            for (j, v) in e.action.iter().enumerate() {
                actions[(b, j)] = *v;
            }
            rewards[b] = e.reward;
        }
        (states, actions, rewards)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::seeded_rng;

    fn tagged(reward: f64) -> Experience {
        Experience {
            state: vec![reward; 2],
            action: vec![-reward; 2],
            reward,
        }
    }

    #[test]
    fn fifo_overwrites_oldest_first() {
        let capacity = 8;
        let extra = 3;
        let mut buffer = ExperienceBuffer::new(capacity);
        for i in 0..capacity + extra {
            buffer.push(tagged(i as f64));
            assert!(buffer.len() <= capacity);
        }
        let kept: Vec<f64> = buffer.iter().map(|e| e.reward).collect();
        for old in 0..extra {
            assert!(
                !kept.contains(&(old as f64)),
                "tuple {old} should have been evicted"
            );
        }
        for recent in extra..capacity + extra {
            assert!(kept.contains(&(recent as f64)), "tuple {recent} missing");
        }
    }

    #[test]
    fn sampling_is_uniform_over_contents() {
        let mut buffer = ExperienceBuffer::new(4);
        for i in 0..4 {
            buffer.push(tagged(i as f64));
        }
        let mut rng = seeded_rng(401);
        let mut counts = [0usize; 4];
        let draws = 40_000;
        let (_, _, rewards) = buffer.sample_batch(draws, &mut rng);
        for r in rewards.iter() {
            counts[*r as usize] += 1;
        }
        for c in counts {
            let ratio = c as f64 / draws as f64;
            assert!((ratio - 0.25).abs() < 0.02, "ratio {ratio}");
        }
    }

    #[test]
    fn batch_arrays_match_tuples() {
        let mut buffer = ExperienceBuffer::new(10);
        for i in 0..5 {
            buffer.push(tagged(i as f64));
        }
        let mut rng = seeded_rng(403);
        let (states, actions, rewards) = buffer.sample_batch(16, &mut rng);
        assert_eq!(states.dim(), (16, 2));
        assert_eq!(actions.dim(), (16, 2));
        for b in 0..16 {
            assert_eq!(states[(b, 0)], rewards[b]);
            assert_eq!(actions[(b, 0)], -rewards[b]);
        }
    }
}
