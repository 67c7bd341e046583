//! Fixed-capacity experience replay with FIFO overwrite.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    storage: Vec<Sample>,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> ReplayBuffer {
        assert!(capacity > 0);
        ReplayBuffer { capacity, storage: Vec::with_capacity(capacity.min(4096)), cursor: 0 }
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Append, overwriting the oldest entry once full.
    pub fn push(&mut self, sample: Sample) {
        if self.storage.len() < self.capacity {
            self.storage.push(sample);
        } else {
            self.storage[self.cursor] = sample;
            self.cursor = (self.cursor + 1) % self.capacity;
        }
    }

    /// Uniform sample with replacement.
    pub fn sample<'a>(&'a self, batch: usize, rng: &mut impl Rng) -> Vec<&'a Sample> {
        assert!(!self.storage.is_empty());
        (0..batch).map(|_| &self.storage[rng.gen_range(0..self.storage.len())]).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Sample> {
        self.storage.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample(tag: f64) -> Sample {
        Sample { state: vec![tag], action: 0, reward: tag, next_state: vec![tag], done: false }
    }

    // After capacity + n inserts, exactly the first n are gone and the rest
    // survive untouched.
    #[test]
    fn fifo_overwrite_property() {
        let cap = 16;
        for extra in 1..=8 {
            let mut buf = ReplayBuffer::new(cap);
            for k in 0..cap + extra {
                buf.push(sample(k as f64));
            }
            assert_eq!(buf.len(), cap);
            let mut have: Vec<f64> = buf.iter().map(|s| s.reward).collect();
            have.sort_by(f64::total_cmp);
            let want: Vec<f64> = (extra..cap + extra).map(|k| k as f64).collect();
            assert_eq!(have, want, "extra={extra}");
        }
    }

    #[test]
    fn sampling_is_uniform_enough_and_deterministic() {
        let mut buf = ReplayBuffer::new(8);
        for k in 0..8 {
            buf.push(sample(k as f64));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut counts = [0usize; 8];
        for s in buf.sample(8000, &mut rng) {
            counts[s.reward as usize] += 1;
        }
        for c in counts {
            assert!((c as f64 - 1000.0).abs() < 150.0, "count {c}");
        }
        let mut a = ChaCha8Rng::seed_from_u64(2);
        let mut b = ChaCha8Rng::seed_from_u64(2);
        let pa: Vec<f64> = buf.sample(32, &mut a).iter().map(|s| s.reward).collect();
        let pb: Vec<f64> = buf.sample(32, &mut b).iter().map(|s| s.reward).collect();
        assert_eq!(pa, pb);
    }
}
