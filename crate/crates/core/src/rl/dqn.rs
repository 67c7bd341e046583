//! Deep Q-learning: an online net trained on replayed transitions against a
//! periodically synced target net, with linearly decaying ε-greedy
//! exploration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::dist::argmax;
use super::mlp::{Gradients, Mlp};
use super::replay::{ReplayBuffer, Sample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DqnConfig {
    pub hidden: Vec<usize>,
    pub gamma: f64,
    pub lr: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    /// Transitions collected before training starts.
    pub warmup: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_steps: u64,
    pub target_sync: u64,
    pub train_every: u64,
}

impl Default for DqnConfig {
    fn default() -> Self {
        DqnConfig {
            hidden: vec![256, 128],
            gamma: 0.99,
            lr: 5e-4,
            buffer_capacity: 50_000,
            batch_size: 64,
            warmup: 1_000,
            epsilon_start: 1.0,
            epsilon_end: 0.01,
            epsilon_decay_steps: 10_000,
            target_sync: 1_000,
            train_every: 4,
        }
    }
}

pub struct DqnAgent {
    pub cfg: DqnConfig,
    pub online: Mlp,
    pub target: Mlp,
    pub opt: AdamState,
    pub buffer: ReplayBuffer,
    pub global_step: u64,
    rng: ChaCha8Rng,
}

impl DqnAgent {
    pub fn new(obs_dim: usize, n_actions: usize, cfg: DqnConfig, seed: u64) -> DqnAgent {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dims = vec![obs_dim];
        dims.extend_from_slice(&cfg.hidden);
        dims.push(n_actions);
        let online = Mlp::new(&dims, &mut rng);
        let target = online.clone();
        let opt = AdamState::new(&online);
        let buffer = ReplayBuffer::new(cfg.buffer_capacity);
        DqnAgent { cfg, online, target, opt, buffer, global_step: 0, rng }
    }

    /// Linear decay hitting both endpoints exactly.
    pub fn epsilon_at(&self, step: u64) -> f64 {
        if step >= self.cfg.epsilon_decay_steps {
            return self.cfg.epsilon_end;
        }
        let frac = step as f64 / self.cfg.epsilon_decay_steps as f64;
        self.cfg.epsilon_start + (self.cfg.epsilon_end - self.cfg.epsilon_start) * frac
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon_at(self.global_step)
    }

    /// ε-greedy over the online net's Q-values; ties go to the lowest
    /// action index.
    pub fn select(&mut self, obs: &[f64], n_actions: usize) -> usize {
        if self.rng.gen::<f64>() < self.epsilon() {
            self.rng.gen_range(0..n_actions)
        } else {
            argmax(&self.online.forward(obs))
        }
    }

    pub fn select_greedy(&self, obs: &[f64]) -> usize {
        argmax(&self.online.forward(obs))
    }

    /// Record a transition and run the training cadence: a minibatch every
    /// `train_every` steps once warm, a target sync every `target_sync`.
    /// Returns the minibatch loss when one ran.
    pub fn observe(&mut self, sample: Sample) -> Option<f64> {
        self.buffer.push(sample);
        self.global_step += 1;
        let mut loss = None;
        let warm = self.buffer.len() >= self.cfg.warmup.max(self.cfg.batch_size);
        if warm && self.global_step % self.cfg.train_every == 0 {
            loss = Some(self.train_minibatch());
        }
        if self.global_step % self.cfg.target_sync == 0 {
            self.target = self.online.clone();
        }
        loss
    }

    fn train_minibatch(&mut self) -> f64 {
        let batch: Vec<Sample> = self
            .buffer
            .sample(self.cfg.batch_size, &mut self.rng)
            .into_iter()
            .cloned()
            .collect();
        let n = batch.len() as f64;
        let mut grads = Gradients::zeros_like(&self.online);
        let mut loss = 0.0;
        for s in &batch {
            let (q, trace) = self.online.forward_trace(&s.state);
            let bootstrap = if s.done {
                0.0
            } else {
                let tq = self.target.forward(&s.next_state);
                tq[argmax(&tq)]
            };
            let y = s.reward + self.cfg.gamma * bootstrap;
            let td = q[s.action] - y;
            loss += td * td / n;
            let mut dl = vec![0.0; q.len()];
            dl[s.action] = 2.0 * td / n;
            grads.add(&self.online.backward(&trace, &dl));
        }
        self.opt.step(&mut self.online, &grads, self.cfg.lr);
        loss
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_endpoints_are_exact() {
        let agent = DqnAgent::new(4, 3, DqnConfig::default(), 0);
        assert_eq!(agent.epsilon_at(0), 1.0);
        assert_eq!(agent.epsilon_at(10_000), 0.01);
        assert_eq!(agent.epsilon_at(1_000_000), 0.01);
        let mid = agent.epsilon_at(5_000);
        assert!((mid - 0.505).abs() < 1e-12);
        // Monotone non-increasing on the way down.
        let mut prev = 2.0;
        for step in (0..=12_000).step_by(500) {
            let e = agent.epsilon_at(step);
            assert!(e <= prev);
            prev = e;
        }
    }

    #[test]
    fn target_sync_copies_the_online_net_exactly() {
        let cfg = DqnConfig {
            target_sync: 50,
            warmup: 8,
            batch_size: 8,
            hidden: vec![8],
            ..DqnConfig::default()
        };
        let mut agent = DqnAgent::new(2, 2, cfg, 1);
        let mut diverged = false;
        let mut sync_count = 0;
        for k in 0..125u64 {
            let s = Sample {
                state: vec![(k % 2) as f64, 1.0],
                action: (k % 2) as usize,
                reward: 1.0,
                next_state: vec![((k + 1) % 2) as f64, 1.0],
                done: k % 10 == 9,
            };
            let trained = agent.observe(s).is_some();
            if trained {
                diverged = true;
            }
            if agent.global_step % 50 == 0 {
                diverged = false;
                sync_count += 1;
            }
            assert_eq!(
                agent.online.flat_params() == agent.target.flat_params(),
                !diverged,
                "step {}",
                agent.global_step
            );
        }
        assert_eq!(sync_count, 2);
    }

    // A two-context bandit: reward +1 for matching the context, -1 for
    // missing it. Q-learning should find the map quickly.
    #[test]
    fn learns_a_contextual_bandit() {
        let cfg = DqnConfig {
            hidden: vec![16],
            lr: 5e-3,
            buffer_capacity: 512,
            batch_size: 32,
            warmup: 64,
            epsilon_decay_steps: 600,
            target_sync: 50,
            train_every: 1,
            ..DqnConfig::default()
        };
        let mut agent = DqnAgent::new(1, 2, cfg, 7);
        let mut ctx_rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1500 {
            let ctx = ctx_rng.gen_range(0..2usize);
            let obs = vec![ctx as f64];
            let a = agent.select(&obs, 2);
            let reward = if a == ctx { 1.0 } else { -1.0 };
            agent.observe(Sample {
                state: obs,
                action: a,
                reward,
                next_state: vec![ctx_rng.gen_range(0..2usize) as f64],
                done: true,
            });
        }
        assert_eq!(agent.select_greedy(&[0.0]), 0);
        assert_eq!(agent.select_greedy(&[1.0]), 1);
    }

    #[test]
    fn same_seed_same_behavior() {
        let run = |seed: u64| {
            let mut agent = DqnAgent::new(3, 4, DqnConfig { hidden: vec![8], ..DqnConfig::default() }, seed);
            let mut picks = Vec::new();
            for k in 0..200u64 {
                let obs = vec![k as f64 / 200.0, 0.5, 1.0];
                let a = agent.select(&obs, 4);
                picks.push(a);
                agent.observe(Sample {
                    state: obs.clone(),
                    action: a,
                    reward: 0.1,
                    next_state: obs,
                    done: false,
                });
            }
            (picks, agent.online.flat_params())
        };
        let (p1, w1) = run(5);
        let (p2, w2) = run(5);
        assert_eq!(p1, p2);
        assert_eq!(w1, w2);
        let (p3, _) = run(6);
        assert_ne!(p1, p3);
    }
}
