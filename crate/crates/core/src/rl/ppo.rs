//! Proximal policy optimization with a clipped surrogate objective,
//! GAE-smoothed advantages, and separate actor and critic networks. The
//! gradient of the full objective with respect to the logits is computed
//! analytically and checked against finite differences in the tests.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::dist::{argmax, log_softmax, sample_categorical};
use super::gae::compute_gae;
use super::mlp::{Gradients, Mlp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub hidden: Vec<usize>,
    pub gamma: f64,
    pub lambda: f64,
    pub clip: f64,
    pub lr: f64,
    /// Steps collected per policy update.
    pub horizon: usize,
    pub minibatch: usize,
    pub epochs: usize,
    pub value_coef: f64,
    pub entropy_coef: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            hidden: vec![256, 128],
            gamma: 0.99,
            lambda: 0.95,
            clip: 0.2,
            lr: 1e-4,
            horizon: 2048,
            minibatch: 64,
            epochs: 10,
            value_coef: 0.5,
            entropy_coef: 0.01,
        }
    }
}

/// The clipped surrogate objective term (to be maximized):
/// `min(ratio * adv, clamp(ratio, 1-clip, 1+clip) * adv)`.
pub fn clipped_surrogate(ratio: f64, adv: f64, clip: f64) -> f64 {
    let unclipped = ratio * adv;
    let clipped = ratio.clamp(1.0 - clip, 1.0 + clip) * adv;
    unclipped.min(clipped)
}

pub struct SampleTerms {
    pub loss: f64,
    pub dl_dlogits: Vec<f64>,
    pub ratio: f64,
    pub entropy: f64,
    pub kl: f64,
}

/// Per-sample loss `-surrogate - entropy_coef * H` and its exact gradient
/// in the logits.
///
/// When the unclipped branch is active the surrogate's logit gradient is
/// `adv * ratio * (1[j=a] - p_j)`; when the clamp saturates it is zero. The
/// entropy term contributes `entropy_coef * p_j * (log p_j + H)` to the
/// loss gradient, from `dH/dl_j = -p_j (log p_j + H)`.
pub fn policy_loss_terms(
    logits: &[f64],
    action: usize,
    logp_old: f64,
    adv: f64,
    clip: f64,
    entropy_coef: f64,
) -> SampleTerms {
    let lp = log_softmax(logits);
    let p: Vec<f64> = lp.iter().map(|l| l.exp()).collect();
    let ratio = (lp[action] - logp_old).exp();
    let unclipped = ratio * adv;
    let clipped = ratio.clamp(1.0 - clip, 1.0 + clip) * adv;
    let surrogate = unclipped.min(clipped);
    let entropy: f64 = lp.iter().zip(&p).map(|(l, q)| -q * l).sum();
    let loss = -surrogate - entropy_coef * entropy;

    let unclipped_active = unclipped <= clipped;
    let mut dl = vec![0.0; logits.len()];
    for (j, slot) in dl.iter_mut().enumerate() {
        let ind = if j == action { 1.0 } else { 0.0 };
        let surr_grad = if unclipped_active { adv * ratio * (ind - p[j]) } else { 0.0 };
        *slot = -surr_grad + entropy_coef * p[j] * (lp[j] + entropy);
    }

    SampleTerms { loss, dl_dlogits: dl, ratio, entropy, kl: logp_old - lp[action] }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PpoStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    pub samples: usize,
}

#[derive(Default)]
struct Rollout {
    states: Vec<Vec<f64>>,
    actions: Vec<usize>,
    logps: Vec<f64>,
    values: Vec<f64>,
    rewards: Vec<f64>,
    dones: Vec<bool>,
}

impl Rollout {
    fn len(&self) -> usize {
        self.states.len()
    }

    fn clear(&mut self) {
        self.states.clear();
        self.actions.clear();
        self.logps.clear();
        self.values.clear();
        self.rewards.clear();
        self.dones.clear();
    }
}

pub struct PpoAgent {
    pub cfg: PpoConfig,
    pub actor: Mlp,
    pub critic: Mlp,
    pub opt_actor: AdamState,
    pub opt_critic: AdamState,
    pub global_step: u64,
    rollout: Rollout,
    rng: ChaCha8Rng,
}

impl PpoAgent {
    pub fn new(obs_dim: usize, n_actions: usize, cfg: PpoConfig, seed: u64) -> PpoAgent {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut adims = vec![obs_dim];
        adims.extend_from_slice(&cfg.hidden);
        adims.push(n_actions);
        let mut cdims = vec![obs_dim];
        cdims.extend_from_slice(&cfg.hidden);
        cdims.push(1);
        let actor = Mlp::new(&adims, &mut rng);
        let critic = Mlp::new(&cdims, &mut rng);
        let opt_actor = AdamState::new(&actor);
        let opt_critic = AdamState::new(&critic);
        PpoAgent {
            cfg,
            actor,
            critic,
            opt_actor,
            opt_critic,
            global_step: 0,
            rollout: Rollout::default(),
            rng,
        }
    }

    /// Sample an action; returns `(action, log-prob, value)` for the
    /// rollout record.
    pub fn act(&mut self, obs: &[f64]) -> (usize, f64, f64) {
        let logits = self.actor.forward(obs);
        let lp = log_softmax(&logits);
        let probs: Vec<f64> = lp.iter().map(|l| l.exp()).collect();
        let action = sample_categorical(&probs, &mut self.rng);
        let value = self.critic.forward(obs)[0];
        (action, lp[action], value)
    }

    pub fn act_greedy(&self, obs: &[f64]) -> usize {
        argmax(&self.actor.forward(obs))
    }

    pub fn value(&self, obs: &[f64]) -> f64 {
        self.critic.forward(obs)[0]
    }

    pub fn store(&mut self, state: Vec<f64>, action: usize, logp: f64, value: f64, reward: f64, done: bool) {
        self.rollout.states.push(state);
        self.rollout.actions.push(action);
        self.rollout.logps.push(logp);
        self.rollout.values.push(value);
        self.rollout.rewards.push(reward);
        self.rollout.dones.push(done);
        self.global_step += 1;
    }

    pub fn rollout_len(&self) -> usize {
        self.rollout.len()
    }

    pub fn ready(&self) -> bool {
        self.rollout.len() >= self.cfg.horizon
    }

    /// Run the PPO update over the stored rollout: GAE with the bootstrap
    /// value, advantage normalization, then `epochs` passes of shuffled
    /// minibatch gradient steps on both networks.
    pub fn update(&mut self, bootstrap_value: f64) -> PpoStats {
        let n = self.rollout.len();
        assert!(n > 0, "update on an empty rollout");
        let mut values = self.rollout.values.clone();
        values.push(bootstrap_value);
        let (adv, ret) =
            compute_gae(&self.rollout.rewards, &values, &self.rollout.dones, self.cfg.gamma, self.cfg.lambda);

        let mean = adv.iter().sum::<f64>() / n as f64;
        let var = adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        let adv_n: Vec<f64> = adv.iter().map(|a| (a - mean) / (std + 1e-8)).collect();

        let mut stats = PpoStats::default();
        let mut clipped_count = 0usize;
        let mut indices: Vec<usize> = (0..n).collect();
        for _ in 0..self.cfg.epochs {
            indices.shuffle(&mut self.rng);
            for chunk in indices.chunks(self.cfg.minibatch) {
                let nb = chunk.len() as f64;
                let mut ga = Gradients::zeros_like(&self.actor);
                let mut gc = Gradients::zeros_like(&self.critic);
                for &i in chunk {
                    let (logits, trace_a) = self.actor.forward_trace(&self.rollout.states[i]);
                    let mut terms = policy_loss_terms(
                        &logits,
                        self.rollout.actions[i],
                        self.rollout.logps[i],
                        adv_n[i],
                        self.cfg.clip,
                        self.cfg.entropy_coef,
                    );
                    for g in &mut terms.dl_dlogits {
                        *g /= nb;
                    }
                    ga.add(&self.actor.backward(&trace_a, &terms.dl_dlogits));

                    let (v, trace_c) = self.critic.forward_trace(&self.rollout.states[i]);
                    let err = v[0] - ret[i];
                    let dv = [2.0 * self.cfg.value_coef * err / nb];
                    gc.add(&self.critic.backward(&trace_c, &dv));

                    stats.policy_loss += terms.loss;
                    stats.value_loss += self.cfg.value_coef * err * err;
                    stats.entropy += terms.entropy;
                    stats.approx_kl += terms.kl;
                    if (terms.ratio - 1.0).abs() > self.cfg.clip {
                        clipped_count += 1;
                    }
                    stats.samples += 1;
                }
                self.opt_actor.step(&mut self.actor, &ga, self.cfg.lr);
                self.opt_critic.step(&mut self.critic, &gc, self.cfg.lr);
            }
        }
        let total = stats.samples.max(1) as f64;
        stats.policy_loss /= total;
        stats.value_loss /= total;
        stats.entropy /= total;
        stats.approx_kl /= total;
        stats.clip_fraction = clipped_count as f64 / total;
        self.rollout.clear();
        stats
    }
}
