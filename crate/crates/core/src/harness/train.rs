//! Training drivers for both agents, with a three-phase curriculum that
//! widens the scenario mix as the policy firms up. All seeds are derived
//! from the run seed, so a training run is a pure function of it.

use serde::{Deserialize, Serialize};

use crate::env::sampler::ScenarioMix;
use crate::env::{Env, EnvConfig, EnvError};
use crate::rl::dqn::{DqnAgent, DqnConfig};
use crate::rl::ppo::{PpoAgent, PpoConfig};
use crate::rl::replay::Sample;
use crate::world::topology::TopologyConfig;

use crate::env::action_space::{ActionId, ACTION_COUNT};
use crate::env::feature::FEATURE_DIM;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumPhase {
    pub name: String,
    pub mix: ScenarioMix,
    pub episodes: u32,
}

pub fn default_curriculum() -> Vec<CurriculumPhase> {
    vec![
        CurriculumPhase { name: "single-attack".into(), mix: ScenarioMix::single_attack(), episodes: 60 },
        CurriculumPhase { name: "multi-threat".into(), mix: ScenarioMix::multi_threat(), episodes: 60 },
        CurriculumPhase { name: "full".into(), mix: ScenarioMix::full(), episodes: 160 },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub episode: u32,
    pub phase: String,
    pub env_steps: u64,
    pub episode_return: f64,
}

/// What a training run did: the learning curve over completed episodes,
/// the exact number of environment steps taken, and how many gradient
/// updates ran (minibatches for DQN, full PPO updates for PPO).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub curve: Vec<CurvePoint>,
    pub env_steps: u64,
    pub updates: u64,
}

/// SplitMix64; used to derive independent episode seeds from the run seed.
pub fn mix_seed(base: u64, salt: u64) -> u64 {
    let mut z = base.wrapping_add(salt.wrapping_mul(0x9E37_79B9_7F4A_7C15)).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn phase_env(
    topo: &TopologyConfig,
    base: &EnvConfig,
    mix: &ScenarioMix,
    seed: u64,
) -> Result<Env, EnvError> {
    let cfg = EnvConfig { mix: mix.clone(), ..base.clone() };
    Ok(Env::new(topo.clone(), cfg, seed)?.0)
}

/// Train a DQN agent through the curriculum. The step budget is exact: the
/// run stops at that environment step even mid-episode, and a truncated
/// episode contributes experience but no curve point.
pub fn train_dqn(
    topo: &TopologyConfig,
    base: &EnvConfig,
    cfg: DqnConfig,
    curriculum: &[CurriculumPhase],
    step_budget: u64,
    seed: u64,
) -> Result<(DqnAgent, TrainReport), EnvError> {
    let mut agent = DqnAgent::new(FEATURE_DIM, ACTION_COUNT, cfg, mix_seed(seed, 1));
    let mut report = TrainReport { curve: Vec::new(), env_steps: 0, updates: 0 };
    let mut episode_index = 0u32;
    'phases: for (pi, phase) in curriculum.iter().enumerate() {
        let mut env = phase_env(topo, base, &phase.mix, mix_seed(seed, 1000 + pi as u64))?;
        for ep in 0..phase.episodes {
            let ep_seed = mix_seed(seed, (pi as u64) << 32 | u64::from(ep));
            let mut obs = env.reset(ep_seed)?;
            let mut ep_return = 0.0;
            let completed = loop {
                let a = agent.select(obs.as_slice(), ACTION_COUNT);
                let t = env.step(ActionId(a))?;
                report.env_steps += 1;
                ep_return += t.reward;
                if agent
                    .observe(Sample {
                        state: obs.as_slice().to_vec(),
                        action: a,
                        reward: t.reward,
                        next_state: t.obs.as_slice().to_vec(),
                        done: t.done,
                    })
                    .is_some()
                {
                    report.updates += 1;
                }
                obs = t.obs;
                if t.done || report.env_steps >= step_budget {
                    break t.done;
                }
            };
            if completed {
                report.curve.push(CurvePoint {
                    episode: episode_index,
                    phase: phase.name.clone(),
                    env_steps: report.env_steps,
                    episode_return: ep_return,
                });
                episode_index += 1;
            }
            if report.env_steps >= step_budget {
                break 'phases;
            }
        }
    }
    Ok((agent, report))
}

/// Train a PPO agent through the curriculum. Updates fire whenever the
/// rollout reaches the horizon, bootstrapping mid-episode from the critic,
/// so a run of N steps performs exactly N / horizon updates.
pub fn train_ppo(
    topo: &TopologyConfig,
    base: &EnvConfig,
    cfg: PpoConfig,
    curriculum: &[CurriculumPhase],
    step_budget: u64,
    seed: u64,
) -> Result<(PpoAgent, TrainReport), EnvError> {
    let mut agent = PpoAgent::new(FEATURE_DIM, ACTION_COUNT, cfg, mix_seed(seed, 2));
    let mut report = TrainReport { curve: Vec::new(), env_steps: 0, updates: 0 };
    let mut episode_index = 0u32;
    'phases: for (pi, phase) in curriculum.iter().enumerate() {
        let mut env = phase_env(topo, base, &phase.mix, mix_seed(seed, 2000 + pi as u64))?;
        for ep in 0..phase.episodes {
            let ep_seed = mix_seed(seed, (pi as u64) << 32 | u64::from(ep));
            let mut obs = env.reset(ep_seed)?;
            let mut ep_return = 0.0;
            let completed = loop {
                let (a, logp, value) = agent.act(obs.as_slice());
                let t = env.step(ActionId(a))?;
                report.env_steps += 1;
                ep_return += t.reward;
                agent.store(obs.as_slice().to_vec(), a, logp, value, t.reward, t.done);
                obs = t.obs;
                if agent.ready() {
                    let bootstrap = if t.done { 0.0 } else { agent.value(obs.as_slice()) };
                    agent.update(bootstrap);
                    report.updates += 1;
                }
                if t.done || report.env_steps >= step_budget {
                    break t.done;
                }
            };
            if completed {
                report.curve.push(CurvePoint {
                    episode: episode_index,
                    phase: phase.name.clone(),
                    env_steps: report.env_steps,
                    episode_return: ep_return,
                });
                episode_index += 1;
            }
            if report.env_steps >= step_budget {
                break 'phases;
            }
        }
    }
    Ok((agent, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_phases(episodes: u32) -> Vec<CurriculumPhase> {
        vec![CurriculumPhase {
            name: "single-attack".into(),
            mix: ScenarioMix::single_attack(),
            episodes,
        }]
    }

    #[test]
    fn step_budget_is_exact() {
        let topo = TopologyConfig::default();
        let base = EnvConfig::default();
        let cfg = DqnConfig { hidden: vec![16], ..DqnConfig::default() };
        let (_, report) = train_dqn(&topo, &base, cfg, &tiny_phases(50), 2000, 3).unwrap();
        assert_eq!(report.env_steps, 2000);
        // 720-step episodes: two complete, the third truncated off the curve.
        assert_eq!(report.curve.len(), 2);
        assert_eq!(report.curve[1].env_steps, 1440);
    }

    #[test]
    fn ppo_update_cadence_is_steps_over_horizon() {
        let topo = TopologyConfig::default();
        let base = EnvConfig::default();
        let cfg = PpoConfig { hidden: vec![8], horizon: 256, minibatch: 64, epochs: 1, ..PpoConfig::default() };
        let (_, report) = train_ppo(&topo, &base, cfg, &tiny_phases(10), 1024, 3).unwrap();
        assert_eq!(report.env_steps, 1024);
        assert_eq!(report.updates, 4);
    }

    #[test]
    fn identical_seeds_give_identical_dqn_curves_and_weights() {
        let topo = TopologyConfig::default();
        let base = EnvConfig::default();
        let cfg = DqnConfig { hidden: vec![8], ..DqnConfig::default() };
        let (a1, r1) = train_dqn(&topo, &base, cfg.clone(), &tiny_phases(2), 5000, 7).unwrap();
        let (a2, r2) = train_dqn(&topo, &base, cfg.clone(), &tiny_phases(2), 5000, 7).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(a1.online.flat_params(), a2.online.flat_params());
        let (a3, r3) = train_dqn(&topo, &base, cfg, &tiny_phases(2), 5000, 8).unwrap();
        assert!(r1 != r3 || a1.online.flat_params() != a3.online.flat_params());
    }

    #[test]
    fn identical_seeds_give_identical_ppo_training() {
        let topo = TopologyConfig::default();
        let base = EnvConfig::default();
        let cfg = PpoConfig { hidden: vec![8], horizon: 256, minibatch: 32, epochs: 2, ..PpoConfig::default() };
        let (a1, r1) = train_ppo(&topo, &base, cfg.clone(), &tiny_phases(2), 5000, 7).unwrap();
        let (a2, r2) = train_ppo(&topo, &base, cfg, &tiny_phases(2), 5000, 7).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(a1.actor.flat_params(), a2.actor.flat_params());
    }

    #[test]
    fn seed_mixing_scatters() {
        let a = mix_seed(1, 0);
        let b = mix_seed(1, 1);
        let c = mix_seed(2, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_ne!(b, c);
    }
}
