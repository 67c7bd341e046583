//! Runs one agent through one seeded episode and distills what happened
//! into per-scenario and per-episode statistics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::env::{Env, EnvError};
use crate::world::scenario::ScenarioKind;
use crate::world::{IncidentOutcome, ScenarioStatus};

use super::agent::Agent;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioStat {
    pub id: String,
    pub kind: ScenarioKind,
    pub truth_malicious: bool,
    pub baseline_blockable: bool,
    /// How the scenario ended; `None` means it was still open at episode
    /// end (config drift left uncountered).
    pub outcome: Option<IncidentOutcome>,
    pub first_event_step: Option<u64>,
    pub concluded_step: Option<u64>,
    pub agent_attributed: bool,
    /// Step of the first defensive action aimed at this scenario's entity.
    pub defended_step: Option<u64>,
}

impl ScenarioStat {
    pub fn defended(&self) -> bool {
        self.defended_step.is_some()
    }

    /// Seconds from first observable event to conclusion, for scenarios the
    /// agent neutralized.
    pub fn response_seconds(&self) -> Option<f64> {
        if !self.agent_attributed || self.outcome != Some(IncidentOutcome::Neutralized) {
            return None;
        }
        let first = self.first_event_step?;
        let end = self.concluded_step?;
        Some(end.saturating_sub(first) as f64 * crate::world::STEP_SECONDS as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub seed: u64,
    pub steps: u64,
    pub total_reward: f64,
    pub scenarios: Vec<ScenarioStat>,
    pub agent_changes: u32,
    pub fp_actions: u32,
    pub invalid_actions: u32,
    pub guardrail_rejections: u32,
    pub breaches: u32,
    pub neutralized_by_agent: u32,
    pub violations_at_end: u32,
}

pub fn run_episode(env: &mut Env, agent: &mut dyn Agent, seed: u64) -> Result<EpisodeStats, EnvError> {
    let mut obs = env.reset(seed)?;
    agent.begin_episode(seed);

    let mut total_reward = 0.0;
    let mut agent_changes = 0;
    let mut fp_actions = 0;
    let mut invalid_actions = 0;
    let mut guardrail_rejections = 0;
    let mut breaches = 0;
    let mut neutralized_by_agent = 0;
    let mut steps = 0;
    let mut defended_at: BTreeMap<String, u64> = BTreeMap::new();

    loop {
        let action = agent.select_action(env, &obs);
        let t = env.step(action)?;
        steps += 1;
        total_reward += t.reward;
        let o = &t.info.outcome;
        agent_changes += u32::from(o.agent_changed);
        fp_actions += o.false_positives;
        invalid_actions += u32::from(o.invalid_action);
        guardrail_rejections += u32::from(t.info.guardrail_rejected);
        breaches += o.breaches;
        neutralized_by_agent += o.neutralized_by_agent;
        let acted_step = env.world().step_count();
        for id in t.info.attributed_scenarios.iter().chain(&t.info.touched_benign) {
            defended_at.entry(id.clone()).or_insert(acted_step);
        }
        obs = t.obs;
        if t.done {
            break;
        }
    }

    let scenarios = env
        .world()
        .scenarios()
        .map(|st| ScenarioStat {
            id: st.script.id.clone(),
            kind: st.script.kind,
            truth_malicious: st.script.truth_malicious(),
            baseline_blockable: st.script.baseline_blockable,
            outcome: match st.status {
                ScenarioStatus::Neutralized => Some(IncidentOutcome::Neutralized),
                ScenarioStatus::Breached => Some(IncidentOutcome::Breached),
                ScenarioStatus::Expired => Some(IncidentOutcome::Expired),
                ScenarioStatus::Pending | ScenarioStatus::Active => None,
            },
            first_event_step: st.first_event_step,
            concluded_step: st.concluded_step,
            agent_attributed: st.agent_attributed,
            defended_step: defended_at.get(&st.script.id).copied(),
        })
        .collect();

    Ok(EpisodeStats {
        seed,
        steps,
        total_reward,
        scenarios,
        agent_changes,
        fp_actions,
        invalid_actions,
        guardrail_rejections,
        breaches,
        neutralized_by_agent,
        violations_at_end: env.violations().len() as u32,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::sampler::ScenarioMix;
    use crate::env::EnvConfig;
    use crate::harness::agent::{ScriptedResponder, StaticPolicy};
    use crate::world::topology::TopologyConfig;

    fn env(mix: ScenarioMix, seed: u64) -> Env {
        let cfg = EnvConfig { mix, ..EnvConfig::default() };
        Env::new(TopologyConfig::default(), cfg, seed).unwrap().0
    }

    #[test]
    fn static_policy_loses_to_a_non_blockable_attack() {
        let mix = ScenarioMix { blockable_fraction: 0.0, ..ScenarioMix::single_attack() };
        let mut e = env(mix, 31);
        let stats = run_episode(&mut e, &mut StaticPolicy, 31).unwrap();
        assert_eq!(stats.steps, 720);
        assert_eq!(stats.agent_changes, 0);
        assert_eq!(stats.breaches, 1);
        assert_eq!(stats.scenarios.len(), 1);
        assert_eq!(stats.scenarios[0].outcome, Some(IncidentOutcome::Breached));
        assert!(!stats.scenarios[0].defended());
    }

    #[test]
    fn static_policy_wins_only_blockable_attacks() {
        let mix = ScenarioMix { blockable_fraction: 1.0, ..ScenarioMix::single_attack() };
        let mut e = env(mix, 8);
        let stats = run_episode(&mut e, &mut StaticPolicy, 8).unwrap();
        let s = &stats.scenarios[0];
        if s.kind.network_attack() {
            assert_eq!(s.outcome, Some(IncidentOutcome::Neutralized));
            assert!(!s.agent_attributed, "the baseline deny did the work");
            assert_eq!(stats.neutralized_by_agent, 0);
        }
    }

    #[test]
    fn scripted_responder_stops_single_attacks() {
        for seed in [1, 2, 3, 4, 5] {
            let mix = ScenarioMix { blockable_fraction: 0.0, ..ScenarioMix::single_attack() };
            let mut e = env(mix, seed);
            let stats = run_episode(&mut e, &mut ScriptedResponder, seed).unwrap();
            let s = &stats.scenarios[0];
            assert_eq!(
                s.outcome,
                Some(IncidentOutcome::Neutralized),
                "seed {seed}: {:?} not stopped",
                s.kind
            );
            assert!(s.agent_attributed, "seed {seed}");
            assert!(stats.fp_actions == 0, "seed {seed}");
            assert!(s.response_seconds().unwrap() <= 60.0, "seed {seed}");
        }
    }

    #[test]
    fn identical_runs_produce_identical_stats() {
        let mix = ScenarioMix::full();
        let mut e1 = env(mix.clone(), 77);
        let mut e2 = env(mix, 77);
        let a = run_episode(&mut e1, &mut ScriptedResponder, 77).unwrap();
        let b = run_episode(&mut e2, &mut ScriptedResponder, 77).unwrap();
        assert_eq!(a, b);
    }
}
