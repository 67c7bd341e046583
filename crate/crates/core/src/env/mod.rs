//! The RL environment: a seeded world plus a live security config, wrapped
//! in a reset/step interface over fixed-width observations and a flat
//! discrete action space.
//!
//! Each step runs one action through the config, advances the world five
//! simulated seconds, and settles the reward from what actually happened.
//! Everything downstream of the seed is deterministic.

pub mod action_space;
pub mod feature;
pub mod reward;
pub mod sampler;

use std::collections::{BTreeSet, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::policy::{ActionDescriptor, PolicyError, SecurityConfig};
use crate::rules::{Actor, Cidr};
use crate::world::compliance::{evaluate_compliance, ComplianceId};
use crate::world::event::SecurityEvent;
use crate::world::scenario::ConfigEffect;
use crate::world::topology::TopologyConfig;
use crate::world::{world_init, IncidentOutcome, IncidentRecord, ScenarioStatus, WorldError, WorldState};

use action_space::{
    candidate_ranking, resolve, ActionId, ActionType, DefensiveTarget, ResolvedAction, SlotTables,
    ACTION_COUNT,
};
use feature::{extract_features, FeatureContext, LastAction, StateVector, WorldView};
use reward::{compute_reward, RewardBreakdown, RewardConfig, StepOutcome};
use sampler::{sample_episode, ScenarioMix};

/// One simulated hour at five seconds per step.
pub const DEFAULT_EPISODE_LEN: u64 = 720;

/// How many steps of events stay visible to the agent.
pub const DEFAULT_WINDOW_STEPS: u64 = 12;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub episode_len: u64,
    pub window_steps: u64,
    pub guardrails: bool,
    pub mix: ScenarioMix,
    pub rewards: RewardConfig,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            episode_len: DEFAULT_EPISODE_LEN,
            window_steps: DEFAULT_WINDOW_STEPS,
            guardrails: true,
            mix: ScenarioMix::default(),
            rewards: RewardConfig::default(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("action id {0} is out of range (0..{})", ACTION_COUNT)]
    BadAction(usize),
    #[error("episode is over; call reset")]
    EpisodeOver,
    #[error(transparent)]
    World(#[from] WorldError),
}

/// Side data about a transition that the reward already folded in, kept for
/// metrics and debugging.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionInfo {
    pub outcome: StepOutcome,
    pub incidents: Vec<IncidentRecord>,
    /// Active malicious scenarios the action's target belongs to.
    pub attributed_scenarios: Vec<String>,
    /// Active benign scenarios disturbed by the action.
    pub touched_benign: Vec<String>,
    pub applied: Option<ActionDescriptor>,
    pub guardrail_rejected: bool,
    pub events_emitted: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: StateVector,
    pub reward: f64,
    pub breakdown: RewardBreakdown,
    pub done: bool,
    pub info: TransitionInfo,
}

pub struct Env {
    topo: TopologyConfig,
    cfg: EnvConfig,
    world: WorldState,
    config: SecurityConfig,
    window: VecDeque<SecurityEvent>,
    violations: BTreeSet<ComplianceId>,
    view: WorldView,
    slots: SlotTables,
    last_action: Option<LastAction>,
    episode_step: u64,
    rule_seq: u64,
    done: bool,
}

impl Env {
    pub fn new(topo: TopologyConfig, cfg: EnvConfig, seed: u64) -> Result<(Env, StateVector), EnvError> {
        topo.validate().map_err(WorldError::Topology)?;
        let world = world_init(&topo, seed)?;
        let config = SecurityConfig::baseline(&topo);
        let view = WorldView::observe(&world, &config);
        let mut env = Env {
            topo,
            cfg,
            world,
            config,
            window: VecDeque::new(),
            violations: BTreeSet::new(),
            view,
            slots: SlotTables::default(),
            last_action: None,
            episode_step: 0,
            rule_seq: 0,
            done: false,
        };
        let obs = env.reset(seed)?;
        Ok((env, obs))
    }

    /// Start a fresh episode: new world, baseline config, a scenario load
    /// drawn from the mix on the seed's second RNG stream.
    pub fn reset(&mut self, seed: u64) -> Result<StateVector, EnvError> {
        self.world = world_init(&self.topo, seed)?;
        self.config = SecurityConfig::baseline(&self.topo);
        self.config.set_guardrails_enabled(self.cfg.guardrails);
        let mut mix_rng = ChaCha8Rng::seed_from_u64(seed);
        mix_rng.set_stream(1);
        for script in sample_episode(&self.cfg.mix, &self.topo, self.cfg.episode_len, &mut mix_rng) {
            self.world.spawn_scenario(script)?;
        }
        self.window.clear();
        self.violations = evaluate_compliance(self.config.core());
        self.view = WorldView::observe(&self.world, &self.config);
        self.slots = candidate_ranking(&[], &self.config, &self.view);
        self.last_action = None;
        self.episode_step = 0;
        self.rule_seq = 0;
        self.done = false;
        Ok(self.observe())
    }

    pub fn action_count(&self) -> usize {
        ACTION_COUNT
    }

    pub fn episode_step(&self) -> u64 {
        self.episode_step
    }

    pub fn episode_len(&self) -> u64 {
        self.cfg.episode_len
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn config(&self) -> &SecurityConfig {
        &self.config
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn slot_tables(&self) -> &SlotTables {
        &self.slots
    }

    pub fn view(&self) -> &WorldView {
        &self.view
    }

    pub fn violations(&self) -> &BTreeSet<ComplianceId> {
        &self.violations
    }

    pub fn window_events(&self) -> impl Iterator<Item = &SecurityEvent> {
        self.window.iter()
    }

    /// Schedule recorded events in the underlying world. Call right after
    /// `reset`; events must sit at future steps.
    pub fn inject_replay(&mut self, events: Vec<SecurityEvent>) -> Result<(), EnvError> {
        self.world.inject_replay(events).map_err(EnvError::from)
    }

    fn window_refs(&self) -> Vec<&SecurityEvent> {
        self.window.iter().collect()
    }

    fn steps_since_change(&self) -> u64 {
        let last = self.config.change_log().last().map(|c| c.step).unwrap_or(0);
        self.world.step_count().saturating_sub(last)
    }

    fn observe(&self) -> StateVector {
        let window = self.window_refs();
        let ctx = FeatureContext {
            config: &self.config,
            view: &self.view,
            violations: &self.violations,
            slots: &self.slots,
            last_action: self.last_action,
            steps_since_change: self.steps_since_change(),
            episode_step: self.episode_step,
            episode_len: self.cfg.episode_len,
        };
        extract_features(&window, &ctx)
    }

    /// Scenario ids whose entities match a defensive target, split by truth.
    /// Blocking a malicious source that concluded inside the event window is
    /// still treated as aimed at something real.
    fn match_target(&self, target: &DefensiveTarget) -> (Vec<String>, Vec<String>, bool) {
        let mut active_malicious = Vec::new();
        let mut active_benign = Vec::new();
        let mut recent_malicious = false;
        let now = self.world.step_count();
        for st in self.world.scenarios() {
            let hit = match target {
                DefensiveTarget::Support => false,
                DefensiveTarget::RuleCounter(rule_id) => st.script.config_effects.iter().any(|(_, e)| {
                    matches!(e, ConfigEffect::InsertRule(r) if r.id == *rule_id)
                }),
                DefensiveTarget::SourceBlock(c) => {
                    st.script.source.ips().iter().any(|ip| c.contains_addr(*ip))
                }
                DefensiveTarget::Principal(p) => st.script.source.principal() == Some(p.as_str()),
                DefensiveTarget::Instance(i) => st.script.target.as_deref() == Some(i.as_str()),
            };
            if !hit {
                continue;
            }
            if st.status == ScenarioStatus::Active {
                if st.script.truth_malicious() {
                    active_malicious.push(st.script.id.clone());
                } else {
                    active_benign.push(st.script.id.clone());
                }
            } else if st.script.truth_malicious() {
                if let Some(end) = st.concluded_step {
                    if now.saturating_sub(end) <= self.cfg.window_steps {
                        recent_malicious = true;
                    }
                }
            }
        }
        (active_malicious, active_benign, recent_malicious)
    }

    pub fn step(&mut self, action: ActionId) -> Result<Transition, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeOver);
        }
        if !action.in_range() {
            return Err(EnvError::BadAction(action.0));
        }

        let v0 = self.violations.clone();
        let resolved = resolve(&self.slots, &self.config, action, self.rule_seq);

        let mut invalid = false;
        let mut changed = false;
        let mut guardrail_rejected = false;
        let mut applied = None;
        let mut attributed = Vec::new();
        let mut touched_benign = Vec::new();
        let mut false_positive = false;

        match resolved {
            ResolvedAction::NoOp => {}
            ResolvedAction::EmptySlot => invalid = true,
            ResolvedAction::Apply { descriptor, target } => {
                let change_step = self.world.step_count() + 1;
                match self.config.apply_action(descriptor.clone(), Actor::Agent, change_step) {
                    Ok(_) => {
                        changed = true;
                        if matches!(descriptor, ActionDescriptor::AddRule(_)) {
                            self.rule_seq += 1;
                        }
                        let (malicious, benign, recent) = self.match_target(&target);
                        let disruptive = !matches!(
                            target,
                            DefensiveTarget::Support | DefensiveTarget::RuleCounter(_)
                        );
                        if disruptive && malicious.is_empty() && !recent {
                            false_positive = true;
                        }
                        attributed = malicious;
                        touched_benign = benign;
                        applied = Some(descriptor);
                    }
                    Err(PolicyError::GuardrailViolation(_)) => {
                        invalid = true;
                        guardrail_rejected = true;
                    }
                    Err(_) => invalid = true,
                }
            }
        }

        let v1 = evaluate_compliance(self.config.core());
        let violations_fixed = v0.difference(&v1).count() as u32;
        let violations_introduced = v1.difference(&v0).count() as u32;

        let out = self.world.step(&mut self.config)?;
        let events_emitted = out.events.len();
        for e in &out.events {
            self.window.push_back(e.clone());
        }
        let horizon = self.world.step_count().saturating_sub(self.cfg.window_steps);
        while self.window.front().map_or(false, |e| e.step <= horizon) {
            self.window.pop_front();
        }

        let v2 = evaluate_compliance(self.config.core());
        let breaches = out
            .incidents
            .iter()
            .filter(|r| r.outcome == IncidentOutcome::Breached)
            .count() as u32;
        let attack_ongoing = self.world.active_malicious() > 0 || breaches > 0;

        let outcome = StepOutcome {
            neutralized_by_agent: out.agent_neutralized,
            breaches,
            violations_fixed,
            violations_introduced,
            outstanding_violations: v2.len() as u32,
            false_positives: u32::from(false_positive),
            attack_ongoing,
            agent_changed: changed,
            invalid_action: invalid,
            resource_units: self.config.core().monitoring_overhead_units(),
        };
        let breakdown = compute_reward(&self.cfg.rewards, &outcome);

        self.violations = v2;
        self.view = WorldView::observe(&self.world, &self.config);
        let window = self.window_refs();
        self.slots = candidate_ranking(&window, &self.config, &self.view);
        self.last_action = Some(if changed {
            match action_space::decode(action) {
                Some((t, _)) => LastAction::Typed(t),
                None => LastAction::NoOp,
            }
        } else {
            LastAction::NoOp
        });
        self.episode_step += 1;
        self.done = self.episode_step >= self.cfg.episode_len;

        Ok(Transition {
            obs: self.observe(),
            reward: breakdown.total(),
            breakdown,
            done: self.done,
            info: TransitionInfo {
                outcome,
                incidents: out.incidents,
                attributed_scenarios: attributed,
                touched_benign,
                applied,
                guardrail_rejected,
                events_emitted,
            },
        })
    }

    /// The slot an action type currently maps a concrete entity into, if
    /// any. Used by scripted agents that think in terms of entities.
    pub fn slot_for_source(&self, ip: std::net::Ipv4Addr) -> Option<ActionId> {
        self.slots.block.iter().position(|c| match c {
            action_space::BlockCandidate::Source { cidr, .. } => cidr.contains_addr(ip),
            action_space::BlockCandidate::NonCompliantRule { .. } => false,
        })
        .map(|slot| action_space::encode(ActionType::BlockTraffic, slot))
    }

    pub fn slot_for_principal(&self, principal: &str) -> Option<ActionId> {
        self.slots
            .restrict
            .iter()
            .position(|p| p == principal)
            .map(|slot| action_space::encode(ActionType::RestrictUser, slot))
    }

    pub fn first_rule_counter_slot(&self) -> Option<ActionId> {
        self.slots.block.iter().position(|c| {
            matches!(c, action_space::BlockCandidate::NonCompliantRule { .. })
        })
        .map(|slot| action_space::encode(ActionType::BlockTraffic, slot))
    }
}

/// The env's own notion of a block target, re-exported for scripted agents.
pub fn block_cidr(c: &action_space::BlockCandidate) -> Option<Cidr> {
    match c {
        action_space::BlockCandidate::Source { cidr, .. } => Some(*cidr),
        action_space::BlockCandidate::NonCompliantRule { .. } => None,
    }
}
