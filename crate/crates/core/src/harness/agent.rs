//! The defender roster: everything that can sit in the driver's seat of an
//! episode, from literal inaction to trained networks.

use std::collections::{BTreeMap, BTreeSet};
use std::net::Ipv4Addr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::action_space::ActionId;
use crate::env::feature::StateVector;
use crate::env::Env;
use crate::rl::dqn::DqnAgent;
use crate::rl::ppo::PpoAgent;
use crate::world::event::Signature;

pub trait Agent {
    fn name(&self) -> &str;
    fn begin_episode(&mut self, _seed: u64) {}
    fn select_action(&mut self, env: &Env, obs: &StateVector) -> ActionId;
}

/// The do-nothing baseline: whatever the initial config blocks is all that
/// ever gets blocked.
pub struct StaticPolicy;

impl Agent for StaticPolicy {
    fn name(&self) -> &str {
        "static"
    }

    fn select_action(&mut self, _env: &Env, _obs: &StateVector) -> ActionId {
        ActionId::NOOP
    }
}

/// An anomaly score a human analyst would get paged for.
pub const REVIEW_THRESHOLD: f64 = 0.7;

/// Paging delay bounds, in steps (five simulated seconds each).
pub const REVIEW_DELAY_MIN: u64 = 60;
pub const REVIEW_DELAY_MAX: u64 = 180;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum WatchedEntity {
    Ip(Ipv4Addr),
    Principal(String),
}

/// A detector-plus-analyst pipeline: events above the review threshold page
/// a human, who responds once per entity after a uniform random delay.
pub struct MlHumanDelay {
    rng: ChaCha8Rng,
    /// Entity -> episode step at which the response lands.
    pending: BTreeMap<WatchedEntity, u64>,
    handled: BTreeSet<WatchedEntity>,
}

impl MlHumanDelay {
    pub fn new() -> MlHumanDelay {
        MlHumanDelay { rng: ChaCha8Rng::seed_from_u64(0), pending: BTreeMap::new(), handled: BTreeSet::new() }
    }
}

impl Default for MlHumanDelay {
    fn default() -> Self {
        MlHumanDelay::new()
    }
}

impl Agent for MlHumanDelay {
    fn name(&self) -> &str {
        "ml-human"
    }

    fn begin_episode(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(2);
        self.rng = rng;
        self.pending.clear();
        self.handled.clear();
    }

    fn select_action(&mut self, env: &Env, _obs: &StateVector) -> ActionId {
        let now = env.episode_step();
        // Triage: new hot entities get a response scheduled.
        for e in env.window_events() {
            if e.anomaly < REVIEW_THRESHOLD {
                continue;
            }
            let entity = if let Ok(ip) = e.source.parse::<Ipv4Addr>() {
                Some(WatchedEntity::Ip(ip))
            } else if env.view().principals.iter().any(|p| p.id == e.source) {
                Some(WatchedEntity::Principal(e.source.clone()))
            } else {
                None
            };
            let Some(entity) = entity else { continue };
            if self.handled.contains(&entity) || self.pending.contains_key(&entity) {
                continue;
            }
            let delay = self.rng.gen_range(REVIEW_DELAY_MIN..=REVIEW_DELAY_MAX);
            self.pending.insert(entity, now + delay);
        }

        // Act on the first due response whose entity still has a slot.
        let due: Vec<WatchedEntity> = self
            .pending
            .iter()
            .filter(|(_, at)| **at <= now)
            .map(|(e, _)| e.clone())
            .collect();
        for entity in due {
            let action = match &entity {
                WatchedEntity::Ip(ip) => env.slot_for_source(*ip),
                WatchedEntity::Principal(p) => env.slot_for_principal(p),
            };
            if let Some(a) = action {
                self.pending.remove(&entity);
                self.handled.insert(entity);
                return a;
            }
            // No way to act anymore (already denied, or the activity is
            // gone); close the ticket.
            if match &entity {
                WatchedEntity::Ip(ip) => !env
                    .window_events()
                    .any(|e| e.source.parse::<Ipv4Addr>().map_or(false, |s| s == *ip)),
                WatchedEntity::Principal(p) => !env.window_events().any(|e| e.source == *p),
            } {
                self.pending.remove(&entity);
                self.handled.insert(entity);
            }
        }
        ActionId::NOOP
    }
}

/// Rule-based immediate responder working only from observable events: the
/// ceiling for reactive play, useful for shaking out scenario plumbing.
pub struct ScriptedResponder;

impl Agent for ScriptedResponder {
    fn name(&self) -> &str {
        "scripted"
    }

    fn select_action(&mut self, env: &Env, _obs: &StateVector) -> ActionId {
        if let Some(a) = env.first_rule_counter_slot() {
            return a;
        }
        for e in env.window_events() {
            match e.signature {
                Signature::Scan | Signature::Flood | Signature::Sqli | Signature::Xss => {
                    if let Ok(ip) = e.source.parse::<Ipv4Addr>() {
                        if let Some(a) = env.slot_for_source(ip) {
                            return a;
                        }
                    }
                }
                Signature::Privesc => {
                    if env.view().principals.iter().any(|p| p.id == e.source) {
                        if let Some(a) = env.slot_for_principal(&e.source) {
                            return a;
                        }
                    }
                }
                Signature::None => {}
            }
        }
        // Benign bursts carry no attack signature, so they fall through.
        ActionId::NOOP
    }
}

/// A trained value network acting greedily.
pub struct GreedyDqn {
    pub agent: DqnAgent,
    label: String,
}

impl GreedyDqn {
    pub fn new(agent: DqnAgent) -> GreedyDqn {
        GreedyDqn { agent, label: "dqn".to_string() }
    }
}

impl Agent for GreedyDqn {
    fn name(&self) -> &str {
        &self.label
    }

    fn select_action(&mut self, _env: &Env, obs: &StateVector) -> ActionId {
        ActionId(self.agent.select_greedy(obs.as_slice()))
    }
}

/// A trained policy network acting by argmax logit.
pub struct GreedyPpo {
    pub agent: PpoAgent,
    label: String,
}

impl GreedyPpo {
    pub fn new(agent: PpoAgent) -> GreedyPpo {
        GreedyPpo { agent, label: "ppo".to_string() }
    }
}

impl Agent for GreedyPpo {
    fn name(&self) -> &str {
        &self.label
    }

    fn select_action(&mut self, _env: &Env, obs: &StateVector) -> ActionId {
        ActionId(self.agent.act_greedy(obs.as_slice()))
    }
}
