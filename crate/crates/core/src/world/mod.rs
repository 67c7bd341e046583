//! The deterministic world simulation. One step represents five seconds of
//! wall time. Each step the world advances every spawned scenario: checks
//! its neutralization predicate, enforces its breach deadline, applies its
//! scheduled config effects, and emits its staged events, with suppression
//! decided by the live firewall, isolation, and principal restrictions.

pub mod compliance;
pub mod event;
pub mod scenario;
pub mod topology;
pub mod trace;

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policy::{ActionDescriptor, PolicyError, SecurityConfig};
use crate::rules::{flow_denied, Actor, Cidr, Direction};
use event::{EventKind, EventOrigin, SecurityEvent, Signature};
use scenario::{ConfigEffect, ScenarioScript, ScenarioSource, ScriptError, Stage};
use topology::{Privilege, Tier, TopologyConfig, TopologyError, Zone};

/// Wall-clock seconds represented by one simulation step.
pub const STEP_SECONDS: u64 = 5;

/// Seeded anomaly jitter applied to every emitted event.
const ANOMALY_NOISE: f64 = 0.05;

/// Anomaly scores of idle principals decay by this factor per step.
const ANOMALY_DECAY: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    pub tier: Tier,
    pub zone: Zone,
    pub isolated: bool,
    pub baseline_monitoring: u8,
    pub compromised: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Principal {
    pub id: String,
    pub privilege: Privilege,
    /// Behavioral anomaly score in [0, 1], ramped by active scenarios and
    /// decaying when idle.
    pub anomaly_score: f64,
    pub compromised: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioStatus {
    Pending,
    Active,
    Neutralized,
    Breached,
    Expired,
}

impl ScenarioStatus {
    pub fn concluded(self) -> bool {
        matches!(self, ScenarioStatus::Neutralized | ScenarioStatus::Breached | ScenarioStatus::Expired)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IncidentOutcome {
    Neutralized,
    Breached,
    Expired,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidentRecord {
    pub step: u64,
    pub scenario_id: String,
    pub outcome: IncidentOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioState {
    pub script: ScenarioScript,
    pub status: ScenarioStatus,
    pub first_event_step: Option<u64>,
    pub concluded_step: Option<u64>,
    /// For neutralized scenarios: whether stripping agent changes from the
    /// config would un-satisfy the predicate, i.e. the agent did it.
    pub agent_attributed: bool,
}

/// Everything one world step produced.
#[derive(Debug, Clone, Default)]
pub struct StepOutput {
    pub events: Vec<SecurityEvent>,
    pub incidents: Vec<IncidentRecord>,
    /// Neutralizations this step attributable to agent changes.
    pub agent_neutralized: u32,
    /// Config changes made by scenario drift this step.
    pub drift_changes: u32,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("scenario `{0}` already exists")]
    DuplicateScenario(String),
    #[error("scenario `{id}` onset {onset} is not in the future (world at step {step})")]
    OnsetNotFuture { id: String, onset: u64, step: u64 },
    #[error("scenario `{0}` not found")]
    UnknownScenario(String),
    #[error("scenario `{id}` targets unknown instance `{target}`")]
    UnknownTarget { id: String, target: String },
    #[error("scenario `{id}` references unknown principal `{principal}`")]
    UnknownPrincipal { id: String, principal: String },
    #[error("replay event at step {event_step} is not in the future (world at step {step})")]
    ReplayNotFuture { event_step: u64, step: u64 },
}

#[derive(Debug, Clone)]
pub struct WorldState {
    step: u64,
    pub instances: Vec<Instance>,
    pub principals: Vec<Principal>,
    scenarios: BTreeMap<String, ScenarioState>,
    pub incident_log: Vec<IncidentRecord>,
    replay: BTreeMap<u64, Vec<SecurityEvent>>,
    rng: ChaCha8Rng,
}

pub fn world_init(topology: &TopologyConfig, seed: u64) -> Result<WorldState, WorldError> {
    topology.validate()?;
    Ok(WorldState {
        step: 0,
        instances: topology
            .instances
            .iter()
            .map(|i| Instance {
                id: i.id.clone(),
                tier: i.tier,
                zone: i.zone,
                isolated: false,
                baseline_monitoring: i.monitoring_level,
                compromised: false,
            })
            .collect(),
        principals: topology
            .principals
            .iter()
            .map(|p| Principal {
                id: p.id.clone(),
                privilege: p.privilege,
                anomaly_score: 0.0,
                compromised: false,
            })
            .collect(),
        scenarios: BTreeMap::new(),
        incident_log: Vec::new(),
        replay: BTreeMap::new(),
        rng: ChaCha8Rng::seed_from_u64(seed),
    })
}

impl WorldState {
    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn instance(&self, id: &str) -> Option<&Instance> {
        self.instances.iter().find(|i| i.id == id)
    }

    pub fn principal(&self, id: &str) -> Option<&Principal> {
        self.principals.iter().find(|p| p.id == id)
    }

    pub fn scenario(&self, id: &str) -> Option<&ScenarioState> {
        self.scenarios.get(id)
    }

    pub fn scenarios(&self) -> impl Iterator<Item = &ScenarioState> {
        self.scenarios.values()
    }

    pub fn scenario_status(&self, id: &str) -> Result<ScenarioStatus, WorldError> {
        self.scenarios
            .get(id)
            .map(|s| s.status)
            .ok_or_else(|| WorldError::UnknownScenario(id.to_string()))
    }

    pub fn active_malicious(&self) -> u32 {
        self.scenarios
            .values()
            .filter(|s| s.status == ScenarioStatus::Active && s.script.truth_malicious())
            .count() as u32
    }

    /// Register a scripted scenario. Its onset must lie in the future and
    /// every entity it references must exist.
    pub fn spawn_scenario(&mut self, script: ScenarioScript) -> Result<(), WorldError> {
        script.validate()?;
        if self.scenarios.contains_key(&script.id) {
            return Err(WorldError::DuplicateScenario(script.id.clone()));
        }
        if script.onset <= self.step {
            return Err(WorldError::OnsetNotFuture {
                id: script.id.clone(),
                onset: script.onset,
                step: self.step,
            });
        }
        if let Some(target) = &script.target {
            if self.instance(target).is_none() {
                return Err(WorldError::UnknownTarget {
                    id: script.id.clone(),
                    target: target.clone(),
                });
            }
        }
        if let Some(p) = script.source.principal() {
            if self.principal(p).is_none() {
                return Err(WorldError::UnknownPrincipal {
                    id: script.id.clone(),
                    principal: p.to_string(),
                });
            }
        }
        self.scenarios.insert(
            script.id.clone(),
            ScenarioState {
                script,
                status: ScenarioStatus::Pending,
                first_event_step: None,
                concluded_step: None,
                agent_attributed: false,
            },
        );
        Ok(())
    }

    /// Schedule replayed events for future steps. They surface through
    /// `step` at their recorded step, before scenario emissions.
    pub fn inject_replay(&mut self, events: Vec<SecurityEvent>) -> Result<(), WorldError> {
        for e in &events {
            if e.step <= self.step {
                return Err(WorldError::ReplayNotFuture { event_step: e.step, step: self.step });
            }
        }
        for mut e in events {
            e.origin = EventOrigin::Replay;
            self.replay.entry(e.step).or_default().push(e);
        }
        Ok(())
    }

    /// Advance the world one step against the live config. Scenario drift
    /// may mutate the config (as the drift actor, bypassing guardrails).
    pub fn step(&mut self, config: &mut SecurityConfig) -> Result<StepOutput, WorldError> {
        self.step += 1;
        let t = self.step;
        for inst in &mut self.instances {
            inst.isolated = config.is_isolated(&inst.id);
        }

        let mut out = StepOutput::default();
        if let Some(evs) = self.replay.remove(&t) {
            out.events.extend(evs);
        }

        let ids: Vec<String> = self.scenarios.keys().cloned().collect();
        let mut ramped: BTreeSet<String> = BTreeSet::new();
        for id in ids {
            let st = self.scenarios.get_mut(&id).expect("scenario ids are stable");
            if st.status.concluded() || t < st.script.onset {
                continue;
            }
            st.status = ScenarioStatus::Active;
            let off = t - st.script.onset;

            if st.script.kind == scenario::ScenarioKind::CredCompromise && off == 0 {
                if let Some(pid) = st.script.source.principal() {
                    if let Some(p) = self.principals.iter_mut().find(|p| p.id == pid) {
                        p.compromised = true;
                    }
                }
            }

            // Neutralization wins over the deadline when both hold.
            if st.script.neutralize.eval(config.core(), &st.script.source) {
                let counterfactual = config.counterfactual_without_agent();
                st.agent_attributed = !st.script.neutralize.eval(&counterfactual, &st.script.source);
                st.status = ScenarioStatus::Neutralized;
                st.concluded_step = Some(t);
                let rec = IncidentRecord {
                    step: t,
                    scenario_id: id.clone(),
                    outcome: IncidentOutcome::Neutralized,
                };
                out.incidents.push(rec.clone());
                self.incident_log.push(rec);
                // Shutting down benign activity never counts as a mitigation,
                // even when the agent caused it; the fp penalty handles that.
                if st.agent_attributed && st.script.truth_malicious() {
                    out.agent_neutralized += 1;
                }
                continue;
            }

            if t >= st.script.deadline(config.core()) {
                let outcome = if st.script.expires {
                    st.status = ScenarioStatus::Expired;
                    IncidentOutcome::Expired
                } else {
                    st.status = ScenarioStatus::Breached;
                    IncidentOutcome::Breached
                };
                st.concluded_step = Some(t);
                if outcome == IncidentOutcome::Breached {
                    mark_compromised(&mut self.instances, &st.script);
                }
                let rec = IncidentRecord { step: t, scenario_id: id.clone(), outcome };
                out.incidents.push(rec.clone());
                self.incident_log.push(rec);
                continue;
            }

            for (eff_off, effect) in st.script.config_effects.clone() {
                if eff_off != off {
                    continue;
                }
                let truth = st.script.truth_malicious();
                let event = apply_config_effect(config, &st.script, &effect, t, truth)?;
                out.drift_changes += 1;
                out.events.push(event);
                st.first_event_step.get_or_insert(t);
            }

            if let Some(stage) = st.script.stage_at(off).cloned() {
                let emitted = emit_stage(
                    &mut self.rng,
                    &mut out.events,
                    config,
                    &self.instances,
                    &st.script,
                    &stage,
                    off,
                    t,
                );
                if emitted {
                    st.first_event_step.get_or_insert(t);
                    if let Some(pid) = st.script.source.principal() {
                        let base = ramp_anomaly(&stage, off);
                        if let Some(p) = self.principals.iter_mut().find(|p| p.id == pid) {
                            p.anomaly_score = base.clamp(0.0, 1.0);
                        }
                        ramped.insert(pid.to_string());
                    }
                }
            }
        }

        for p in &mut self.principals {
            if !ramped.contains(&p.id) {
                p.anomaly_score = if p.anomaly_score < 0.01 { 0.0 } else { p.anomaly_score * ANOMALY_DECAY };
            }
        }

        Ok(out)
    }
}

fn mark_compromised(instances: &mut [Instance], script: &ScenarioScript) {
    match &script.target {
        Some(target) => {
            if let Some(inst) = instances.iter_mut().find(|i| i.id == *target) {
                inst.compromised = true;
            }
        }
        // Tier-wide attacks (DDoS) take down whatever web capacity is
        // still exposed.
        None if script.kind == scenario::ScenarioKind::Ddos => {
            for inst in instances.iter_mut().filter(|i| i.tier == Tier::Web && !i.isolated) {
                inst.compromised = true;
            }
        }
        None => {}
    }
}

fn apply_config_effect(
    config: &mut SecurityConfig,
    script: &ScenarioScript,
    effect: &ConfigEffect,
    t: u64,
    truth: bool,
) -> Result<SecurityEvent, WorldError> {
    let (action, source, signature, anomaly, attrs) = match effect {
        ConfigEffect::DisableFlowLogging(zone) => (
            ActionDescriptor::SetFlowLogging { zone: *zone, enabled: false },
            script.source.principal().unwrap_or("unknown").to_string(),
            Signature::Privesc,
            0.75,
            [("api_name".to_string(), "StopLogging".to_string()), ("zone".to_string(), zone.to_string())],
        ),
        ConfigEffect::InsertRule(rule) => (
            ActionDescriptor::AddRule(rule.clone()),
            "config-drift".to_string(),
            Signature::None,
            0.3,
            [("rule_id".to_string(), rule.id.clone()), ("detail".to_string(), format!("{} {} {}", rule.source, rule.ports, rule.verb))],
        ),
    };
    config.apply_action(action, Actor::Drift, t)?;
    Ok(SecurityEvent {
        step: t,
        kind: EventKind::ConfigChange,
        source,
        signature,
        attrs: attrs.into_iter().collect(),
        anomaly,
        truth_malicious: truth,
        origin: EventOrigin::Scenario,
    })
}

fn ramp_anomaly(stage: &Stage, off: u64) -> f64 {
    let len = stage.until.saturating_sub(stage.offset);
    let progress = if len <= 1 {
        1.0
    } else {
        (off - stage.offset) as f64 / (len - 1) as f64
    };
    stage.emission.anomaly_from + (stage.emission.anomaly_to - stage.emission.anomaly_from) * progress
}

fn noisy(rng: &mut ChaCha8Rng, base: f64) -> f64 {
    (base + rng.gen_range(-ANOMALY_NOISE..=ANOMALY_NOISE)).clamp(0.0, 1.0)
}

/// Emit one stage's events for one step, honoring firewall denies,
/// isolation, and principal restrictions. Returns whether anything got out.
#[allow(clippy::too_many_arguments)]
fn emit_stage(
    rng: &mut ChaCha8Rng,
    events: &mut Vec<SecurityEvent>,
    config: &SecurityConfig,
    instances: &[Instance],
    script: &ScenarioScript,
    stage: &Stage,
    off: u64,
    t: u64,
) -> bool {
    let em = &stage.emission;
    let base = ramp_anomaly(stage, off);
    let truth = script.truth_malicious();
    let target_isolated = script
        .target
        .as_deref()
        .and_then(|id| instances.iter().find(|i| i.id == id))
        .is_some_and(|i| i.isolated);
    let mut emitted = false;

    match &script.source {
        ScenarioSource::Ip(_) | ScenarioSource::IpPool(_) => {
            if target_isolated {
                return false;
            }
            for ip in script.source.ips() {
                for k in 0..em.events_per_step {
                    let dst_port = match em.dst_port {
                        Some(p) if em.port_sweep => {
                            p.saturating_add((((off as u32) * em.events_per_step + k) * 7 % 2003) as u16)
                        }
                        Some(p) => p,
                        None => 0,
                    };
                    if flow_denied(config.rules(), Direction::Ingress, ip, dst_port) {
                        continue;
                    }
                    let mut attrs = BTreeMap::new();
                    attrs.insert("dst_port".to_string(), dst_port.to_string());
                    if let Some(target) = &script.target {
                        attrs.insert("target".to_string(), target.clone());
                    }
                    events.push(SecurityEvent {
                        step: t,
                        kind: em.kind,
                        source: ip.to_string(),
                        signature: em.signatures[(k as usize) % em.signatures.len().max(1)],
                        attrs,
                        anomaly: noisy(rng, base),
                        truth_malicious: truth,
                        origin: EventOrigin::Scenario,
                    });
                    emitted = true;
                }
            }
        }
        ScenarioSource::Principal(pid) => {
            if config.is_restricted(pid) {
                return false;
            }
            for k in 0..em.events_per_step {
                let mut attrs = BTreeMap::new();
                if !em.api_names.is_empty() {
                    let idx = (off as usize * em.events_per_step as usize + k as usize) % em.api_names.len();
                    attrs.insert("api_name".to_string(), em.api_names[idx].clone());
                }
                events.push(SecurityEvent {
                    step: t,
                    kind: em.kind,
                    source: pid.clone(),
                    signature: em.signatures[(k as usize) % em.signatures.len().max(1)],
                    attrs,
                    anomaly: noisy(rng, base),
                    truth_malicious: truth,
                    origin: EventOrigin::Scenario,
                });
                emitted = true;
            }
        }
        ScenarioSource::None => {}
    }

    if emitted && em.alert_per_step {
        let mut attrs = BTreeMap::new();
        if let Some(target) = &script.target {
            attrs.insert("target".to_string(), target.clone());
        }
        events.push(SecurityEvent {
            step: t,
            kind: EventKind::Alert,
            source: source_label(&script.source),
            signature: em.signatures[0],
            attrs,
            anomaly: noisy(rng, base),
            truth_malicious: truth,
            origin: EventOrigin::Scenario,
        });
    }
    emitted
}

fn source_label(source: &ScenarioSource) -> String {
    match source {
        ScenarioSource::Ip(ip) => ip.to_string(),
        ScenarioSource::IpPool(pool) => pool
            .first()
            .and_then(|ip| Cidr::new(*ip, 24).ok())
            .map(|c| c.to_string())
            .unwrap_or_else(|| "pool".to_string()),
        ScenarioSource::Principal(p) => p.clone(),
        ScenarioSource::None => "none".to_string(),
    }
}

/// Convenience used across tests and the env layer: an agent deny rule
/// covering `source` on every port.
pub fn agent_deny_rule(id: &str, source: Cidr) -> crate::rules::FirewallRule {
    crate::rules::FirewallRule {
        id: id.to_string(),
        direction: Direction::Ingress,
        source,
        ports: crate::rules::PortRange::all(),
        verb: crate::rules::Verb::Deny,
        origin: Actor::Agent,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::SecurityConfig;
    use std::net::Ipv4Addr;
    use crate::world::compliance::{evaluate_compliance, ComplianceId};
    use crate::world::scenario::*;
    use crate::world::trace::{parse_trace, TraceOptions};

    fn ip(s: &str) -> Ipv4Addr {
        s.parse().unwrap()
    }

    fn setup(seed: u64) -> (WorldState, SecurityConfig) {
        let topo = TopologyConfig::default();
        let world = world_init(&topo, seed).unwrap();
        (world, SecurityConfig::baseline(&topo))
    }

    fn run_until(world: &mut WorldState, config: &mut SecurityConfig, until: u64) -> Vec<StepOutput> {
        let mut outs = Vec::new();
        while world.step_count() < until {
            outs.push(world.step(config).unwrap());
        }
        outs
    }

    #[test]
    fn empty_world_steps_quietly() {
        let (mut world, mut config) = setup(1);
        let out = world.step(&mut config).unwrap();
        assert!(out.events.is_empty() && out.incidents.is_empty());
        assert_eq!(world.step_count(), 1);
        assert_eq!(config.version(), 1);
    }

    #[test]
    fn spawn_validation() {
        let (mut world, mut config) = setup(1);
        run_until(&mut world, &mut config, 10);

        let err = world
            .spawn_scenario(port_scan("s", 5, ip("203.0.113.5"), "web-1", false))
            .unwrap_err();
        assert!(matches!(err, WorldError::OnsetNotFuture { onset: 5, step: 10, .. }));

        let err = world
            .spawn_scenario(port_scan("s", 20, ip("203.0.113.5"), "web-9", false))
            .unwrap_err();
        assert!(matches!(err, WorldError::UnknownTarget { .. }));

        let err = world.spawn_scenario(cred_compromise("s", 20, "ghost")).unwrap_err();
        assert!(matches!(err, WorldError::UnknownPrincipal { .. }));

        world.spawn_scenario(port_scan("s", 20, ip("203.0.113.5"), "web-1", false)).unwrap();
        let err = world
            .spawn_scenario(port_scan("s", 30, ip("203.0.113.6"), "web-1", false))
            .unwrap_err();
        assert!(matches!(err, WorldError::DuplicateScenario(_)));
        assert_eq!(world.scenario_status("s").unwrap(), ScenarioStatus::Pending);
        assert!(world.scenario_status("ghost").is_err());
    }

    #[test]
    fn port_scan_emits_ramps_and_breaches() {
        let (mut world, mut config) = setup(7);
        world.spawn_scenario(port_scan("scan", 5, ip("203.0.113.5"), "web-1", false)).unwrap();

        let outs = run_until(&mut world, &mut config, 4);
        assert!(outs.iter().all(|o| o.events.is_empty()));
        assert_eq!(world.scenario_status("scan").unwrap(), ScenarioStatus::Pending);

        // Onset step: five scan flows, anomaly near 0.3.
        let out = world.step(&mut config).unwrap();
        assert_eq!(out.events.len(), 5);
        for e in &out.events {
            assert_eq!(e.kind, EventKind::NetFlow);
            assert_eq!(e.signature, Signature::Scan);
            assert_eq!(e.source, "203.0.113.5");
            assert_eq!(e.target(), Some("web-1"));
            assert!(e.truth_malicious);
            assert!((e.anomaly - 0.3).abs() <= ANOMALY_NOISE + 1e-12, "anomaly {}", e.anomaly);
        }
        assert_eq!(world.scenario("scan").unwrap().first_event_step, Some(5));
        assert_eq!(world.scenario_status("scan").unwrap(), ScenarioStatus::Active);

        // Escalation stage carries alerts and a hotter ramp.
        let outs = run_until(&mut world, &mut config, 17);
        assert!(outs.iter().all(|o| o.incidents.is_empty()));
        let out = world.step(&mut config).unwrap();
        assert_eq!(out.events.len(), 6);
        assert_eq!(out.events.iter().filter(|e| e.kind == EventKind::Alert).count(), 1);
        assert!(out.events.iter().all(|e| e.anomaly >= 0.8 - ANOMALY_NOISE - 1e-12));

        // Breach exactly at onset + 24 with no emissions that step.
        run_until(&mut world, &mut config, 28);
        assert_eq!(world.scenario_status("scan").unwrap(), ScenarioStatus::Active);
        let out = world.step(&mut config).unwrap();
        assert_eq!(world.step_count(), 29);
        assert!(out.events.is_empty());
        assert_eq!(
            out.incidents,
            vec![IncidentRecord {
                step: 29,
                scenario_id: "scan".into(),
                outcome: IncidentOutcome::Breached
            }]
        );
        assert_eq!(out.agent_neutralized, 0);
        assert!(world.instance("web-1").unwrap().compromised);
        assert_eq!(world.incident_log.len(), 1);

        // Concluded scenarios stay concluded and silent.
        let out = world.step(&mut config).unwrap();
        assert!(out.events.is_empty() && out.incidents.is_empty());
        assert_eq!(world.scenario("scan").unwrap().concluded_step, Some(29));
    }

    #[test]
    fn agent_deny_neutralizes_and_is_attributed() {
        let (mut world, mut config) = setup(7);
        world.spawn_scenario(port_scan("scan", 5, ip("203.0.113.5"), "web-1", false)).unwrap();
        run_until(&mut world, &mut config, 10);

        config
            .apply_action(
                ActionDescriptor::AddRule(agent_deny_rule("agent-1", "203.0.113.5/32".parse().unwrap())),
                Actor::Agent,
                10,
            )
            .unwrap();
        let out = world.step(&mut config).unwrap();
        assert_eq!(world.step_count(), 11);
        assert!(out.events.is_empty());
        assert_eq!(out.incidents[0].outcome, IncidentOutcome::Neutralized);
        assert_eq!(out.agent_neutralized, 1);
        let st = world.scenario("scan").unwrap();
        assert!(st.agent_attributed);
        assert_eq!(st.concluded_step, Some(11));
        assert_eq!(st.first_event_step, Some(5));
        assert!(!world.instance("web-1").unwrap().compromised);
    }

    #[test]
    fn isolation_neutralizes_targeted_attacks() {
        let (mut world, mut config) = setup(7);
        world.spawn_scenario(web_exploit("wx", 5, ip("203.0.113.8"), "web-2", false)).unwrap();
        run_until(&mut world, &mut config, 8);
        config
            .apply_action(
                ActionDescriptor::SetIsolation { instance: "web-2".into(), isolated: true },
                Actor::Agent,
                8,
            )
            .unwrap();
        let out = world.step(&mut config).unwrap();
        assert_eq!(out.incidents[0].outcome, IncidentOutcome::Neutralized);
        assert_eq!(out.agent_neutralized, 1);
        assert!(world.instance("web-2").unwrap().isolated);
    }

    #[test]
    fn baseline_blockable_attack_dies_at_onset_unattributed() {
        let (mut world, mut config) = setup(3);
        // Source inside the baseline threat-intel deny block.
        world.spawn_scenario(port_scan("scan", 5, ip("192.0.2.77"), "web-1", true)).unwrap();
        run_until(&mut world, &mut config, 4);
        let out = world.step(&mut config).unwrap();
        assert!(out.events.is_empty());
        assert_eq!(out.incidents[0].outcome, IncidentOutcome::Neutralized);
        assert_eq!(out.agent_neutralized, 0, "baseline deny is not the agent's work");
        let st = world.scenario("scan").unwrap();
        assert!(!st.agent_attributed);
        assert_eq!(st.first_event_step, None);
    }

    #[test]
    fn ddos_needs_three_quarters_of_the_pool_denied() {
        let pool = ddos_pool("203.0.113.0/24".parse().unwrap());
        let (mut world, mut config) = setup(9);
        world.spawn_scenario(ddos("flood", 5, pool.clone())).unwrap();
        run_until(&mut world, &mut config, 5);
        // Eight flows plus one alert per step while unmitigated.
        let out = world.step(&mut config).unwrap();
        assert_eq!(out.events.len(), 9);

        // Denying 5 of 8 sources suppresses their flows but is below the
        // 0.75 neutralization threshold.
        for (i, src) in pool.iter().take(5).enumerate() {
            config
                .apply_action(
                    ActionDescriptor::AddRule(agent_deny_rule(&format!("agent-{i}"), Cidr::host(*src))),
                    Actor::Agent,
                    6,
                )
                .unwrap();
        }
        let out = world.step(&mut config).unwrap();
        assert_eq!(out.events.len(), 4, "three live sources plus the alert");
        assert!(out.incidents.is_empty());

        // The sixth deny crosses 6/8 = 0.75.
        config
            .apply_action(
                ActionDescriptor::AddRule(agent_deny_rule("agent-5", Cidr::host(pool[5]))),
                Actor::Agent,
                7,
            )
            .unwrap();
        let out = world.step(&mut config).unwrap();
        assert_eq!(out.incidents[0].outcome, IncidentOutcome::Neutralized);
        assert_eq!(out.agent_neutralized, 1);
    }

    #[test]
    fn ddos_one_wide_deny_neutralizes() {
        let pool = ddos_pool("203.0.113.0/24".parse().unwrap());
        let (mut world, mut config) = setup(9);
        world.spawn_scenario(ddos("flood", 5, pool)).unwrap();
        run_until(&mut world, &mut config, 6);
        config
            .apply_action(
                ActionDescriptor::AddRule(agent_deny_rule("agent-wide", "203.0.113.0/24".parse().unwrap())),
                Actor::Agent,
                6,
            )
            .unwrap();
        let out = world.step(&mut config).unwrap();
        assert_eq!(out.incidents[0].outcome, IncidentOutcome::Neutralized);
    }

    #[test]
    fn unmitigated_ddos_breaches_web_tier() {
        let pool = ddos_pool("203.0.113.0/24".parse().unwrap());
        let (mut world, mut config) = setup(9);
        world.spawn_scenario(ddos("flood", 5, pool)).unwrap();
        run_until(&mut world, &mut config, 23);
        assert_eq!(world.scenario_status("flood").unwrap(), ScenarioStatus::Breached);
        assert_eq!(world.scenario("flood").unwrap().concluded_step, Some(23));
        assert!(world.instance("web-1").unwrap().compromised);
        assert!(world.instance("web-2").unwrap().compromised);
        assert!(!world.instance("db-1").unwrap().compromised);
    }

    #[test]
    fn monitoring_level_two_doubles_web_exploit_deadline() {
        let (mut world, mut config) = setup(4);
        world.spawn_scenario(web_exploit("wx", 5, ip("203.0.113.8"), "web-1", false)).unwrap();
        config
            .apply_action(
                ActionDescriptor::SetMonitoring { instance: "web-1".into(), level: 2 },
                Actor::Agent,
                0,
            )
            .unwrap();
        run_until(&mut world, &mut config, 25);
        assert_eq!(world.scenario_status("wx").unwrap(), ScenarioStatus::Active, "deadline doubled");
        run_until(&mut world, &mut config, 45);
        assert_eq!(world.scenario_status("wx").unwrap(), ScenarioStatus::Breached);
        assert_eq!(world.scenario("wx").unwrap().concluded_step, Some(45));
    }

    #[test]
    fn cred_compromise_disables_logging_then_restriction_silences() {
        let (mut world, mut config) = setup(11);
        world.spawn_scenario(cred_compromise("cred", 5, "ops-1")).unwrap();
        run_until(&mut world, &mut config, 5);
        assert!(world.principal("ops-1").unwrap().compromised);
        assert!(world.principal("ops-1").unwrap().anomaly_score > 0.3);

        // Offset 4: the StopLogging effect lands and violates C2.
        run_until(&mut world, &mut config, 8);
        assert!(config.flow_logging(Zone::Private));
        let out = world.step(&mut config).unwrap();
        assert_eq!(out.drift_changes, 1);
        assert!(!config.flow_logging(Zone::Private));
        assert!(evaluate_compliance(config.core()).contains(&ComplianceId::C2FlowLogging));
        let cc: Vec<_> = out.events.iter().filter(|e| e.kind == EventKind::ConfigChange).collect();
        assert_eq!(cc.len(), 1);
        assert_eq!(cc[0].source, "ops-1");
        assert_eq!(cc[0].attr("api_name"), Some("StopLogging"));

        // Restricting the principal neutralizes and silences it.
        config
            .apply_action(ActionDescriptor::RestrictPrincipal { principal: "ops-1".into() }, Actor::Agent, 9)
            .unwrap();
        let out = world.step(&mut config).unwrap();
        assert_eq!(out.incidents[0].outcome, IncidentOutcome::Neutralized);
        assert_eq!(out.agent_neutralized, 1);
        assert!(out.events.is_empty());
    }

    #[test]
    fn early_restriction_prevents_the_logging_effect() {
        let (mut world, mut config) = setup(11);
        world.spawn_scenario(cred_compromise("cred", 5, "ops-1")).unwrap();
        run_until(&mut world, &mut config, 6);
        config
            .apply_action(ActionDescriptor::RestrictPrincipal { principal: "ops-1".into() }, Actor::Agent, 6)
            .unwrap();
        run_until(&mut world, &mut config, 12);
        assert_eq!(world.scenario_status("cred").unwrap(), ScenarioStatus::Neutralized);
        assert!(config.flow_logging(Zone::Private), "restricted principal cannot disable logging");
    }

    #[test]
    fn benign_burst_expires_with_truthful_labels() {
        let (mut world, mut config) = setup(13);
        world.spawn_scenario(benign_admin_burst("burst", 5, "admin-1")).unwrap();
        let outs = run_until(&mut world, &mut config, 44);
        let events: Vec<_> = outs.iter().flat_map(|o| o.events.iter()).collect();
        assert!(!events.is_empty());
        assert!(events.iter().all(|e| !e.truth_malicious));
        assert!(events.iter().all(|e| e.signature == Signature::None));
        // Plateau keeps anomaly at 0.6 give or take noise, never past 0.7.
        let max = events.iter().map(|e| e.anomaly).fold(0.0, f64::max);
        assert!(max <= 0.6 + ANOMALY_NOISE + 1e-12, "max {max}");
        assert_eq!(world.scenario_status("burst").unwrap(), ScenarioStatus::Active);
        let out = world.step(&mut config).unwrap();
        assert_eq!(out.incidents[0].outcome, IncidentOutcome::Expired);
        assert_eq!(world.scenario_status("burst").unwrap(), ScenarioStatus::Expired);
        assert!(!world.principal("admin-1").unwrap().compromised);
    }

    #[test]
    fn config_drift_inserts_rule_and_waits_for_a_counter() {
        let (mut world, mut config) = setup(17);
        world.spawn_scenario(config_drift("drift", 5)).unwrap();
        run_until(&mut world, &mut config, 4);
        assert!(evaluate_compliance(config.core()).is_empty());

        let out = world.step(&mut config).unwrap();
        assert_eq!(out.drift_changes, 1);
        assert_eq!(out.events.len(), 1);
        assert_eq!(out.events[0].kind, EventKind::ConfigChange);
        assert!(out.events[0].truth_malicious);
        assert!(config.rule("drift-drift").is_some());
        assert!(evaluate_compliance(config.core()).contains(&ComplianceId::C1OpenSsh));
        assert_eq!(world.scenario("drift").unwrap().first_event_step, Some(5));

        // It lingers without breaching.
        run_until(&mut world, &mut config, 60);
        assert_eq!(world.scenario_status("drift").unwrap(), ScenarioStatus::Active);

        // A covering deny both fixes C1 and neutralizes the scenario.
        let drifted = config.rule("drift-drift").unwrap().clone();
        config
            .apply_action(
                ActionDescriptor::AddRule(crate::rules::FirewallRule {
                    id: "agent-counter".into(),
                    verb: crate::rules::Verb::Deny,
                    origin: Actor::Agent,
                    ..drifted
                }),
                Actor::Agent,
                60,
            )
            .unwrap();
        let out = world.step(&mut config).unwrap();
        assert_eq!(out.incidents[0].outcome, IncidentOutcome::Neutralized);
        assert_eq!(out.agent_neutralized, 1);
        assert!(evaluate_compliance(config.core()).is_empty());
    }

    #[test]
    fn replay_events_surface_at_their_steps() {
        let (mut world, mut config) = setup(19);
        let trace = "step,kind,source,attrs,anomaly\n3,alert,203.0.113.4,target=web-1,0.9\n7,netflow,203.0.113.4,dst_port=80,0.8\n";
        let events = parse_trace(trace, TraceOptions::default()).unwrap();
        world.inject_replay(events.clone()).unwrap();

        run_until(&mut world, &mut config, 2);
        let out = world.step(&mut config).unwrap();
        assert_eq!(out.events.len(), 1);
        assert_eq!(out.events[0].origin, EventOrigin::Replay);
        assert_eq!(out.events[0].step, 3);
        run_until(&mut world, &mut config, 6);
        let out = world.step(&mut config).unwrap();
        assert_eq!(out.events.len(), 1);
        assert_eq!(out.events[0].kind, EventKind::NetFlow);

        // Past-dated injection is refused.
        let err = world.inject_replay(events).unwrap_err();
        assert!(matches!(err, WorldError::ReplayNotFuture { event_step: 3, step: 7 }));
    }

    #[test]
    fn identical_seeds_and_actions_give_identical_streams() {
        let run = || {
            let (mut world, mut config) = setup(42);
            world.spawn_scenario(port_scan("scan", 3, ip("203.0.113.5"), "web-1", false)).unwrap();
            world.spawn_scenario(cred_compromise("cred", 8, "ops-1")).unwrap();
            world.spawn_scenario(config_drift("drift", 6)).unwrap();
            let mut all = Vec::new();
            for t in 1..=40u64 {
                if t == 12 {
                    config
                        .apply_action(
                            ActionDescriptor::AddRule(agent_deny_rule(
                                "agent-1",
                                "203.0.113.5/32".parse().unwrap(),
                            )),
                            Actor::Agent,
                            t,
                        )
                        .unwrap();
                }
                all.push(world.step(&mut config).unwrap());
            }
            let events: Vec<SecurityEvent> = all.iter().flat_map(|o| o.events.clone()).collect();
            (events, world.incident_log.clone(), config.canonical_text())
        };
        let (e1, i1, c1) = run();
        let (e2, i2, c2) = run();
        assert_eq!(e1, e2);
        assert_eq!(i1, i2);
        assert_eq!(c1, c2);
        // And a different seed shifts anomaly noise.
        let (mut world, mut config) = setup(43);
        world.spawn_scenario(port_scan("scan", 3, ip("203.0.113.5"), "web-1", false)).unwrap();
        run_until(&mut world, &mut config, 2);
        let out = world.step(&mut config).unwrap();
        assert_ne!(
            out.events.iter().map(|e| e.anomaly).collect::<Vec<_>>(),
            e1.iter().take(out.events.len()).map(|e| e.anomaly).collect::<Vec<_>>()
        );
    }

    #[test]
    fn idle_principal_anomaly_decays() {
        let (mut world, mut config) = setup(11);
        world.spawn_scenario(cred_compromise("cred", 2, "ops-1")).unwrap();
        run_until(&mut world, &mut config, 4);
        let hot = world.principal("ops-1").unwrap().anomaly_score;
        assert!(hot > 0.0);
        config
            .apply_action(ActionDescriptor::RestrictPrincipal { principal: "ops-1".into() }, Actor::Agent, 4)
            .unwrap();
        run_until(&mut world, &mut config, 6);
        let cooled = world.principal("ops-1").unwrap().anomaly_score;
        assert!(cooled < hot && (cooled - hot * ANOMALY_DECAY * ANOMALY_DECAY).abs() < 1e-12);
    }
}
