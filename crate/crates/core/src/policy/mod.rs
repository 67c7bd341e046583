//! The versioned security configuration: firewall rules, principal
//! restrictions, isolation, monitoring, and flow logging, with an
//! append-only change log that supports exact replay and rollback.

mod action;
mod guardrail;

pub use action::ActionDescriptor;
pub use guardrail::{check_guardrails, Guardrail};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rules::{Actor, FirewallRule, Verb};
use crate::world::topology::{Privilege, Tier, TopologyConfig, Zone, MAX_MONITORING_LEVEL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceInfo {
    pub tier: Tier,
    pub zone: Zone,
    pub baseline_monitoring: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrincipalPolicy {
    pub privilege: Privilege,
    pub restricted: bool,
    /// Who restricted the principal; used to attribute neutralizations to
    /// the agent or not.
    pub restricted_by: Option<Actor>,
}

/// The mutable part of the configuration, plus a read-only mirror of the
/// topology so guardrails and compliance can be evaluated from the config
/// alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigCore {
    pub rules: Vec<FirewallRule>,
    pub principals: BTreeMap<String, PrincipalPolicy>,
    /// Configured monitoring level per instance, always populated and
    /// already clamped to at least the topology baseline.
    pub monitoring: BTreeMap<String, u8>,
    pub flow_logging: BTreeMap<Zone, bool>,
    pub isolated: BTreeSet<String>,
    pub instances: BTreeMap<String, InstanceInfo>,
}

impl ConfigCore {
    pub fn rule(&self, id: &str) -> Option<&FirewallRule> {
        self.rules.iter().find(|r| r.id == id)
    }

    pub fn is_isolated(&self, instance: &str) -> bool {
        self.isolated.contains(instance)
    }

    pub fn is_restricted(&self, principal: &str) -> bool {
        self.principals.get(principal).is_some_and(|p| p.restricted)
    }

    pub fn effective_monitoring(&self, instance: &str) -> u8 {
        let baseline = self
            .instances
            .get(instance)
            .map(|i| i.baseline_monitoring)
            .unwrap_or(0);
        self.monitoring.get(instance).copied().unwrap_or(0).max(baseline)
    }

    /// Monitoring effort above the topology baseline, summed over
    /// instances. This is what the resource-cost reward term charges for.
    pub fn monitoring_overhead_units(&self) -> u32 {
        self.instances
            .iter()
            .map(|(id, info)| {
                u32::from(self.effective_monitoring(id).saturating_sub(info.baseline_monitoring))
            })
            .sum()
    }

    fn canonical_lines(&self) -> String {
        let mut out = String::new();
        let mut rules: Vec<&FirewallRule> = self.rules.iter().collect();
        rules.sort_by(|a, b| a.id.cmp(&b.id));
        for r in rules {
            out.push_str(&format!(
                "rule {} {} {} {} {} {}\n",
                r.id, r.direction, r.source, r.ports, r.verb, r.origin
            ));
        }
        for (id, p) in &self.principals {
            out.push_str(&format!(
                "principal {id} {} {}\n",
                p.privilege,
                if p.restricted { "restricted" } else { "unrestricted" }
            ));
        }
        for (id, level) in &self.monitoring {
            out.push_str(&format!("monitoring {id} {level}\n"));
        }
        for (zone, on) in &self.flow_logging {
            out.push_str(&format!("flowlog {zone} {}\n", if *on { "on" } else { "off" }));
        }
        for id in &self.isolated {
            out.push_str(&format!("isolation {id}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyChange {
    pub step: u64,
    pub actor: Actor,
    pub action: ActionDescriptor,
    pub pre_version: u64,
    pub post_version: u64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("firewall rule id `{0}` already exists")]
    DuplicateRule(String),
    #[error("firewall rule `{0}` not found")]
    UnknownRule(String),
    #[error("principal `{0}` not found")]
    UnknownPrincipal(String),
    #[error("instance `{0}` not found")]
    UnknownInstance(String),
    #[error("monitoring level {0} exceeds maximum {MAX_MONITORING_LEVEL}")]
    MonitoringOutOfRange(u8),
    #[error("version {requested} outside history [{initial}, {current}]")]
    UnknownVersion { requested: u64, initial: u64, current: u64 },
    #[error("guardrail rejected change: {0}")]
    GuardrailViolation(Guardrail),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecurityConfig {
    core: ConfigCore,
    origin: ConfigCore,
    version: u64,
    initial_version: u64,
    change_log: Vec<PolicyChange>,
    guardrails_enabled: bool,
}

impl SecurityConfig {
    /// Build the baseline configuration for a topology: its firewall as-is,
    /// no restrictions, no isolation, baseline monitoring, flow logging on
    /// in every zone.
    pub fn baseline(topology: &TopologyConfig) -> Self {
        let core = ConfigCore {
            rules: topology.firewall.iter().map(|r| r.to_rule()).collect(),
            principals: topology
                .principals
                .iter()
                .map(|p| {
                    (
                        p.id.clone(),
                        PrincipalPolicy {
                            privilege: p.privilege,
                            restricted: false,
                            restricted_by: None,
                        },
                    )
                })
                .collect(),
            monitoring: topology
                .instances
                .iter()
                .map(|i| (i.id.clone(), i.monitoring_level))
                .collect(),
            flow_logging: Zone::ALL.iter().map(|z| (*z, true)).collect(),
            isolated: BTreeSet::new(),
            instances: topology
                .instances
                .iter()
                .map(|i| {
                    (
                        i.id.clone(),
                        InstanceInfo {
                            tier: i.tier,
                            zone: i.zone,
                            baseline_monitoring: i.monitoring_level,
                        },
                    )
                })
                .collect(),
        };
        SecurityConfig {
            origin: core.clone(),
            core,
            version: 1,
            initial_version: 1,
            change_log: Vec::new(),
            guardrails_enabled: true,
        }
    }

    pub fn set_guardrails_enabled(&mut self, enabled: bool) {
        self.guardrails_enabled = enabled;
    }

    pub fn guardrails_enabled(&self) -> bool {
        self.guardrails_enabled
    }

    pub fn core(&self) -> &ConfigCore {
        &self.core
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn initial_version(&self) -> u64 {
        self.initial_version
    }

    pub fn change_log(&self) -> &[PolicyChange] {
        &self.change_log
    }

    pub fn rules(&self) -> &[FirewallRule] {
        &self.core.rules
    }

    pub fn rule(&self, id: &str) -> Option<&FirewallRule> {
        self.core.rule(id)
    }

    pub fn is_isolated(&self, instance: &str) -> bool {
        self.core.is_isolated(instance)
    }

    pub fn is_restricted(&self, principal: &str) -> bool {
        self.core.is_restricted(principal)
    }

    pub fn effective_monitoring(&self, instance: &str) -> u8 {
        self.core.effective_monitoring(instance)
    }

    pub fn flow_logging(&self, zone: Zone) -> bool {
        self.core.flow_logging.get(&zone).copied().unwrap_or(false)
    }

    /// Apply one change. Guardrails are enforced for the agent only, and a
    /// rejected change leaves the config untouched.
    pub fn apply_action(
        &mut self,
        action: ActionDescriptor,
        actor: Actor,
        step: u64,
    ) -> Result<&PolicyChange, PolicyError> {
        let after = match &action {
            ActionDescriptor::Rollback { target_version } => self.core_at_version(*target_version)?,
            other => {
                let mut core = self.core.clone();
                apply_plain(&mut core, other, actor)?;
                core
            }
        };
        if actor == Actor::Agent && self.guardrails_enabled {
            check_guardrails(&self.core, &after).map_err(PolicyError::GuardrailViolation)?;
        }
        let change = PolicyChange {
            step,
            actor,
            action,
            pre_version: self.version,
            post_version: self.version + 1,
        };
        self.core = after;
        self.version += 1;
        self.change_log.push(change);
        Ok(self.change_log.last().expect("just pushed"))
    }

    /// Reconstruct the mutable config as it stood at `version` by replaying
    /// the change log from the origin snapshot. Rollback entries replay by
    /// recursing on the already-replayed prefix.
    pub fn core_at_version(&self, version: u64) -> Result<ConfigCore, PolicyError> {
        if version < self.initial_version || version > self.version {
            return Err(PolicyError::UnknownVersion {
                requested: version,
                initial: self.initial_version,
                current: self.version,
            });
        }
        let mut core = self.origin.clone();
        for change in &self.change_log {
            if change.post_version > version {
                break;
            }
            match &change.action {
                ActionDescriptor::Rollback { target_version } => {
                    core = self.core_at_version(*target_version)?;
                }
                other => apply_plain(&mut core, other, change.actor)?,
            }
        }
        Ok(core)
    }

    /// The config with every agent-made change stripped: agent rules gone,
    /// agent restrictions lifted, isolation cleared (only the agent
    /// isolates). Neutralization predicates that still hold against this
    /// were not the agent's doing.
    pub fn counterfactual_without_agent(&self) -> ConfigCore {
        let mut core = self.core.clone();
        core.rules.retain(|r| r.origin != Actor::Agent);
        for p in core.principals.values_mut() {
            if p.restricted_by == Some(Actor::Agent) {
                p.restricted = false;
                p.restricted_by = None;
            }
        }
        core.isolated.clear();
        core
    }

    /// Byte-stable canonical rendering. Two configs with equal mutable
    /// state render identically apart from the version header.
    pub fn canonical_text(&self) -> String {
        format!("version {}\n{}", self.version, self.core.canonical_lines())
    }

    pub fn check_consistency(&self) -> Vec<Conflict> {
        check_consistency(&self.core.rules)
    }
}

fn apply_plain(core: &mut ConfigCore, action: &ActionDescriptor, actor: Actor) -> Result<(), PolicyError> {
    match action {
        ActionDescriptor::AddRule(rule) => {
            if core.rule(&rule.id).is_some() {
                return Err(PolicyError::DuplicateRule(rule.id.clone()));
            }
            let mut rule = rule.clone();
            rule.origin = actor;
            core.rules.push(rule);
        }
        ActionDescriptor::RemoveRule { rule_id } => {
            if core.rule(rule_id).is_none() {
                return Err(PolicyError::UnknownRule(rule_id.clone()));
            }
            core.rules.retain(|r| &r.id != rule_id);
        }
        ActionDescriptor::RestrictPrincipal { principal } => {
            let p = core
                .principals
                .get_mut(principal)
                .ok_or_else(|| PolicyError::UnknownPrincipal(principal.clone()))?;
            if !p.restricted {
                p.restricted = true;
                p.restricted_by = Some(actor);
            }
        }
        ActionDescriptor::SetIsolation { instance, isolated } => {
            if !core.instances.contains_key(instance) {
                return Err(PolicyError::UnknownInstance(instance.clone()));
            }
            if *isolated {
                core.isolated.insert(instance.clone());
            } else {
                core.isolated.remove(instance);
            }
        }
        ActionDescriptor::SetMonitoring { instance, level } => {
            let info = core
                .instances
                .get(instance)
                .ok_or_else(|| PolicyError::UnknownInstance(instance.clone()))?;
            if *level > MAX_MONITORING_LEVEL {
                return Err(PolicyError::MonitoringOutOfRange(*level));
            }
            let clamped = (*level).max(info.baseline_monitoring);
            core.monitoring.insert(instance.clone(), clamped);
        }
        ActionDescriptor::SetFlowLogging { zone, enabled } => {
            core.flow_logging.insert(*zone, *enabled);
        }
        ActionDescriptor::Rollback { .. } => {
            unreachable!("rollback is materialized by the caller");
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Conflict {
    /// Allow and deny rules with identical match tuples.
    Exact { allow: String, deny: String },
    /// A rule whose whole match set is covered by an earlier deny.
    Shadowed { rule: String, by: String },
}

/// Exact allow/deny conflicts and earlier-deny shadowing. Exact conflicts
/// are reported once per pair regardless of rule order; an identical
/// allow/deny pair is classified as exact only, never also as a shadow.
pub fn check_consistency(rules: &[FirewallRule]) -> Vec<Conflict> {
    let mut exact = Vec::new();
    let mut shadows = Vec::new();
    for i in 0..rules.len() {
        for j in (i + 1)..rules.len() {
            let (a, b) = (&rules[i], &rules[j]);
            if a.match_tuple() == b.match_tuple() && a.verb != b.verb {
                let (allow, deny) = if a.verb == Verb::Allow { (a, b) } else { (b, a) };
                exact.push(Conflict::Exact { allow: allow.id.clone(), deny: deny.id.clone() });
            }
        }
    }
    for j in 0..rules.len() {
        let covered_by = rules[..j].iter().find(|earlier| {
            earlier.verb == Verb::Deny
                && earlier.covers_rule(&rules[j])
                && earlier.match_tuple() != rules[j].match_tuple()
        });
        if let Some(deny) = covered_by {
            shadows.push(Conflict::Shadowed { rule: rules[j].id.clone(), by: deny.id.clone() });
        }
    }
    exact.sort();
    shadows.sort();
    exact.extend(shadows);
    exact
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiffEntry {
    RuleAdded(FirewallRule),
    RuleRemoved(FirewallRule),
    RuleReplaced { id: String, from: Box<FirewallRule>, to: Box<FirewallRule> },
    PrincipalChanged { id: String, from: PrincipalPolicy, to: PrincipalPolicy },
    MonitoringChanged { instance: String, from: u8, to: u8 },
    FlowLoggingChanged { zone: Zone, from: bool, to: bool },
    IsolationChanged { instance: String, from: bool, to: bool },
}

impl DiffEntry {
    pub fn invert(self) -> DiffEntry {
        match self {
            DiffEntry::RuleAdded(r) => DiffEntry::RuleRemoved(r),
            DiffEntry::RuleRemoved(r) => DiffEntry::RuleAdded(r),
            DiffEntry::RuleReplaced { id, from, to } => {
                DiffEntry::RuleReplaced { id, from: to, to: from }
            }
            DiffEntry::PrincipalChanged { id, from, to } => {
                DiffEntry::PrincipalChanged { id, from: to, to: from }
            }
            DiffEntry::MonitoringChanged { instance, from, to } => {
                DiffEntry::MonitoringChanged { instance, from: to, to: from }
            }
            DiffEntry::FlowLoggingChanged { zone, from, to } => {
                DiffEntry::FlowLoggingChanged { zone, from: to, to: from }
            }
            DiffEntry::IsolationChanged { instance, from, to } => {
                DiffEntry::IsolationChanged { instance, from: to, to: from }
            }
        }
    }

    fn sort_key(&self) -> (u8, String) {
        match self {
            DiffEntry::RuleAdded(r) => (0, r.id.clone()),
            DiffEntry::RuleRemoved(r) => (1, r.id.clone()),
            DiffEntry::RuleReplaced { id, .. } => (2, id.clone()),
            DiffEntry::PrincipalChanged { id, .. } => (3, id.clone()),
            DiffEntry::MonitoringChanged { instance, .. } => (4, instance.clone()),
            DiffEntry::FlowLoggingChanged { zone, .. } => (5, zone.to_string()),
            DiffEntry::IsolationChanged { instance, .. } => (6, instance.clone()),
        }
    }
}

/// Structural difference between two config cores, in canonical order.
/// Empty iff the mutable state is identical; inverting every entry yields
/// `config_diff(b, a)` up to ordering.
pub fn config_diff(a: &ConfigCore, b: &ConfigCore) -> Vec<DiffEntry> {
    let mut out = Vec::new();
    for rb in &b.rules {
        match a.rule(&rb.id) {
            None => out.push(DiffEntry::RuleAdded(rb.clone())),
            Some(ra) if ra != rb => out.push(DiffEntry::RuleReplaced {
                id: rb.id.clone(),
                from: Box::new(ra.clone()),
                to: Box::new(rb.clone()),
            }),
            _ => {}
        }
    }
    for ra in &a.rules {
        if b.rule(&ra.id).is_none() {
            out.push(DiffEntry::RuleRemoved(ra.clone()));
        }
    }
    for (id, pa) in &a.principals {
        if let Some(pb) = b.principals.get(id) {
            if pa != pb {
                out.push(DiffEntry::PrincipalChanged {
                    id: id.clone(),
                    from: pa.clone(),
                    to: pb.clone(),
                });
            }
        }
    }
    for (id, la) in &a.monitoring {
        let lb = b.monitoring.get(id).copied().unwrap_or(*la);
        if lb != *la {
            out.push(DiffEntry::MonitoringChanged { instance: id.clone(), from: *la, to: lb });
        }
    }
    for (zone, fa) in &a.flow_logging {
        let fb = b.flow_logging.get(zone).copied().unwrap_or(*fa);
        if fb != *fa {
            out.push(DiffEntry::FlowLoggingChanged { zone: *zone, from: *fa, to: fb });
        }
    }
    for id in a.instances.keys() {
        let ia = a.isolated.contains(id);
        let ib = b.isolated.contains(id);
        if ia != ib {
            out.push(DiffEntry::IsolationChanged { instance: id.clone(), from: ia, to: ib });
        }
    }
    out.sort_by_key(|e| e.sort_key());
    out
}
