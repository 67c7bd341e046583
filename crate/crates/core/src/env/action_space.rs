//! The flattened discrete action space: one no-op plus five action types,
//! each with four candidate slots. Slot tables are recomputed from the
//! event window and config after every step, with deterministic ranking, so
//! an action id always refers to the tables the observation was built from.

use std::collections::BTreeMap;
use std::fmt;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use crate::env::feature::{InstanceObs, WorldView};
use crate::policy::{ActionDescriptor, SecurityConfig};
use crate::rules::{Actor, Cidr, Direction, FirewallRule, PortRange, Verb};
use crate::world::event::{EventKind, SecurityEvent, Signature};
use crate::world::topology::{internal_net, Tier, Zone, DB_PORT, MAX_MONITORING_LEVEL, SSH_PORT};

pub const SLOTS_PER_TYPE: usize = 4;
pub const ACTION_COUNT: usize = 1 + 5 * SLOTS_PER_TYPE;

/// Suspicious sources sharing a /24 collapse into one block candidate once
/// this many distinct addresses are seen.
pub const AGGREGATE_SOURCES: usize = 3;

/// Principals enter the restrict slots above this anomaly score.
pub const RESTRICT_SCORE_FLOOR: f64 = 0.05;

/// Added to a principal's restrict-ranking score when the event window holds
/// an alert or signed event from that principal.
pub const RESTRICT_EVIDENCE_BONUS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActionId(pub usize);

impl ActionId {
    pub const NOOP: ActionId = ActionId(0);

    pub fn in_range(self) -> bool {
        self.0 < ACTION_COUNT
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match decode(*self) {
            None => f.write_str("no-op"),
            Some((t, slot)) => write!(f, "{t}[{slot}]"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionType {
    BlockTraffic,
    RestrictUser,
    OpenPort,
    IsolateInstance,
    IncreaseMonitoring,
}

impl ActionType {
    pub const ALL: [ActionType; 5] = [
        ActionType::BlockTraffic,
        ActionType::RestrictUser,
        ActionType::OpenPort,
        ActionType::IsolateInstance,
        ActionType::IncreaseMonitoring,
    ];

    pub fn index(self) -> usize {
        match self {
            ActionType::BlockTraffic => 0,
            ActionType::RestrictUser => 1,
            ActionType::OpenPort => 2,
            ActionType::IsolateInstance => 3,
            ActionType::IncreaseMonitoring => 4,
        }
    }
}

impl fmt::Display for ActionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ActionType::BlockTraffic => "block-traffic",
            ActionType::RestrictUser => "restrict-user",
            ActionType::OpenPort => "open-port",
            ActionType::IsolateInstance => "isolate-instance",
            ActionType::IncreaseMonitoring => "increase-monitoring",
        })
    }
}

pub fn encode(t: ActionType, slot: usize) -> ActionId {
    debug_assert!(slot < SLOTS_PER_TYPE);
    ActionId(1 + t.index() * SLOTS_PER_TYPE + slot)
}

/// `None` is the no-op. Callers must range-check the id first.
pub fn decode(a: ActionId) -> Option<(ActionType, usize)> {
    debug_assert!(a.in_range());
    if a.0 == 0 {
        return None;
    }
    let k = a.0 - 1;
    Some((ActionType::ALL[k / SLOTS_PER_TYPE], k % SLOTS_PER_TYPE))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockCandidate {
    /// An existing allow rule that violates compliance; blocking it inserts
    /// an exactly covering deny.
    NonCompliantRule { rule_id: String },
    /// A suspicious source block seen in the event window.
    Source { cidr: Cidr, anomaly: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MonitorCandidate {
    /// Re-enable flow logging in a zone.
    Zone(Zone),
    /// Raise an instance to this monitoring level.
    Instance { id: String, level: u8 },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SlotTables {
    pub block: Vec<BlockCandidate>,
    pub restrict: Vec<String>,
    pub open_port: Vec<String>,
    pub isolate: Vec<String>,
    pub monitor: Vec<MonitorCandidate>,
}

impl SlotTables {
    pub fn occupancy(&self, t: ActionType) -> usize {
        match t {
            ActionType::BlockTraffic => self.block.len(),
            ActionType::RestrictUser => self.restrict.len(),
            ActionType::OpenPort => self.open_port.len(),
            ActionType::IsolateInstance => self.isolate.len(),
            ActionType::IncreaseMonitoring => self.monitor.len(),
        }
    }
}

/// An allow rule that would count against C1 or C3.
fn non_compliant(rules: &[FirewallRule], r: &FirewallRule) -> bool {
    if r.verb != Verb::Allow || r.direction != Direction::Ingress {
        return false;
    }
    let countered = rules.iter().any(|d| d.verb == Verb::Deny && d.covers_rule(r));
    if countered {
        return false;
    }
    let open_ssh = r.source.prefix_len() == 0 && r.ports.contains(SSH_PORT);
    let exposed_db = r.ports.contains(DB_PORT) && !internal_net().contains(&r.source);
    open_ssh || exposed_db
}

/// Whether a source address is already fully denied on every port.
fn fully_denied(rules: &[FirewallRule], ip: Ipv4Addr) -> bool {
    rules.iter().any(|r| {
        r.verb == Verb::Deny
            && r.direction == Direction::Ingress
            && r.source.contains_addr(ip)
            && r.ports.covers(&PortRange::all())
    })
}

/// Build the candidate slot tables. Deterministic: ranked by severity with
/// stable id tiebreaks, truncated to the slot width.
pub fn candidate_ranking(window: &[&SecurityEvent], config: &SecurityConfig, view: &WorldView) -> SlotTables {
    let rules = config.rules();

    // Block: compliance offenders first, then window sources by anomaly.
    let mut block: Vec<BlockCandidate> = rules
        .iter()
        .filter(|r| non_compliant(rules, r))
        .map(|r| BlockCandidate::NonCompliantRule { rule_id: r.id.clone() })
        .collect();
    block.sort_by(|a, b| match (a, b) {
        (
            BlockCandidate::NonCompliantRule { rule_id: x },
            BlockCandidate::NonCompliantRule { rule_id: y },
        ) => x.cmp(y),
        _ => std::cmp::Ordering::Equal,
    });

    let mut by_ip: BTreeMap<Ipv4Addr, f64> = BTreeMap::new();
    for e in window.iter().filter(|e| e.kind == EventKind::NetFlow) {
        if let Ok(ip) = e.source.parse::<Ipv4Addr>() {
            if !fully_denied(rules, ip) {
                let slot = by_ip.entry(ip).or_insert(0.0);
                *slot = slot.max(e.anomaly);
            }
        }
    }
    let mut by_net: BTreeMap<Cidr, (Vec<Ipv4Addr>, f64)> = BTreeMap::new();
    for (ip, anomaly) in &by_ip {
        let net = Cidr::new(*ip, 24).expect("prefix 24 is valid");
        let entry = by_net.entry(net).or_insert_with(|| (Vec::new(), 0.0));
        entry.0.push(*ip);
        entry.1 = entry.1.max(*anomaly);
    }
    let mut sources: Vec<BlockCandidate> = Vec::new();
    for (net, (ips, net_anomaly)) in &by_net {
        if ips.len() >= AGGREGATE_SOURCES {
            sources.push(BlockCandidate::Source { cidr: *net, anomaly: *net_anomaly });
        } else {
            for ip in ips {
                sources.push(BlockCandidate::Source { cidr: Cidr::host(*ip), anomaly: by_ip[ip] });
            }
        }
    }
    sources.sort_by(|a, b| match (a, b) {
        (BlockCandidate::Source { cidr: ca, anomaly: aa }, BlockCandidate::Source { cidr: cb, anomaly: ab }) => {
            ab.total_cmp(aa).then_with(|| ca.cmp(cb))
        }
        _ => std::cmp::Ordering::Equal,
    });
    block.extend(sources);
    block.truncate(SLOTS_PER_TYPE);

    // Restrict: unrestricted principals by descending anomaly score, with a
    // flat bonus when the window holds signed or alert-level activity from
    // the principal. High-volume but unsigned activity (a busy admin) must
    // not outrank a young privilege-escalation trail.
    let mut restrict: Vec<(&str, f64)> = view
        .principals
        .iter()
        .filter(|p| !p.restricted && p.anomaly_score > RESTRICT_SCORE_FLOOR)
        .map(|p| {
            let signed = window.iter().any(|e| {
                e.source == p.id && (e.kind == EventKind::Alert || e.signature != Signature::None)
            });
            let bonus = if signed { RESTRICT_EVIDENCE_BONUS } else { 0.0 };
            (p.id.as_str(), p.anomaly_score + bonus)
        })
        .collect();
    restrict.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let restrict: Vec<String> = restrict.into_iter().take(SLOTS_PER_TYPE).map(|(id, _)| id.to_string()).collect();

    // Open-port: the agent's own deny rules, most recent first.
    let open_port: Vec<String> = rules
        .iter()
        .rev()
        .filter(|r| r.origin == Actor::Agent && r.verb == Verb::Deny)
        .take(SLOTS_PER_TYPE)
        .map(|r| r.id.clone())
        .collect();

    // Isolate: instances under fire in the window, by anomaly.
    let mut targeted: BTreeMap<&str, f64> = BTreeMap::new();
    for e in window.iter().filter(|e| e.kind == EventKind::NetFlow) {
        if let Some(target) = e.target() {
            let slot = targeted.entry(target).or_insert(0.0);
            *slot = slot.max(e.anomaly);
        }
    }
    let mut isolate: Vec<(&str, f64)> = view
        .instances
        .iter()
        .filter(|i| !i.isolated)
        .filter_map(|i| targeted.get(i.id.as_str()).map(|a| (i.id.as_str(), *a)))
        .collect();
    isolate.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let isolate: Vec<String> = isolate.into_iter().take(SLOTS_PER_TYPE).map(|(id, _)| id.to_string()).collect();

    // Monitor: unlogged zones, then under-monitored web instances, then
    // anything below the max level.
    let mut monitor: Vec<MonitorCandidate> = Vec::new();
    for zone in Zone::ALL {
        if !config.flow_logging(zone) {
            monitor.push(MonitorCandidate::Zone(zone));
        }
    }
    let mut dark_web: Vec<&InstanceObs> = view
        .instances
        .iter()
        .filter(|i| i.tier == Tier::Web && i.effective_monitoring < 1)
        .collect();
    dark_web.sort_by(|a, b| a.id.cmp(&b.id));
    for i in &dark_web {
        monitor.push(MonitorCandidate::Instance { id: i.id.clone(), level: 1 });
    }
    let mut raisable: Vec<&InstanceObs> = view
        .instances
        .iter()
        .filter(|i| i.effective_monitoring >= 1 && i.effective_monitoring < MAX_MONITORING_LEVEL)
        .collect();
    raisable.sort_by(|a, b| {
        a.effective_monitoring
            .cmp(&b.effective_monitoring)
            .then_with(|| a.id.cmp(&b.id))
    });
    for i in &raisable {
        monitor.push(MonitorCandidate::Instance { id: i.id.clone(), level: i.effective_monitoring + 1 });
    }
    monitor.truncate(SLOTS_PER_TYPE);

    SlotTables { block, restrict, open_port, isolate, monitor }
}

/// What an action id concretely does against the current tables.
#[derive(Debug, Clone, PartialEq)]
pub enum ResolvedAction {
    NoOp,
    /// The selected slot is empty; the env treats this as a penalized no-op.
    EmptySlot,
    Apply { descriptor: ActionDescriptor, target: DefensiveTarget },
}

/// The entity a defensive action is aimed at, for attribution and
/// false-positive accounting.
#[derive(Debug, Clone, PartialEq)]
pub enum DefensiveTarget {
    SourceBlock(Cidr),
    /// Countering a non-compliant rule is remediation, never disruptive.
    RuleCounter(String),
    Principal(String),
    Instance(String),
    /// Monitoring and logging changes disturb nobody.
    Support,
}

pub fn resolve(
    tables: &SlotTables,
    config: &SecurityConfig,
    action: ActionId,
    rule_seq: u64,
) -> ResolvedAction {
    let Some((t, slot)) = decode(action) else {
        return ResolvedAction::NoOp;
    };
    let deny_id = format!("agent-deny-{rule_seq}");
    match t {
        ActionType::BlockTraffic => match tables.block.get(slot) {
            None => ResolvedAction::EmptySlot,
            Some(BlockCandidate::Source { cidr, .. }) => ResolvedAction::Apply {
                descriptor: ActionDescriptor::AddRule(FirewallRule {
                    id: deny_id,
                    direction: Direction::Ingress,
                    source: *cidr,
                    ports: PortRange::all(),
                    verb: Verb::Deny,
                    origin: Actor::Agent,
                }),
                target: DefensiveTarget::SourceBlock(*cidr),
            },
            Some(BlockCandidate::NonCompliantRule { rule_id }) => match config.rule(rule_id) {
                None => ResolvedAction::EmptySlot,
                Some(r) => ResolvedAction::Apply {
                    descriptor: ActionDescriptor::AddRule(FirewallRule {
                        id: deny_id,
                        direction: r.direction,
                        source: r.source,
                        ports: r.ports,
                        verb: Verb::Deny,
                        origin: Actor::Agent,
                    }),
                    target: DefensiveTarget::RuleCounter(rule_id.clone()),
                },
            },
        },
        ActionType::RestrictUser => match tables.restrict.get(slot) {
            None => ResolvedAction::EmptySlot,
            Some(p) => ResolvedAction::Apply {
                descriptor: ActionDescriptor::RestrictPrincipal { principal: p.clone() },
                target: DefensiveTarget::Principal(p.clone()),
            },
        },
        ActionType::OpenPort => match tables.open_port.get(slot) {
            None => ResolvedAction::EmptySlot,
            Some(rule_id) => ResolvedAction::Apply {
                descriptor: ActionDescriptor::RemoveRule { rule_id: rule_id.clone() },
                target: DefensiveTarget::Support,
            },
        },
        ActionType::IsolateInstance => match tables.isolate.get(slot) {
            None => ResolvedAction::EmptySlot,
            Some(i) => ResolvedAction::Apply {
                descriptor: ActionDescriptor::SetIsolation { instance: i.clone(), isolated: true },
                target: DefensiveTarget::Instance(i.clone()),
            },
        },
        ActionType::IncreaseMonitoring => match tables.monitor.get(slot) {
            None => ResolvedAction::EmptySlot,
            Some(MonitorCandidate::Zone(zone)) => ResolvedAction::Apply {
                descriptor: ActionDescriptor::SetFlowLogging { zone: *zone, enabled: true },
                target: DefensiveTarget::Support,
            },
            Some(MonitorCandidate::Instance { id, level }) => ResolvedAction::Apply {
                descriptor: ActionDescriptor::SetMonitoring { instance: id.clone(), level: *level },
                target: DefensiveTarget::Support,
            },
        },
    }
}
