//! Observation construction. The agent sees a fixed-width vector of
//! normalized posture, event-window, and context features, built from a
//! world view with every ground-truth field stripped.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::env::action_space::{ActionType, SlotTables};
use crate::policy::SecurityConfig;
use crate::rules::{Direction, PortRange, Verb};
use crate::world::compliance::ComplianceId;
use crate::world::event::{EventKind, SecurityEvent, Signature};
use crate::world::topology::{Privilege, Tier, Zone, HTTPS_PORT, HTTP_PORT, MAX_MONITORING_LEVEL};
use crate::world::WorldState;

pub const FEATURE_DIM: usize = 32;

/// Index map for the feature layout. Everything is scaled into [0, 1].
pub mod idx {
    /// Firewall rule count / 32.
    pub const RULE_COUNT: usize = 0;
    /// Fraction of rules that are agent-added denies.
    pub const AGENT_DENY_FRACTION: usize = 1;
    /// Effective world-open ingress allow rules / 8.
    pub const WIDE_OPEN_ALLOWS: usize = 2;
    /// Alert events in the window / 20.
    pub const ALERT_COUNT: usize = 3;
    /// Max anomaly score over the window.
    pub const MAX_ANOMALY: usize = 4;
    /// Signature presence flags.
    pub const SIG_SCAN: usize = 5;
    pub const SIG_FLOOD: usize = 6;
    pub const SIG_WEB: usize = 7;
    pub const SIG_PRIVESC: usize = 8;
    /// Principals with anomaly score >= 0.5, / 4.
    pub const HOT_PRINCIPALS: usize = 9;
    /// Violated compliance rules / 4, then per-rule flags.
    pub const VIOLATION_COUNT: usize = 10;
    pub const C1_FLAG: usize = 11;
    pub const C2_FLAG: usize = 12;
    pub const C3_FLAG: usize = 13;
    pub const C4_FLAG: usize = 14;
    /// Isolated instance fraction.
    pub const ISOLATED_FRACTION: usize = 15;
    /// Mean effective monitoring level / max level.
    pub const MEAN_MONITORING: usize = 16;
    /// Monitoring units above baseline / 8.
    pub const MONITORING_OVERHEAD: usize = 17;
    /// Window max anomaly crossed 0.7.
    pub const HIGH_ANOMALY_FLAG: usize = 18;
    /// One-hot of the previous action: no-op, then the five action types.
    /// All zero on the first step of an episode.
    pub const LAST_ACTION: usize = 19;
    /// Steps since the last config change (any actor) / episode length.
    pub const STEPS_SINCE_CHANGE: usize = 25;
    /// Occupied candidate slots per action type / 4.
    pub const SLOT_OCCUPANCY: usize = 26;
    /// Episode progress.
    pub const EPISODE_PROGRESS: usize = 31;
}

/// Threshold above which the window's max anomaly raises the alarm flag.
pub const HIGH_ANOMALY_THRESHOLD: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateVector(pub [f64; FEATURE_DIM]);

impl StateVector {
    pub fn zeros() -> Self {
        StateVector([0.0; FEATURE_DIM])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn in_unit_range(&self) -> bool {
        self.0.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v))
    }
}

/// What the agent did last step, for the one-hot context feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LastAction {
    NoOp,
    Typed(ActionType),
}

/// Truth-stripped snapshot of world entities: no compromise flags, no
/// scenario knowledge, only what dashboards would legitimately show.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldView {
    pub instances: Vec<InstanceObs>,
    pub principals: Vec<PrincipalObs>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceObs {
    pub id: String,
    pub tier: Tier,
    pub zone: Zone,
    pub isolated: bool,
    pub effective_monitoring: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalObs {
    pub id: String,
    pub privilege: Privilege,
    pub restricted: bool,
    pub anomaly_score: f64,
}

impl WorldView {
    pub fn observe(world: &WorldState, config: &SecurityConfig) -> WorldView {
        WorldView {
            instances: world
                .instances
                .iter()
                .map(|i| InstanceObs {
                    id: i.id.clone(),
                    tier: i.tier,
                    zone: i.zone,
                    isolated: config.is_isolated(&i.id),
                    effective_monitoring: config.effective_monitoring(&i.id),
                })
                .collect(),
            principals: world
                .principals
                .iter()
                .map(|p| PrincipalObs {
                    id: p.id.clone(),
                    privilege: p.privilege,
                    restricted: config.is_restricted(&p.id),
                    anomaly_score: p.anomaly_score,
                })
                .collect(),
        }
    }
}

pub struct FeatureContext<'a> {
    pub config: &'a SecurityConfig,
    pub view: &'a WorldView,
    pub violations: &'a BTreeSet<ComplianceId>,
    pub slots: &'a SlotTables,
    pub last_action: Option<LastAction>,
    pub steps_since_change: u64,
    pub episode_step: u64,
    pub episode_len: u64,
}

fn frac(n: usize, cap: usize) -> f64 {
    ((n as f64) / (cap as f64)).min(1.0)
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Build the observation. Reads event kinds, signatures, sources, and
/// anomaly scores, never the truth labels.
pub fn extract_features(window: &[&SecurityEvent], ctx: &FeatureContext) -> StateVector {
    let mut f = [0.0f64; FEATURE_DIM];
    let rules = ctx.config.rules();

    f[idx::RULE_COUNT] = frac(rules.len(), 32);
    let agent_denies = rules
        .iter()
        .filter(|r| r.origin == crate::rules::Actor::Agent && r.verb == Verb::Deny)
        .count();
    f[idx::AGENT_DENY_FRACTION] = if rules.is_empty() { 0.0 } else { agent_denies as f64 / rules.len() as f64 };
    // World-open allows outside the expected single-port web surface.
    let wide_open = rules
        .iter()
        .filter(|r| {
            r.verb == Verb::Allow
                && r.direction == Direction::Ingress
                && r.source.prefix_len() == 0
                && !(r.ports == PortRange::single(HTTP_PORT) || r.ports == PortRange::single(HTTPS_PORT))
                && !rules.iter().any(|d| d.verb == Verb::Deny && d.covers_rule(r))
        })
        .count();
    f[idx::WIDE_OPEN_ALLOWS] = frac(wide_open, 8);

    f[idx::ALERT_COUNT] = frac(window.iter().filter(|e| e.kind == EventKind::Alert).count(), 20);
    let max_anomaly = window.iter().map(|e| e.anomaly).fold(0.0f64, f64::max);
    f[idx::MAX_ANOMALY] = max_anomaly.clamp(0.0, 1.0);
    let sig = |s: Signature| window.iter().any(|e| e.signature == s);
    f[idx::SIG_SCAN] = flag(sig(Signature::Scan));
    f[idx::SIG_FLOOD] = flag(sig(Signature::Flood));
    f[idx::SIG_WEB] = flag(sig(Signature::Sqli) || sig(Signature::Xss));
    f[idx::SIG_PRIVESC] = flag(sig(Signature::Privesc));

    let hot = ctx.view.principals.iter().filter(|p| p.anomaly_score >= 0.5).count();
    f[idx::HOT_PRINCIPALS] = frac(hot, 4);

    f[idx::VIOLATION_COUNT] = frac(ctx.violations.len(), 4);
    f[idx::C1_FLAG] = flag(ctx.violations.contains(&ComplianceId::C1OpenSsh));
    f[idx::C2_FLAG] = flag(ctx.violations.contains(&ComplianceId::C2FlowLogging));
    f[idx::C3_FLAG] = flag(ctx.violations.contains(&ComplianceId::C3DbExposure));
    f[idx::C4_FLAG] = flag(ctx.violations.contains(&ComplianceId::C4WebMonitoring));

    let total = ctx.view.instances.len().max(1);
    let isolated = ctx.view.instances.iter().filter(|i| i.isolated).count();
    f[idx::ISOLATED_FRACTION] = isolated as f64 / total as f64;
    let mon_sum: u32 = ctx.view.instances.iter().map(|i| u32::from(i.effective_monitoring)).sum();
    f[idx::MEAN_MONITORING] = (mon_sum as f64 / total as f64) / f64::from(MAX_MONITORING_LEVEL);
    f[idx::MONITORING_OVERHEAD] = frac(ctx.config.core().monitoring_overhead_units() as usize, 8);
    f[idx::HIGH_ANOMALY_FLAG] = flag(max_anomaly >= HIGH_ANOMALY_THRESHOLD);

    match ctx.last_action {
        Some(LastAction::NoOp) => f[idx::LAST_ACTION] = 1.0,
        Some(LastAction::Typed(t)) => f[idx::LAST_ACTION + 1 + t.index()] = 1.0,
        None => {}
    }

    let len = ctx.episode_len.max(1);
    f[idx::STEPS_SINCE_CHANGE] = (ctx.steps_since_change.min(len) as f64) / len as f64;
    for (k, t) in ActionType::ALL.iter().enumerate() {
        f[idx::SLOT_OCCUPANCY + k] = frac(ctx.slots.occupancy(*t), crate::env::action_space::SLOTS_PER_TYPE);
    }
    f[idx::EPISODE_PROGRESS] = (ctx.episode_step.min(len) as f64) / len as f64;

    StateVector(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::SecurityConfig;
    use crate::world::topology::TopologyConfig;
    use crate::world::world_init;

    fn fixture() -> (WorldState, SecurityConfig) {
        let topo = TopologyConfig::default();
        let world = world_init(&topo, 5).unwrap();
        let config = SecurityConfig::baseline(&topo);
        (world, config)
    }

    fn ctx_features(window: &[&SecurityEvent]) -> StateVector {
        let (world, config) = fixture();
        let view = WorldView::observe(&world, &config);
        let violations = BTreeSet::new();
        let slots = SlotTables::default();
        let ctx = FeatureContext {
            config: &config,
            view: &view,
            violations: &violations,
            slots: &slots,
            last_action: None,
            steps_since_change: 3,
            episode_step: 10,
            episode_len: 720,
        };
        extract_features(window, &ctx)
    }

    #[test]
    fn quiet_baseline_features() {
        let f = ctx_features(&[]);
        assert!(f.in_unit_range());
        assert_eq!(f.0[idx::RULE_COUNT], 6.0 / 32.0);
        assert_eq!(f.0[idx::AGENT_DENY_FRACTION], 0.0);
        assert_eq!(f.0[idx::WIDE_OPEN_ALLOWS], 0.0, "port 80/443 allows are not world-open SSH-style holes"
        );
        assert_eq!(f.0[idx::MAX_ANOMALY], 0.0);
        assert_eq!(f.0[idx::HIGH_ANOMALY_FLAG], 0.0);
        assert_eq!(f.0[idx::VIOLATION_COUNT], 0.0);
        assert_eq!(f.0[idx::MEAN_MONITORING], 0.5);
        assert_eq!(f.0[idx::EPISODE_PROGRESS], 10.0 / 720.0);
        // No last action yet: whole one-hot is zero.
        assert!(f.0[idx::LAST_ACTION..idx::LAST_ACTION + 6].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn window_signatures_and_anomaly_register() {
        use crate::world::event::{EventOrigin, SecurityEvent};
        let ev = |sig, anomaly, kind| SecurityEvent {
            step: 1,
            kind,
            source: "203.0.113.5".into(),
            signature: sig,
            attrs: Default::default(),
            anomaly,
            truth_malicious: false,
            origin: EventOrigin::Scenario,
        };
        let events = [
            ev(Signature::Scan, 0.4, EventKind::NetFlow),
            ev(Signature::Xss, 0.85, EventKind::NetFlow),
            ev(Signature::Scan, 0.6, EventKind::Alert),
        ];
        let refs: Vec<&SecurityEvent> = events.iter().collect();
        let f = ctx_features(&refs);
        assert_eq!(f.0[idx::SIG_SCAN], 1.0);
        assert_eq!(f.0[idx::SIG_WEB], 1.0);
        assert_eq!(f.0[idx::SIG_FLOOD], 0.0);
        assert_eq!(f.0[idx::SIG_PRIVESC], 0.0);
        assert_eq!(f.0[idx::MAX_ANOMALY], 0.85);
        assert_eq!(f.0[idx::HIGH_ANOMALY_FLAG], 1.0);
        assert_eq!(f.0[idx::ALERT_COUNT], 1.0 / 20.0);
        assert!(f.in_unit_range());
    }

    // Ground truth must be invisible: flipping every truth label in the
    // window leaves the observation bit-identical.
    #[test]
    fn truth_labels_do_not_leak_into_features() {
        use crate::world::event::{EventOrigin, SecurityEvent};
        let mut events = vec![
            SecurityEvent {
                step: 1,
                kind: EventKind::NetFlow,
                source: "203.0.113.5".into(),
                signature: Signature::Flood,
                attrs: Default::default(),
                anomaly: 0.9,
                truth_malicious: true,
                origin: EventOrigin::Scenario,
            },
            SecurityEvent {
                step: 1,
                kind: EventKind::ApiCall,
                source: "ops-1".into(),
                signature: Signature::None,
                attrs: Default::default(),
                anomaly: 0.3,
                truth_malicious: false,
                origin: EventOrigin::Scenario,
            },
        ];
        let refs: Vec<&SecurityEvent> = events.iter().collect();
        let clean = ctx_features(&refs);
        for e in &mut events {
            e.truth_malicious = !e.truth_malicious;
        }
        let refs: Vec<&SecurityEvent> = events.iter().collect();
        let poisoned = ctx_features(&refs);
        assert_eq!(clean.0, poisoned.0);
    }
}
