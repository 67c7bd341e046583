//! Compliance rules evaluated against the live security config. All four
//! builtin rules are pure functions of the config core (which carries its
//! own topology mirror), so the agent can both see and fix violations.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::policy::ConfigCore;
use crate::rules::{Direction, FirewallRule, Verb};
use crate::world::topology::{internal_net, Tier, DB_PORT, SSH_PORT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ComplianceId {
    /// No world-open SSH: an ingress allow from 0.0.0.0/0 covering port 22
    /// with no equally wide deny countering it.
    C1OpenSsh,
    /// Flow logging enabled in every zone.
    C2FlowLogging,
    /// Database port reachable only from the internal network.
    C3DbExposure,
    /// Every web instance monitored at level 1 or higher.
    C4WebMonitoring,
}

impl ComplianceId {
    pub const ALL: [ComplianceId; 4] = [
        ComplianceId::C1OpenSsh,
        ComplianceId::C2FlowLogging,
        ComplianceId::C3DbExposure,
        ComplianceId::C4WebMonitoring,
    ];

    pub fn description(self) -> &'static str {
        match self {
            ComplianceId::C1OpenSsh => "SSH must not be open to the world",
            ComplianceId::C2FlowLogging => "flow logging must be enabled in every zone",
            ComplianceId::C3DbExposure => "database port must only accept internal sources",
            ComplianceId::C4WebMonitoring => "web instances must run monitoring level >= 1",
        }
    }
}

impl fmt::Display for ComplianceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComplianceId::C1OpenSsh => "C1",
            ComplianceId::C2FlowLogging => "C2",
            ComplianceId::C3DbExposure => "C3",
            ComplianceId::C4WebMonitoring => "C4",
        })
    }
}

/// A deny at least as wide as `rule` (same direction, covering source and
/// ports) renders it ineffective.
fn countered(core: &ConfigCore, rule: &FirewallRule) -> bool {
    core.rules
        .iter()
        .any(|deny| deny.verb == Verb::Deny && deny.covers_rule(rule))
}

fn violates(id: ComplianceId, core: &ConfigCore) -> bool {
    match id {
        ComplianceId::C1OpenSsh => core.rules.iter().any(|r| {
            r.verb == Verb::Allow
                && r.direction == Direction::Ingress
                && r.source.prefix_len() == 0
                && r.ports.contains(SSH_PORT)
                && !countered(core, r)
        }),
        ComplianceId::C2FlowLogging => core.flow_logging.values().any(|on| !*on),
        ComplianceId::C3DbExposure => {
            let has_db = core.instances.values().any(|i| i.tier == Tier::Db);
            has_db
                && core.rules.iter().any(|r| {
                    r.verb == Verb::Allow
                        && r.direction == Direction::Ingress
                        && r.ports.contains(DB_PORT)
                        && !internal_net().contains(&r.source)
                        && !countered(core, r)
                })
        }
        ComplianceId::C4WebMonitoring => core
            .instances
            .iter()
            .any(|(id, info)| info.tier == Tier::Web && core.effective_monitoring(id) < 1),
    }
}

/// The set of violated compliance rules. Pure: same config, same answer.
pub fn evaluate_compliance(core: &ConfigCore) -> BTreeSet<ComplianceId> {
    ComplianceId::ALL.iter().copied().filter(|id| violates(*id, core)).collect()
}
