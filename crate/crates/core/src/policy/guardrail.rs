//! Safety guardrails on agent-initiated config changes. Each guardrail is a
//! preservation property: if the pre-change config satisfies it, the
//! post-change config must too. Baseline and drift actors bypass them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::policy::ConfigCore;
use crate::rules::{Direction, Verb};
use crate::world::topology::{Privilege, Tier, HTTPS_PORT, HTTP_PORT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Guardrail {
    /// Keep at least one firewall rule, and keep an effective allow path to
    /// the web service ports.
    G1WebReachability,
    /// Keep flow logging enabled in at least one zone.
    G2LoggingAlive,
    /// Keep at least one unrestricted admin principal.
    G3AdminAccess,
    /// Keep at least one non-isolated instance per tier.
    G4TierAvailability,
}

impl fmt::Display for Guardrail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Guardrail::G1WebReachability => {
                "G1: change would leave no firewall rules or no effective allow path to web ports"
            }
            Guardrail::G2LoggingAlive => "G2: change would disable flow logging in every zone",
            Guardrail::G3AdminAccess => "G3: change would restrict the last unrestricted admin",
            Guardrail::G4TierAvailability => {
                "G4: change would isolate the last available instance of a tier"
            }
        })
    }
}

/// An allow rule is effective when no deny rule fully covers its match set.
/// This is the single-rule shadow approximation: combinations of partial
/// denies are not considered.
fn has_effective_web_allow(core: &ConfigCore) -> bool {
    core.rules.iter().any(|allow| {
        allow.verb == Verb::Allow
            && allow.direction == Direction::Ingress
            && (allow.ports.contains(HTTP_PORT) || allow.ports.contains(HTTPS_PORT))
            && !core
                .rules
                .iter()
                .any(|deny| deny.verb == Verb::Deny && deny.covers_rule(allow))
    })
}

fn logging_somewhere(core: &ConfigCore) -> bool {
    core.flow_logging.values().any(|on| *on)
}

fn unrestricted_admins(core: &ConfigCore) -> usize {
    core.principals
        .values()
        .filter(|p| p.privilege == Privilege::Admin && !p.restricted)
        .count()
}

fn tier_available(core: &ConfigCore, tier: Tier) -> bool {
    core.instances
        .iter()
        .any(|(id, info)| info.tier == tier && !core.isolated.contains(id))
}

/// Check every guardrail as a preservation property between the config
/// before and after a proposed change.
pub fn check_guardrails(before: &ConfigCore, after: &ConfigCore) -> Result<(), Guardrail> {
    if !before.rules.is_empty() && after.rules.is_empty() {
        return Err(Guardrail::G1WebReachability);
    }
    if has_effective_web_allow(before) && !has_effective_web_allow(after) {
        return Err(Guardrail::G1WebReachability);
    }
    if logging_somewhere(before) && !logging_somewhere(after) {
        return Err(Guardrail::G2LoggingAlive);
    }
    if unrestricted_admins(before) > 0 && unrestricted_admins(after) == 0 {
        return Err(Guardrail::G3AdminAccess);
    }
    for tier in [Tier::Web, Tier::Db] {
        if tier_available(before, tier) && !tier_available(after, tier) {
            return Err(Guardrail::G4TierAvailability);
        }
    }
    Ok(())
}
