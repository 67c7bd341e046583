//! Concrete configuration mutations. Every change to a [`super::SecurityConfig`]
//! happens through one of these descriptors, so the change log can replay
//! history exactly.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::rules::FirewallRule;
use crate::world::topology::Zone;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionDescriptor {
    AddRule(FirewallRule),
    RemoveRule { rule_id: String },
    RestrictPrincipal { principal: String },
    SetIsolation { instance: String, isolated: bool },
    SetMonitoring { instance: String, level: u8 },
    SetFlowLogging { zone: Zone, enabled: bool },
    /// Restore the mutable config to its state at `target_version`,
    /// recorded as a fresh forward change.
    Rollback { target_version: u64 },
}

impl fmt::Display for ActionDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActionDescriptor::AddRule(r) => write!(f, "add-rule {r}"),
            ActionDescriptor::RemoveRule { rule_id } => write!(f, "remove-rule {rule_id}"),
            ActionDescriptor::RestrictPrincipal { principal } => {
                write!(f, "restrict-principal {principal}")
            }
            ActionDescriptor::SetIsolation { instance, isolated } => {
                write!(f, "set-isolation {instance} {isolated}")
            }
            ActionDescriptor::SetMonitoring { instance, level } => {
                write!(f, "set-monitoring {instance} {level}")
            }
            ActionDescriptor::SetFlowLogging { zone, enabled } => {
                write!(f, "set-flow-logging {zone} {enabled}")
            }
            ActionDescriptor::Rollback { target_version } => {
                write!(f, "rollback {target_version}")
            }
        }
    }
}
