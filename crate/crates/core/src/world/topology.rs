//! Deployment topology: instances, IAM principals, network zones, and the
//! baseline firewall. Validated once at world construction.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rules::{Actor, Cidr, Direction, FirewallRule, PortRange, Verb};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tier {
    Web,
    Db,
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::Web => "web",
            Tier::Db => "db",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Zone {
    Public,
    Private,
}

impl Zone {
    pub const ALL: [Zone; 2] = [Zone::Public, Zone::Private];
}

impl fmt::Display for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Zone::Public => "public",
            Zone::Private => "private",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Privilege {
    ReadOnly,
    PowerUser,
    Admin,
}

impl fmt::Display for Privilege {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Privilege::ReadOnly => "read-only",
            Privilege::PowerUser => "power-user",
            Privilege::Admin => "admin",
        })
    }
}

/// Highest monitoring level an instance can be raised to.
pub const MAX_MONITORING_LEVEL: u8 = 2;

/// Well-known service ports the compliance rules and baseline care about.
pub const HTTP_PORT: u16 = 80;
pub const HTTPS_PORT: u16 = 443;
pub const SSH_PORT: u16 = 22;
pub const DB_PORT: u16 = 3306;

/// The internal network block admin and database access must come from.
pub fn internal_net() -> Cidr {
    "10.0.0.0/8".parse().expect("static CIDR")
}

/// The threat-intel block the baseline firewall denies outright. Attacks
/// flagged `baseline_blockable` draw their sources from here.
pub fn threat_intel_net() -> Cidr {
    "192.0.2.0/24".parse().expect("static CIDR")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub id: String,
    pub tier: Tier,
    pub zone: Zone,
    /// Baseline monitoring level. The effective level is the max of this and
    /// whatever the security config sets.
    #[serde(default = "default_monitoring")]
    pub monitoring_level: u8,
}

fn default_monitoring() -> u8 {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrincipalSpec {
    pub id: String,
    pub privilege: Privilege,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSpec {
    pub id: String,
    pub direction: Direction,
    pub source: Cidr,
    pub ports: PortRange,
    pub verb: Verb,
}

impl RuleSpec {
    pub fn to_rule(&self) -> FirewallRule {
        FirewallRule {
            id: self.id.clone(),
            direction: self.direction,
            source: self.source,
            ports: self.ports,
            verb: self.verb,
            origin: Actor::Baseline,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopologyError {
    #[error("duplicate instance id `{0}`")]
    DuplicateInstance(String),
    #[error("duplicate principal id `{0}`")]
    DuplicatePrincipal(String),
    #[error("duplicate firewall rule id `{0}`")]
    DuplicateRule(String),
    #[error("instance `{0}` violates placement: db-tier instances must live in the private zone")]
    DbInPublicZone(String),
    #[error("instance `{0}` monitoring level {1} exceeds maximum {MAX_MONITORING_LEVEL}")]
    MonitoringOutOfRange(String, u8),
    #[error("topology has no instances")]
    NoInstances,
    #[error("topology has no principals")]
    NoPrincipals,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopologyConfig {
    pub instances: Vec<InstanceSpec>,
    pub principals: Vec<PrincipalSpec>,
    pub firewall: Vec<RuleSpec>,
}

impl Default for TopologyConfig {
    /// Two public web instances behind one private database, three
    /// principals (two admins so restricting one never trips the
    /// last-admin guardrail), and a baseline firewall that serves web
    /// traffic, confines SSH and MySQL to the internal net, and denies the
    /// threat-intel block.
    fn default() -> Self {
        let spec = |id: &str, direction, source: &str, ports: PortRange, verb| RuleSpec {
            id: id.to_string(),
            direction,
            source: source.parse().expect("static CIDR"),
            ports,
            verb,
        };
        TopologyConfig {
            instances: vec![
                InstanceSpec { id: "web-1".into(), tier: Tier::Web, zone: Zone::Public, monitoring_level: 1 },
                InstanceSpec { id: "web-2".into(), tier: Tier::Web, zone: Zone::Public, monitoring_level: 1 },
                InstanceSpec { id: "db-1".into(), tier: Tier::Db, zone: Zone::Private, monitoring_level: 1 },
            ],
            principals: vec![
                PrincipalSpec { id: "admin-1".into(), privilege: Privilege::Admin },
                PrincipalSpec { id: "admin-2".into(), privilege: Privilege::Admin },
                PrincipalSpec { id: "ops-1".into(), privilege: Privilege::PowerUser },
            ],
            firewall: vec![
                spec("fw-deny-intel", Direction::Ingress, "192.0.2.0/24", PortRange::all(), Verb::Deny),
                spec("fw-web-http", Direction::Ingress, "0.0.0.0/0", PortRange::single(HTTP_PORT), Verb::Allow),
                spec("fw-web-https", Direction::Ingress, "0.0.0.0/0", PortRange::single(HTTPS_PORT), Verb::Allow),
                spec("fw-admin-ssh", Direction::Ingress, "10.0.0.0/8", PortRange::single(SSH_PORT), Verb::Allow),
                spec("fw-db-mysql", Direction::Ingress, "10.0.0.0/8", PortRange::single(DB_PORT), Verb::Allow),
                spec("fw-egress", Direction::Egress, "0.0.0.0/0", PortRange::all(), Verb::Allow),
            ],
        }
    }
}

impl TopologyConfig {
    pub fn validate(&self) -> Result<(), TopologyError> {
        if self.instances.is_empty() {
            return Err(TopologyError::NoInstances);
        }
        if self.principals.is_empty() {
            return Err(TopologyError::NoPrincipals);
        }
        let mut seen = BTreeSet::new();
        for i in &self.instances {
            if !seen.insert(&i.id) {
                return Err(TopologyError::DuplicateInstance(i.id.clone()));
            }
            if i.tier == Tier::Db && i.zone == Zone::Public {
                return Err(TopologyError::DbInPublicZone(i.id.clone()));
            }
            if i.monitoring_level > MAX_MONITORING_LEVEL {
                return Err(TopologyError::MonitoringOutOfRange(i.id.clone(), i.monitoring_level));
            }
        }
        let mut seen = BTreeSet::new();
        for p in &self.principals {
            if !seen.insert(&p.id) {
                return Err(TopologyError::DuplicatePrincipal(p.id.clone()));
            }
        }
        let mut seen = BTreeSet::new();
        for r in &self.firewall {
            if !seen.insert(&r.id) {
                return Err(TopologyError::DuplicateRule(r.id.clone()));
            }
        }
        Ok(())
    }

    pub fn instance(&self, id: &str) -> Option<&InstanceSpec> {
        self.instances.iter().find(|i| i.id == id)
    }

    pub fn web_instances(&self) -> impl Iterator<Item = &InstanceSpec> {
        self.instances.iter().filter(|i| i.tier == Tier::Web)
    }

    pub fn admins(&self) -> impl Iterator<Item = &PrincipalSpec> {
        self.principals.iter().filter(|p| p.privilege == Privilege::Admin)
    }
}
