//! Scripted attack and benign scenarios. A script is pure data: staged
//! emission patterns, a breach deadline, a serializable neutralization
//! predicate, and optional scheduled config effects (drift). The world
//! advances scripts; nothing here touches an RNG or mutates state.

use std::fmt;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policy::ConfigCore;
use crate::rules::{Cidr, Direction, FirewallRule, PortRange, Verb};
use crate::world::event::{EventKind, Signature};
use crate::world::topology::{Zone, HTTPS_PORT, HTTP_PORT, SSH_PORT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    PortScan,
    Ddos,
    WebExploit,
    CredCompromise,
    BenignAdminBurst,
    ConfigDrift,
}

impl ScenarioKind {
    pub fn truth_malicious(self) -> bool {
        !matches!(self, ScenarioKind::BenignAdminBurst)
    }

    /// Network attacks can be pre-empted by the baseline threat-intel deny;
    /// credential abuse, admin bursts, and drift cannot.
    pub fn network_attack(self) -> bool {
        matches!(self, ScenarioKind::PortScan | ScenarioKind::Ddos | ScenarioKind::WebExploit)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScenarioKind::PortScan => "port-scan",
            ScenarioKind::Ddos => "ddos",
            ScenarioKind::WebExploit => "web-exploit",
            ScenarioKind::CredCompromise => "cred-compromise",
            ScenarioKind::BenignAdminBurst => "benign-admin-burst",
            ScenarioKind::ConfigDrift => "config-drift",
        })
    }
}

/// Where a scenario's activity appears to come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioSource {
    Ip(Ipv4Addr),
    IpPool(Vec<Ipv4Addr>),
    Principal(String),
    None,
}

impl ScenarioSource {
    pub fn ips(&self) -> Vec<Ipv4Addr> {
        match self {
            ScenarioSource::Ip(ip) => vec![*ip],
            ScenarioSource::IpPool(pool) => pool.clone(),
            _ => Vec::new(),
        }
    }

    pub fn principal(&self) -> Option<&str> {
        match self {
            ScenarioSource::Principal(p) => Some(p.as_str()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Emission {
    pub kind: EventKind,
    pub signatures: Vec<Signature>,
    /// Events per step, per source address (or per principal).
    pub events_per_step: u32,
    /// Linear anomaly ramp over the stage, before seeded noise.
    pub anomaly_from: f64,
    pub anomaly_to: f64,
    /// Destination port for network events. Port scans sweep upward from
    /// this base; service attacks stay on it.
    pub dst_port: Option<u16>,
    pub port_sweep: bool,
    pub api_names: Vec<String>,
    /// Emit one detector alert per step alongside the raw events.
    pub alert_per_step: bool,
}

/// A stage is active for offsets `[offset, until)` from scenario onset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub offset: u64,
    pub until: u64,
    pub emission: Emission,
}

/// Configuration mutation a scenario performs at a scheduled offset. These
/// are applied as drift-actor changes that bypass guardrails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConfigEffect {
    DisableFlowLogging(Zone),
    InsertRule(FirewallRule),
}

/// Serializable neutralization predicate, evaluated each step against the
/// live security config (and, for counterfactual attribution, against a
/// config with agent changes stripped).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NeutralizeCond {
    /// Every source address is covered by an ingress deny spanning the
    /// scenario's port footprint.
    SourceDenied { ports: PortRange },
    /// At least this fraction of the source pool is denied.
    SourcesDeniedFraction { ports: PortRange, fraction: f64 },
    TargetIsolated { instance: String },
    PrincipalRestricted { principal: String },
    /// The named rule is no longer effective: removed, or countered by a
    /// covering deny. Used by config drift.
    RuleNeutralized { rule_id: String },
    Any(Vec<NeutralizeCond>),
}

impl NeutralizeCond {
    pub fn eval(&self, core: &ConfigCore, source: &ScenarioSource) -> bool {
        match self {
            NeutralizeCond::SourceDenied { ports } => {
                let ips = source.ips();
                !ips.is_empty() && ips.iter().all(|ip| ip_denied(core, *ip, ports))
            }
            NeutralizeCond::SourcesDeniedFraction { ports, fraction } => {
                let ips = source.ips();
                if ips.is_empty() {
                    return false;
                }
                let denied = ips.iter().filter(|ip| ip_denied(core, **ip, ports)).count();
                (denied as f64) >= fraction * ips.len() as f64
            }
            NeutralizeCond::TargetIsolated { instance } => core.is_isolated(instance),
            NeutralizeCond::PrincipalRestricted { principal } => core.is_restricted(principal),
            // Absence means the rule has not been planted yet, so this only
            // fires once a deny at least as wide counters the planted rule.
            NeutralizeCond::RuleNeutralized { rule_id } => match core.rule(rule_id) {
                None => false,
                Some(rule) => core.rules.iter().any(|r| {
                    r.verb == Verb::Deny && r.id != rule.id && r.covers_rule(rule)
                }),
            },
            NeutralizeCond::Any(conds) => conds.iter().any(|c| c.eval(core, source)),
        }
    }
}

/// Whether an ingress deny covers this address across the whole port range.
fn ip_denied(core: &ConfigCore, ip: Ipv4Addr, ports: &PortRange) -> bool {
    core.rules.iter().any(|r| {
        r.verb == Verb::Deny
            && r.direction == Direction::Ingress
            && r.source.contains_addr(ip)
            && r.ports.covers(ports)
    })
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScriptError {
    #[error("scenario `{0}`: stage offsets must be increasing and non-empty ranges")]
    BadStages(String),
    #[error("scenario `{0}`: breach offset {1} precedes last stage end {2}")]
    BreachBeforeStages(String, u64, u64),
    #[error("scenario `{0}`: benign scripts must not emit truth-malicious events")]
    BenignTruthMismatch(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioScript {
    pub id: String,
    pub kind: ScenarioKind,
    /// World step at which the scenario activates.
    pub onset: u64,
    pub stages: Vec<Stage>,
    pub neutralize: NeutralizeCond,
    /// Offset from onset at which the scenario concludes if not neutralized.
    pub breach_offset: u64,
    /// Whether the deadline concludes as `Expired` rather than `Breached`
    /// (benign bursts, and drift which lingers instead of breaching).
    pub expires: bool,
    /// Monitoring level 2 on the target doubles the breach deadline
    /// (stealthy web exploits take longer to land under deep inspection).
    pub monitoring_doubles_deadline: bool,
    pub baseline_blockable: bool,
    pub source: ScenarioSource,
    /// Target instance for network attacks, when a single one exists.
    pub target: Option<String>,
    /// Scheduled `(offset, effect)` config mutations.
    pub config_effects: Vec<(u64, ConfigEffect)>,
}

impl ScenarioScript {
    pub fn validate(&self) -> Result<(), ScriptError> {
        let mut prev_end = 0;
        for (i, s) in self.stages.iter().enumerate() {
            if s.until <= s.offset || (i > 0 && s.offset < prev_end) {
                return Err(ScriptError::BadStages(self.id.clone()));
            }
            prev_end = s.until;
        }
        if self.breach_offset < prev_end {
            return Err(ScriptError::BreachBeforeStages(self.id.clone(), self.breach_offset, prev_end));
        }
        if !self.kind.truth_malicious() && !self.expires {
            return Err(ScriptError::BenignTruthMismatch(self.id.clone()));
        }
        Ok(())
    }

    pub fn truth_malicious(&self) -> bool {
        self.kind.truth_malicious()
    }

    /// The breach/expiry step given the current config (monitoring can
    /// stretch it for stealthy exploits).
    pub fn deadline(&self, core: &ConfigCore) -> u64 {
        let mut offset = self.breach_offset;
        if self.monitoring_doubles_deadline {
            if let Some(target) = &self.target {
                if core.effective_monitoring(target) >= 2 {
                    offset = offset.saturating_mul(2);
                }
            }
        }
        self.onset.saturating_add(offset)
    }

    /// Stage active at `offset` steps past onset, if any.
    pub fn stage_at(&self, offset: u64) -> Option<&Stage> {
        self.stages.iter().find(|s| s.offset <= offset && offset < s.until)
    }

    /// Stretch the script into a slow-burn variant: one long stage with a
    /// high anomaly floor and a far-off deadline. Used by evaluation suites
    /// that measure response latency, where delayed responders need room to
    /// act before the deadline.
    pub fn slowed(mut self) -> Self {
        const SLOW_DEADLINE: u64 = 240;
        if !matches!(
            self.kind,
            ScenarioKind::PortScan | ScenarioKind::Ddos | ScenarioKind::WebExploit | ScenarioKind::CredCompromise
        ) {
            return self;
        }
        self.breach_offset = SLOW_DEADLINE;
        for stage in &mut self.stages {
            stage.emission.anomaly_from = stage.emission.anomaly_from.max(0.78);
            stage.emission.anomaly_to = stage.emission.anomaly_to.max(0.9);
        }
        if let Some(last) = self.stages.last_mut() {
            last.until = SLOW_DEADLINE;
        }
        self
    }
}

/// Port scan: five probe flows per step sweeping ports, ramping anomaly
/// 0.3 to 0.8, escalating at onset+12 (0.8 to 0.95 with alerts), breaching
/// at onset+24 unless the source is denied or the target isolated.
pub fn port_scan(id: &str, onset: u64, attacker: Ipv4Addr, target: &str, blockable: bool) -> ScenarioScript {
    let flow = |from: f64, to: f64, alert: bool| Emission {
        kind: EventKind::NetFlow,
        signatures: vec![Signature::Scan],
        events_per_step: 5,
        anomaly_from: from,
        anomaly_to: to,
        dst_port: Some(20),
        port_sweep: true,
        api_names: Vec::new(),
        alert_per_step: alert,
    };
    ScenarioScript {
        id: id.to_string(),
        kind: ScenarioKind::PortScan,
        onset,
        stages: vec![
            Stage { offset: 0, until: 12, emission: flow(0.3, 0.8, false) },
            Stage { offset: 12, until: 24, emission: flow(0.8, 0.95, true) },
        ],
        neutralize: NeutralizeCond::Any(vec![
            NeutralizeCond::SourceDenied { ports: PortRange::all() },
            NeutralizeCond::TargetIsolated { instance: target.to_string() },
        ]),
        breach_offset: 24,
        expires: false,
        monitoring_doubles_deadline: false,
        baseline_blockable: blockable,
        source: ScenarioSource::Ip(attacker),
        target: Some(target.to_string()),
        config_effects: Vec::new(),
    }
}

/// DDoS: eight sources from one /24 flooding the web tier, breaching at
/// onset+18 unless at least three quarters of the pool is denied (a single
/// deny covering the /24 neutralizes it in one action).
pub fn ddos(id: &str, onset: u64, pool: Vec<Ipv4Addr>) -> ScenarioScript {
    ScenarioScript {
        id: id.to_string(),
        kind: ScenarioKind::Ddos,
        onset,
        stages: vec![Stage {
            offset: 0,
            until: 18,
            emission: Emission {
                kind: EventKind::NetFlow,
                signatures: vec![Signature::Flood],
                events_per_step: 1,
                anomaly_from: 0.5,
                anomaly_to: 0.9,
                dst_port: Some(HTTP_PORT),
                port_sweep: false,
                api_names: Vec::new(),
                alert_per_step: true,
            },
        }],
        neutralize: NeutralizeCond::SourcesDeniedFraction {
            ports: PortRange::single(HTTP_PORT),
            fraction: 0.75,
        },
        breach_offset: 18,
        expires: false,
        monitoring_doubles_deadline: false,
        baseline_blockable: false,
        source: ScenarioSource::IpPool(pool),
        target: None,
        config_effects: Vec::new(),
    }
}

/// Build the standard eight-host DDoS pool inside `net` (a /24).
pub fn ddos_pool(net: Cidr) -> Vec<Ipv4Addr> {
    let base = u32::from(net.base_addr());
    (1..=8).map(|k| Ipv4Addr::from(base + k * 9)).collect()
}

/// Web exploit: paired SQL-injection and XSS probes against one web
/// instance, breaching at onset+20 (doubled if the target runs monitoring
/// level 2) unless the source is denied or the target isolated.
pub fn web_exploit(id: &str, onset: u64, attacker: Ipv4Addr, target: &str, blockable: bool) -> ScenarioScript {
    ScenarioScript {
        id: id.to_string(),
        kind: ScenarioKind::WebExploit,
        onset,
        stages: vec![Stage {
            offset: 0,
            until: 20,
            emission: Emission {
                kind: EventKind::NetFlow,
                signatures: vec![Signature::Sqli, Signature::Xss],
                events_per_step: 2,
                anomaly_from: 0.4,
                anomaly_to: 0.9,
                dst_port: Some(HTTPS_PORT),
                port_sweep: false,
                api_names: Vec::new(),
                alert_per_step: true,
            },
        }],
        neutralize: NeutralizeCond::Any(vec![
            NeutralizeCond::SourceDenied { ports: PortRange::single(HTTPS_PORT) },
            NeutralizeCond::TargetIsolated { instance: target.to_string() },
        ]),
        breach_offset: 20,
        expires: false,
        monitoring_doubles_deadline: true,
        baseline_blockable: blockable,
        source: ScenarioSource::Ip(attacker),
        target: Some(target.to_string()),
        config_effects: Vec::new(),
    }
}

/// Credential compromise: a principal starts issuing privilege-escalation
/// API calls and disables private-zone flow logging four steps in. Breaches
/// at onset+20 unless the principal is restricted.
pub fn cred_compromise(id: &str, onset: u64, principal: &str) -> ScenarioScript {
    ScenarioScript {
        id: id.to_string(),
        kind: ScenarioKind::CredCompromise,
        onset,
        stages: vec![Stage {
            offset: 0,
            until: 20,
            emission: Emission {
                kind: EventKind::ApiCall,
                signatures: vec![Signature::Privesc],
                events_per_step: 2,
                anomaly_from: 0.4,
                anomaly_to: 0.9,
                dst_port: None,
                port_sweep: false,
                api_names: vec![
                    "AttachRolePolicy".into(),
                    "CreateAccessKey".into(),
                    "PutUserPolicy".into(),
                ],
                alert_per_step: true,
            },
        }],
        neutralize: NeutralizeCond::PrincipalRestricted { principal: principal.to_string() },
        breach_offset: 20,
        expires: false,
        monitoring_doubles_deadline: false,
        baseline_blockable: false,
        source: ScenarioSource::Principal(principal.to_string()),
        target: None,
        config_effects: vec![(4, ConfigEffect::DisableFlowLogging(Zone::Private))],
    }
}

/// Benign admin burst: forty steps of legitimate but unusual admin API
/// activity, anomaly plateauing at 0.6. Expires on its own; restricting the
/// principal ends it early but counts as a false positive downstream.
pub fn benign_admin_burst(id: &str, onset: u64, principal: &str) -> ScenarioScript {
    let calls = |from: f64, to: f64| Emission {
        kind: EventKind::ApiCall,
        signatures: vec![Signature::None],
        events_per_step: 3,
        anomaly_from: from,
        anomaly_to: to,
        dst_port: None,
        port_sweep: false,
        api_names: vec!["ListBuckets".into(), "DescribeInstances".into(), "GetObject".into()],
        alert_per_step: false,
    };
    ScenarioScript {
        id: id.to_string(),
        kind: ScenarioKind::BenignAdminBurst,
        onset,
        stages: vec![
            Stage { offset: 0, until: 8, emission: calls(0.2, 0.6) },
            Stage { offset: 8, until: 40, emission: calls(0.6, 0.6) },
        ],
        neutralize: NeutralizeCond::PrincipalRestricted { principal: principal.to_string() },
        breach_offset: 40,
        expires: true,
        monitoring_doubles_deadline: false,
        baseline_blockable: false,
        source: ScenarioSource::Principal(principal.to_string()),
        target: None,
        config_effects: Vec::new(),
    }
}

/// Config drift: silently inserts a world-open SSH allow rule at onset. The
/// scenario stays active (a standing compliance violation) until a covering
/// deny lands or the rule is removed; it never breaches on its own.
pub fn config_drift(id: &str, onset: u64) -> ScenarioScript {
    let rule_id = format!("drift-{id}");
    let rule = FirewallRule {
        id: rule_id.clone(),
        direction: Direction::Ingress,
        source: Cidr::any(),
        ports: PortRange::single(SSH_PORT),
        verb: Verb::Allow,
        origin: crate::rules::Actor::Drift,
    };
    ScenarioScript {
        id: id.to_string(),
        kind: ScenarioKind::ConfigDrift,
        onset,
        stages: Vec::new(),
        neutralize: NeutralizeCond::RuleNeutralized { rule_id },
        breach_offset: u64::MAX,
        expires: true,
        monitoring_doubles_deadline: false,
        baseline_blockable: false,
        source: ScenarioSource::None,
        target: None,
        config_effects: vec![(0, ConfigEffect::InsertRule(rule))],
    }
}
