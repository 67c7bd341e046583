//! Draws the scenario load for an episode from a weighted mix. All
//! randomness comes from the caller's RNG, so a seeded run always faces the
//! same attacks.

use std::net::Ipv4Addr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rules::Cidr;
use crate::world::scenario::{
    benign_admin_burst, config_drift, cred_compromise, ddos, ddos_pool, port_scan, web_exploit,
    ScenarioKind, ScenarioScript,
};
use crate::world::topology::{threat_intel_net, Privilege, Tier, TopologyConfig};

/// Sources the baseline config cannot block come from these documentation
/// ranges.
pub const NEUTRAL_NETS: [&str; 2] = ["203.0.113.0/24", "198.51.100.0/24"];

/// Scenarios spawn with at least this much room before episode end, so the
/// deadline always falls inside the episode. Slow-burn variants need more.
pub const ONSET_MARGIN: u64 = 60;
pub const SLOW_ONSET_MARGIN: u64 = 250;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioMix {
    pub port_scan: f64,
    pub ddos: f64,
    pub web_exploit: f64,
    pub cred_compromise: f64,
    pub benign_burst: f64,
    pub config_drift: f64,
    /// Kinds guaranteed to appear once per episode, before weighted draws.
    pub always: Vec<ScenarioKind>,
    pub min_scenarios: u32,
    pub max_scenarios: u32,
    /// Chance that a network attack comes from the threat-intel range the
    /// baseline already denies.
    pub blockable_fraction: f64,
    pub onset_min: u64,
    pub onset_max: u64,
    /// Stretch attacks into slow-burn variants for latency measurement.
    pub slow: bool,
}

impl Default for ScenarioMix {
    fn default() -> Self {
        ScenarioMix::full()
    }
}

impl ScenarioMix {
    /// One attack per episode, early onset. The opening curriculum phase.
    pub fn single_attack() -> Self {
        ScenarioMix {
            port_scan: 1.0,
            ddos: 1.0,
            web_exploit: 1.0,
            cred_compromise: 1.0,
            benign_burst: 0.0,
            config_drift: 0.0,
            always: Vec::new(),
            min_scenarios: 1,
            max_scenarios: 1,
            blockable_fraction: 0.25,
            onset_min: 5,
            onset_max: 30,
            slow: false,
        }
    }

    /// Several overlapping attacks spread across the hour, with config
    /// drift in the rotation.
    pub fn multi_threat() -> Self {
        ScenarioMix {
            config_drift: 1.0,
            min_scenarios: 2,
            max_scenarios: 3,
            onset_min: 5,
            onset_max: 400,
            ..ScenarioMix::single_attack()
        }
    }

    /// The whole menagerie: attacks, benign bursts, and config drift, from
    /// quiet single-scenario hours up to four concurrent scenarios. Most
    /// attacks here hit paths the baseline rules already cover.
    pub fn full() -> Self {
        ScenarioMix {
            benign_burst: 1.5,
            config_drift: 1.0,
            min_scenarios: 1,
            max_scenarios: 4,
            blockable_fraction: 0.7,
            ..ScenarioMix::multi_threat()
        }
    }

    fn weight(&self, kind: ScenarioKind) -> f64 {
        match kind {
            ScenarioKind::PortScan => self.port_scan,
            ScenarioKind::Ddos => self.ddos,
            ScenarioKind::WebExploit => self.web_exploit,
            ScenarioKind::CredCompromise => self.cred_compromise,
            ScenarioKind::BenignAdminBurst => self.benign_burst,
            ScenarioKind::ConfigDrift => self.config_drift,
        }
    }
}

const KIND_ORDER: [ScenarioKind; 6] = [
    ScenarioKind::PortScan,
    ScenarioKind::Ddos,
    ScenarioKind::WebExploit,
    ScenarioKind::CredCompromise,
    ScenarioKind::BenignAdminBurst,
    ScenarioKind::ConfigDrift,
];

fn weighted_kind(mix: &ScenarioMix, rng: &mut impl Rng) -> ScenarioKind {
    let total: f64 = KIND_ORDER.iter().map(|k| mix.weight(*k).max(0.0)).sum();
    if total <= 0.0 {
        return ScenarioKind::PortScan;
    }
    let mut r = rng.gen_range(0.0..total);
    for kind in KIND_ORDER {
        let w = mix.weight(kind).max(0.0);
        if r < w {
            return kind;
        }
        r -= w;
    }
    ScenarioKind::ConfigDrift
}

fn host_in(net: Cidr, rng: &mut impl Rng) -> Ipv4Addr {
    let base = u32::from(net.base_addr());
    Ipv4Addr::from(base + rng.gen_range(1..=254u32))
}

fn neutral_net(rng: &mut impl Rng) -> Cidr {
    NEUTRAL_NETS[rng.gen_range(0..NEUTRAL_NETS.len())].parse().expect("static cidr")
}

fn pick<'a>(ids: &[&'a str], rng: &mut impl Rng) -> Option<&'a str> {
    if ids.is_empty() {
        None
    } else {
        Some(ids[rng.gen_range(0..ids.len())])
    }
}

/// Sample the scenario scripts for one episode. Ids are `<kind>-<index>`.
/// Benign bursts and credential compromises never share a principal inside
/// an episode, so restricting a compromised account is never ambiguous.
pub fn sample_episode(
    mix: &ScenarioMix,
    topo: &TopologyConfig,
    episode_len: u64,
    rng: &mut impl Rng,
) -> Vec<ScenarioScript> {
    let margin = if mix.slow { SLOW_ONSET_MARGIN } else { ONSET_MARGIN };
    let onset_cap = episode_len.saturating_sub(margin).max(1);
    let onset_hi = mix.onset_max.clamp(1, onset_cap);
    let onset_lo = mix.onset_min.clamp(1, onset_hi);

    let web: Vec<&str> = topo
        .instances
        .iter()
        .filter(|i| i.tier == Tier::Web)
        .map(|i| i.id.as_str())
        .collect();
    let fallback: Vec<&str> = topo.instances.iter().map(|i| i.id.as_str()).collect();
    let targets = if web.is_empty() { &fallback } else { &web };
    let admins: Vec<&str> = topo
        .principals
        .iter()
        .filter(|p| p.privilege == Privilege::Admin)
        .map(|p| p.id.as_str())
        .collect();
    let everyone: Vec<&str> = topo.principals.iter().map(|p| p.id.as_str()).collect();

    let count = rng.gen_range(mix.min_scenarios..=mix.max_scenarios.max(mix.min_scenarios)) as usize;
    let count = count.max(mix.always.len());

    let mut used_benign: Vec<String> = Vec::new();
    let mut used_cred: Vec<String> = Vec::new();
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let kind = mix.always.get(k).copied().unwrap_or_else(|| weighted_kind(mix, rng));
        let onset = rng.gen_range(onset_lo..=onset_hi);
        let id = format!("{kind}-{k}");
        let blockable = kind.network_attack() && rng.gen_bool(mix.blockable_fraction.clamp(0.0, 1.0));
        let attack_net = if blockable { threat_intel_net() } else { neutral_net(rng) };
        let script = match kind {
            ScenarioKind::PortScan => {
                let target = pick(targets, rng).expect("validated topology has instances");
                port_scan(&id, onset, host_in(attack_net, rng), target, blockable)
            }
            ScenarioKind::WebExploit => {
                let target = pick(targets, rng).expect("validated topology has instances");
                web_exploit(&id, onset, host_in(attack_net, rng), target, blockable)
            }
            ScenarioKind::Ddos => {
                let mut s = ddos(&id, onset, ddos_pool(attack_net));
                s.baseline_blockable = blockable;
                s
            }
            ScenarioKind::CredCompromise => {
                let free: Vec<&str> = everyone
                    .iter()
                    .copied()
                    .filter(|p| !used_benign.iter().any(|u| u == p))
                    .collect();
                let p = pick(&free, rng).or_else(|| pick(&everyone, rng)).expect("principals exist");
                used_cred.push(p.to_string());
                cred_compromise(&id, onset, p)
            }
            ScenarioKind::BenignAdminBurst => {
                let pool = if admins.is_empty() { &everyone } else { &admins };
                let free: Vec<&str> = pool
                    .iter()
                    .copied()
                    .filter(|p| !used_cred.iter().any(|u| u == p))
                    .collect();
                let wider: Vec<&str> = everyone
                    .iter()
                    .copied()
                    .filter(|p| !used_cred.iter().any(|u| u == p))
                    .collect();
                let p = pick(&free, rng)
                    .or_else(|| pick(&wider, rng))
                    .or_else(|| pick(pool, rng))
                    .expect("principals exist");
                used_benign.push(p.to_string());
                benign_admin_burst(&id, onset, p)
            }
            ScenarioKind::ConfigDrift => config_drift(&id, onset),
        };
        let script = if mix.slow { script.slowed() } else { script };
        out.push(script);
    }
    out
}
