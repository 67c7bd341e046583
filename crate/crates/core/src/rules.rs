//! Firewall rule primitives shared by the world simulation and the policy
//! layer: IPv4 CIDR blocks, port ranges, and the rule record itself.

use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CidrParseError {
    #[error("empty CIDR string")]
    Empty,
    #[error("invalid IPv4 address `{0}`")]
    BadAddress(String),
    #[error("invalid prefix length `{0}` (expected 0-32)")]
    BadPrefix(String),
}

/// An IPv4 CIDR block. The base address is stored masked, so `10.1.2.3/8`
/// and `10.0.0.0/8` compare equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cidr {
    base: u32,
    prefix: u8,
}

impl Cidr {
    pub fn new(addr: Ipv4Addr, prefix: u8) -> Result<Self, CidrParseError> {
        if prefix > 32 {
            return Err(CidrParseError::BadPrefix(prefix.to_string()));
        }
        let raw = u32::from(addr);
        Ok(Cidr {
            base: raw & Self::mask(prefix),
            prefix,
        })
    }

    /// A single host, `addr/32`.
    pub fn host(addr: Ipv4Addr) -> Self {
        Cidr {
            base: u32::from(addr),
            prefix: 32,
        }
    }

    /// The whole IPv4 space, `0.0.0.0/0`.
    pub fn any() -> Self {
        Cidr { base: 0, prefix: 0 }
    }

    fn mask(prefix: u8) -> u32 {
        if prefix == 0 {
            0
        } else {
            u32::MAX << (32 - u32::from(prefix))
        }
    }

    pub fn prefix_len(&self) -> u8 {
        self.prefix
    }

    pub fn base_addr(&self) -> Ipv4Addr {
        Ipv4Addr::from(self.base)
    }

    pub fn contains_addr(&self, addr: Ipv4Addr) -> bool {
        (u32::from(addr) & Self::mask(self.prefix)) == self.base
    }

    /// Whether every address of `other` falls inside `self`.
    pub fn contains(&self, other: &Cidr) -> bool {
        self.prefix <= other.prefix && (other.base & Self::mask(self.prefix)) == self.base
    }

    pub fn overlaps(&self, other: &Cidr) -> bool {
        self.contains(other) || other.contains(self)
    }
}

impl FromStr for Cidr {
    type Err = CidrParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(CidrParseError::Empty);
        }
        let (addr_part, prefix_part) = match s.split_once('/') {
            Some((a, p)) => (a, Some(p)),
            None => (s, None),
        };
        let addr = Ipv4Addr::from_str(addr_part)
            .map_err(|_| CidrParseError::BadAddress(addr_part.to_string()))?;
        let prefix = match prefix_part {
            None => 32,
            Some(p) => p
                .parse::<u8>()
                .ok()
                .filter(|p| *p <= 32)
                .ok_or_else(|| CidrParseError::BadPrefix(p.to_string()))?,
        };
        Cidr::new(addr, prefix)
    }
}

impl fmt::Display for Cidr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.base_addr(), self.prefix)
    }
}

impl Serialize for Cidr {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Cidr {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(D::Error::custom)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PortRangeError {
    #[error("invalid port range `{0}`")]
    Malformed(String),
    #[error("port range start {0} exceeds end {1}")]
    Inverted(u16, u16),
}

/// An inclusive TCP/UDP port range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortRange {
    lo: u16,
    hi: u16,
}

impl PortRange {
    pub fn new(lo: u16, hi: u16) -> Result<Self, PortRangeError> {
        if lo > hi {
            return Err(PortRangeError::Inverted(lo, hi));
        }
        Ok(PortRange { lo, hi })
    }

    pub fn single(port: u16) -> Self {
        PortRange { lo: port, hi: port }
    }

    pub fn all() -> Self {
        PortRange { lo: 0, hi: u16::MAX }
    }

    pub fn lo(&self) -> u16 {
        self.lo
    }

    pub fn hi(&self) -> u16 {
        self.hi
    }

    pub fn contains(&self, port: u16) -> bool {
        self.lo <= port && port <= self.hi
    }

    pub fn covers(&self, other: &PortRange) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn overlaps(&self, other: &PortRange) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

impl FromStr for PortRange {
    type Err = PortRangeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let parse_port =
            |p: &str| p.trim().parse::<u16>().map_err(|_| PortRangeError::Malformed(s.to_string()));
        match s.split_once('-') {
            Some((a, b)) => PortRange::new(parse_port(a)?, parse_port(b)?),
            None => Ok(PortRange::single(parse_port(s)?)),
        }
    }
}

impl fmt::Display for PortRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.lo, self.hi)
    }
}

impl Serialize for PortRange {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PortRange {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Ingress,
    Egress,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Ingress => "ingress",
            Direction::Egress => "egress",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verb {
    Allow,
    Deny,
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verb::Allow => "allow",
            Verb::Deny => "deny",
        })
    }
}

/// Who put a rule (or any other config change) in place. Guardrails apply
/// only to the agent; scenario-driven drift writes bypass them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Actor {
    Baseline,
    Agent,
    Drift,
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Actor::Baseline => "baseline",
            Actor::Agent => "agent",
            Actor::Drift => "drift",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FirewallRule {
    pub id: String,
    pub direction: Direction,
    pub source: Cidr,
    pub ports: PortRange,
    pub verb: Verb,
    pub origin: Actor,
}

impl FirewallRule {
    /// Whether this rule's match set includes a single flow.
    pub fn matches_flow(&self, direction: Direction, src: Ipv4Addr, dst_port: u16) -> bool {
        self.direction == direction && self.source.contains_addr(src) && self.ports.contains(dst_port)
    }

    /// The match tuple, ignoring verb and origin. Two rules with equal
    /// tuples and opposite verbs are an exact conflict.
    pub fn match_tuple(&self) -> (Direction, Cidr, PortRange) {
        (self.direction, self.source, self.ports)
    }

    /// Whether this rule's match set fully covers `other`'s.
    pub fn covers_rule(&self, other: &FirewallRule) -> bool {
        self.direction == other.direction
            && self.source.contains(&other.source)
            && self.ports.covers(&other.ports)
    }
}

impl fmt::Display for FirewallRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} {} ({})",
            self.id, self.direction, self.source, self.ports, self.verb, self.origin
        )
    }
}

/// Deny-wins flow decision over a rule list: a flow is deliverable when no
/// deny rule matches it. Absence of an allow rule leaves attack traffic
/// observable; suppression requires an explicit covering deny (or target
/// isolation, handled by the caller).
pub fn flow_denied(rules: &[FirewallRule], direction: Direction, src: Ipv4Addr, dst_port: u16) -> bool {
    rules
        .iter()
        .any(|r| r.verb == Verb::Deny && r.matches_flow(direction, src, dst_port))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cidr(s: &str) -> Cidr {
        s.parse().unwrap()
    }

    #[test]
    fn cidr_parse_and_display() {
        let c = cidr("192.0.2.0/24");
        assert_eq!(c.prefix_len(), 24);
        assert_eq!(c.to_string(), "192.0.2.0/24");
        assert_eq!(cidr("10.1.2.3/8"), cidr("10.0.0.0/8"));
        assert_eq!(cidr("203.0.113.7"), Cidr::host(Ipv4Addr::new(203, 0, 113, 7)));
        assert_eq!(cidr("0.0.0.0/0"), Cidr::any());
    }

    #[test]
    fn cidr_parse_rejects_garbage() {
        assert!(Cidr::from_str("").is_err());
        assert!(Cidr::from_str("10.0.0.0/33").is_err());
        assert!(Cidr::from_str("10.0.0/8").is_err());
        assert!(Cidr::from_str("10.0.0.0/-1").is_err());
        assert!(Cidr::from_str("256.1.1.1/8").is_err());
        assert!(Cidr::from_str("10.0.0.0/8/8").is_err());
    }

    // Containment oracle: enumerate sample addresses and compare the
    // membership answer against plain integer masking.
    #[test]
    fn cidr_containment_matches_address_enumeration() {
        let blocks = [
            cidr("0.0.0.0/0"),
            cidr("10.0.0.0/8"),
            cidr("192.0.2.0/24"),
            cidr("192.0.2.128/25"),
            cidr("198.51.100.44/32"),
        ];
        let samples = [
            Ipv4Addr::new(10, 0, 0, 1),
            Ipv4Addr::new(10, 255, 255, 254),
            Ipv4Addr::new(11, 0, 0, 1),
            Ipv4Addr::new(192, 0, 2, 1),
            Ipv4Addr::new(192, 0, 2, 127),
            Ipv4Addr::new(192, 0, 2, 128),
            Ipv4Addr::new(192, 0, 3, 1),
            Ipv4Addr::new(198, 51, 100, 44),
            Ipv4Addr::new(198, 51, 100, 45),
        ];
        for b in &blocks {
            for s in &samples {
                let want = if b.prefix_len() == 0 {
                    true
                } else {
                    let mask = u32::MAX << (32 - u32::from(b.prefix_len()));
                    (u32::from(*s) & mask) == u32::from(b.base_addr())
                };
                assert_eq!(b.contains_addr(*s), want, "{b} contains {s}");
                // Block containment must agree with host containment.
                assert_eq!(b.contains(&Cidr::host(*s)), b.contains_addr(*s));
            }
        }
        // Nesting: /0 covers everything, /24 covers its /25, never the reverse.
        assert!(blocks[0].contains(&blocks[2]));
        assert!(blocks[2].contains(&blocks[3]));
        assert!(!blocks[3].contains(&blocks[2]));
        assert!(blocks[2].overlaps(&blocks[3]));
        assert!(!blocks[1].overlaps(&blocks[2]));
    }

    #[test]
    fn port_range_basics() {
        let r: PortRange = "80-443".parse().unwrap();
        assert!(r.contains(80) && r.contains(443) && !r.contains(79) && !r.contains(444));
        assert!(PortRange::all().covers(&r));
        assert!(!r.covers(&PortRange::all()));
        assert!(r.overlaps(&PortRange::single(100)));
        assert!(!r.overlaps(&PortRange::single(22)));
        assert_eq!("22".parse::<PortRange>().unwrap(), PortRange::single(22));
        assert!(PortRange::from_str("443-80").is_err());
        assert!(PortRange::from_str("http").is_err());
        assert!(PortRange::from_str("1-2-3").is_err());
    }

    #[test]
    fn deny_wins_regardless_of_rule_order() {
        let allow = FirewallRule {
            id: "allow-all".into(),
            direction: Direction::Ingress,
            source: Cidr::any(),
            ports: PortRange::all(),
            verb: Verb::Allow,
            origin: Actor::Baseline,
        };
        let deny = FirewallRule {
            id: "deny-block".into(),
            direction: Direction::Ingress,
            source: cidr("192.0.2.0/24"),
            ports: PortRange::all(),
            verb: Verb::Deny,
            origin: Actor::Agent,
        };
        let src = Ipv4Addr::new(192, 0, 2, 9);
        for rules in [vec![allow.clone(), deny.clone()], vec![deny.clone(), allow.clone()]] {
            assert!(flow_denied(&rules, Direction::Ingress, src, 80));
            assert!(!flow_denied(&rules, Direction::Ingress, Ipv4Addr::new(8, 8, 8, 8), 80));
        }
        // No allow rule at all: flow still not denied (observable traffic).
        assert!(!flow_denied(&[], Direction::Ingress, src, 80));
    }

    #[test]
    fn serde_round_trips_as_strings() {
        let c = cidr("10.0.0.0/8");
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, "\"10.0.0.0/8\"");
        assert_eq!(serde_json::from_str::<Cidr>(&json).unwrap(), c);
        let p: PortRange = "0-65535".parse().unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, "\"0-65535\"");
        assert_eq!(serde_json::from_str::<PortRange>(&json).unwrap(), p);
        assert!(serde_json::from_str::<Cidr>("\"nope\"").is_err());
    }
}
