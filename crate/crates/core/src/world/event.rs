//! The security event stream the agent observes: network flows, API calls,
//! alerts, and configuration changes, each with an anomaly score and a
//! ground-truth label the feature layer never sees.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    NetFlow,
    ApiCall,
    Alert,
    ConfigChange,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::NetFlow => "netflow",
            EventKind::ApiCall => "apicall",
            EventKind::Alert => "alert",
            EventKind::ConfigChange => "configchange",
        })
    }
}

impl std::str::FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "netflow" => Ok(EventKind::NetFlow),
            "apicall" => Ok(EventKind::ApiCall),
            "alert" => Ok(EventKind::Alert),
            "configchange" => Ok(EventKind::ConfigChange),
            other => Err(format!("unknown event kind `{other}`")),
        }
    }
}

/// Detector signature attached to an event, if any. Signatures are what the
/// feature layer keys on; they carry no ground truth by themselves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Signature {
    None,
    Scan,
    Flood,
    Sqli,
    Xss,
    Privesc,
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Signature::None => "none",
            Signature::Scan => "scan",
            Signature::Flood => "flood",
            Signature::Sqli => "sqli",
            Signature::Xss => "xss",
            Signature::Privesc => "privesc",
        })
    }
}

impl std::str::FromStr for Signature {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Signature::None),
            "scan" => Ok(Signature::Scan),
            "flood" => Ok(Signature::Flood),
            "sqli" => Ok(Signature::Sqli),
            "xss" => Ok(Signature::Xss),
            "privesc" => Ok(Signature::Privesc),
            other => Err(format!("unknown signature `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventOrigin {
    Scenario,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecurityEvent {
    /// World step at which the event was emitted.
    pub step: u64,
    pub kind: EventKind,
    /// Source entity: an IPv4 address for network events, a principal id for
    /// API activity.
    pub source: String,
    pub signature: Signature,
    /// Free-form attributes (`dst_port`, `target`, `api_name`, ...).
    pub attrs: BTreeMap<String, String>,
    /// Detector anomaly score in [0, 1].
    pub anomaly: f64,
    /// Ground truth. Used by reward and metrics only; the feature layer
    /// works on a view with this stripped.
    pub truth_malicious: bool,
    pub origin: EventOrigin,
}

impl SecurityEvent {
    pub fn attr(&self, key: &str) -> Option<&str> {
        self.attrs.get(key).map(String::as_str)
    }

    /// The instance this event is aimed at, when known.
    pub fn target(&self) -> Option<&str> {
        self.attr("target")
    }
}
