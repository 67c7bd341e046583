//! Parsing and rendering of recorded event traces. A trace is a small CSV
//! dialect (no quoting; attributes packed as `key=val;key=val`) that can be
//! injected into a world for replay. Input is untrusted: every row is
//! validated with a line diagnostic.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::world::event::{EventKind, EventOrigin, SecurityEvent, Signature};

pub const TRACE_HEADER: &str = "step,kind,source,attrs,anomaly";
pub const TRACE_HEADER_TRUTH: &str = "step,kind,source,attrs,anomaly,truth";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TraceOptions {
    /// Whether the optional `truth` column is acceptable. Operator-supplied
    /// replays must not carry ground-truth labels; test fixtures may.
    pub allow_truth: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("trace is empty")]
    Empty,
    #[error("line 1: bad header `{0}` (expected `{TRACE_HEADER}` or `{TRACE_HEADER_TRUTH}`)")]
    BadHeader(String),
    #[error("line {line}: expected {want} fields, found {got}")]
    FieldCount { line: usize, want: usize, got: usize },
    #[error("line {line}: bad step `{value}`")]
    BadStep { line: usize, value: String },
    #[error("line {line}: step {step} precedes previous step {prev}")]
    NonMonotonicStep { line: usize, step: u64, prev: u64 },
    #[error("line {line}: {message}")]
    BadKind { line: usize, message: String },
    #[error("line {line}: empty source")]
    EmptySource { line: usize },
    #[error("line {line}: bad attribute `{value}` (expected key=value)")]
    BadAttr { line: usize, value: String },
    #[error("line {line}: {message}")]
    BadSignature { line: usize, message: String },
    #[error("line {line}: bad anomaly `{value}` (expected a finite number in [0, 1])")]
    BadAnomaly { line: usize, value: String },
    #[error("line {line}: bad truth flag `{value}` (expected 0 or 1)")]
    BadTruth { line: usize, value: String },
    #[error("trace carries a truth column, which is not allowed here")]
    TruthNotAllowed,
}

/// Parse a trace. Steps must be non-decreasing; events come back in file
/// order with `origin = Replay`.
pub fn parse_trace(input: &str, opts: TraceOptions) -> Result<Vec<SecurityEvent>, TraceError> {
    let mut lines = input.lines().enumerate();
    let header = loop {
        match lines.next() {
            None => return Err(TraceError::Empty),
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((_, l)) => break l.trim(),
        }
    };
    let with_truth = match header {
        h if h == TRACE_HEADER => false,
        h if h == TRACE_HEADER_TRUTH => true,
        other => return Err(TraceError::BadHeader(other.to_string())),
    };
    if with_truth && !opts.allow_truth {
        return Err(TraceError::TruthNotAllowed);
    }
    let want = if with_truth { 6 } else { 5 };

    let mut events = Vec::new();
    let mut prev_step = 0u64;
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != want {
            return Err(TraceError::FieldCount { line, want, got: fields.len() });
        }
        let step: u64 = fields[0]
            .trim()
            .parse()
            .map_err(|_| TraceError::BadStep { line, value: fields[0].trim().to_string() })?;
        if !events.is_empty() && step < prev_step {
            return Err(TraceError::NonMonotonicStep { line, step, prev: prev_step });
        }
        prev_step = step;
        let kind: EventKind = fields[1]
            .trim()
            .parse()
            .map_err(|message| TraceError::BadKind { line, message })?;
        let source = fields[2].trim();
        if source.is_empty() {
            return Err(TraceError::EmptySource { line });
        }
        let mut attrs = BTreeMap::new();
        let mut signature = Signature::None;
        for pair in fields[3].split(';').filter(|p| !p.trim().is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| TraceError::BadAttr { line, value: pair.to_string() })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(TraceError::BadAttr { line, value: pair.to_string() });
            }
            if k == "signature" {
                signature = v
                    .parse()
                    .map_err(|message| TraceError::BadSignature { line, message })?;
            } else {
                attrs.insert(k.to_string(), v.to_string());
            }
        }
        let anomaly: f64 = fields[4]
            .trim()
            .parse()
            .ok()
            .filter(|a: &f64| a.is_finite() && (0.0..=1.0).contains(a))
            .ok_or_else(|| TraceError::BadAnomaly { line, value: fields[4].trim().to_string() })?;
        let truth_malicious = if with_truth {
            match fields[5].trim() {
                "0" => false,
                "1" => true,
                other => return Err(TraceError::BadTruth { line, value: other.to_string() }),
            }
        } else {
            false
        };
        events.push(SecurityEvent {
            step,
            kind,
            source: source.to_string(),
            signature,
            attrs,
            anomaly,
            truth_malicious,
            origin: EventOrigin::Replay,
        });
    }
    Ok(events)
}

/// Render events back into trace form. `parse_trace(render_trace(ev))` is
/// the identity on well-formed events (modulo float formatting).
pub fn render_trace(events: &[SecurityEvent], with_truth: bool) -> String {
    let mut out = String::from(if with_truth { TRACE_HEADER_TRUTH } else { TRACE_HEADER });
    out.push('\n');
    for e in events {
        let mut attrs: Vec<String> = e.attrs.iter().map(|(k, v)| format!("{k}={v}")).collect();
        if e.signature != Signature::None {
            attrs.push(format!("signature={}", e.signature));
        }
        out.push_str(&format!("{},{},{},{},{}", e.step, e.kind, e.source, attrs.join(";"), e.anomaly));
        if with_truth {
            out.push_str(if e.truth_malicious { ",1" } else { ",0" });
        }
        out.push('\n');
    }
    out
}
