#![no_main]

use cloudward::world::trace::{parse_trace, render_trace, TraceOptions};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // The restrictive mode must never panic either, result aside.
    let _ = parse_trace(text, TraceOptions { allow_truth: false });
    let Ok(events) = parse_trace(text, TraceOptions { allow_truth: true }) else { return };
    // Parsed events re-render to a trace that parses back to the same events.
    let rendered = render_trace(&events, true);
    let again =
        parse_trace(&rendered, TraceOptions { allow_truth: true }).expect("rendered trace rejected");
    assert_eq!(events, again);
});
