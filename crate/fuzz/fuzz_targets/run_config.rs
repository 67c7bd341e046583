#![no_main]

use cloudward::config::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = RunConfig::from_toml_str(text) else { return };
    // Anything that validates must survive its own resolved snapshot, and
    // the snapshot of the reloaded config must be byte-identical.
    let snapshot = cfg.resolved_toml();
    let back = RunConfig::from_toml_str(&snapshot).expect("resolved snapshot failed to load");
    assert_eq!(snapshot, back.resolved_toml());
});
