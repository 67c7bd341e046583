#![no_main]

use cloudward::rl::checkpoint::Checkpoint;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(ck) = Checkpoint::decode(data) else { return };
    // The format has no slack: re-encoding an accepted checkpoint must
    // reproduce the input bytes exactly.
    assert_eq!(ck.encode(), data);
});
