#![no_main]

use cloudward::rules::Cidr;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cidr) = text.parse::<Cidr>() else { return };
    let shown = cidr.to_string();
    let back: Cidr = shown.parse().expect("displayed CIDR rejected");
    assert_eq!(cidr, back);
    assert!(cidr.prefix_len() <= 32);
    assert!(cidr.contains_addr(cidr.base_addr()));
    assert!(Cidr::any().contains(&cidr));
});
