#![no_main]
use libfuzzer_sys::fuzz_target;

use rangetap_core::sim::Scenario;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(s) = Scenario::from_json_str(text) else { return };
    // Anything accepted must survive a write and re-read unchanged.
    let out = s.to_json_pretty();
    let back = Scenario::from_json_str(&out).expect("re-read of written scenario");
    assert_eq!(back.to_json_pretty(), out);
});
