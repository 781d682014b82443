#![no_main]
use libfuzzer_sys::fuzz_target;

use rangetap_cli::args::parse_point;

fuzz_target!(|data: &str| {
    if let Ok(p) = parse_point(data) {
        assert!(p.x.is_finite() && p.y.is_finite());
        let again = parse_point(&format!("{},{}", p.x, p.y)).unwrap();
        assert_eq!((again.x.to_bits(), again.y.to_bits()), (p.x.to_bits(), p.y.to_bits()));
    }
});
