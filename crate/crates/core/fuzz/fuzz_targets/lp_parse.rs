#![no_main]

use fastmwem::lpsolve::LPInstance;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(lp) = LPInstance::parse(text) {
        assert_eq!(LPInstance::parse(&lp.to_text()).unwrap(), lp);
    }
});
