#![no_main]

use libfuzzer_sys::fuzz_target;
use readout_sim::ResultBundle;

// After one normalizing pass, json -> load -> json is byte-identical.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(bundle) = ResultBundle::from_json(text) {
        let once = bundle.to_json();
        let twice = ResultBundle::from_json(&once).expect("emitted bundle loads").to_json();
        assert_eq!(once, twice);
    }
});
