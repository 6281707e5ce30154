#![no_main]

use libfuzzer_sys::fuzz_target;
use readout_sim::ScenarioConfig;

// Any accepted config must survive serialize -> parse unchanged.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(loaded) = ScenarioConfig::parse(text) {
        let again = ScenarioConfig::parse(&loaded.config.to_toml()).expect("serialized config parses");
        assert_eq!(again.config, loaded.config);
        let _ = loaded.config.hash();
    }
});
