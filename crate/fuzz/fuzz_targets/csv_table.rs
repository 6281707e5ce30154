#![no_main]

use libfuzzer_sys::fuzz_target;
use readout_sim::Table;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(table) = Table::from_csv(text) {
        let csv = table.to_csv();
        let back = Table::from_csv(&csv).expect("emitted table loads");
        assert!(back.same_values(&table));
        assert_eq!(back.to_csv(), csv);
    }
});
