#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = cantor_pca::scan::read_csv(data) {
        for row in rows {
            // the reader only hands back rows with a known label
            row.label().unwrap();
        }
    }
});
