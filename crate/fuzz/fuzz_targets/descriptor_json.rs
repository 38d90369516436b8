#![no_main]

use cantor_pca::maps::MapDescriptor;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(map) = MapDescriptor::from_json_str(text) else {
        return;
    };
    // accepted descriptors must resolve cells without panicking and survive a round trip
    for cell in [0u64, 1, 2, 7, 100, 1 << 20, u64::MAX] {
        if let Ok(rule) = map.rule(cell) {
            let _ = rule.neighborhood(1 << 16);
        }
    }
    let back = MapDescriptor::from_json_str(&map.to_json_string().unwrap()).unwrap();
    assert_eq!(back.to_json_string().unwrap(), map.to_json_string().unwrap());
});
