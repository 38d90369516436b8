#![no_main]

use cantor_pca::maps::{GDeltaSpec, MapDescriptor};
use cantor_pca::rational::Rat;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = GDeltaSpec::from_json_str(text) {
        let _ = spec.contains(&Rat::new(1, 3).unwrap());
        if let Ok(f) = MapDescriptor::build_f(&spec, 3) {
            let _ = f.rule(5);
        }
    }
});
