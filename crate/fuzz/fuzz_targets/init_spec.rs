#![no_main]

use cantor_pca::engine::InitSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(init) = InitSpec::parse(text) {
            init.validate().unwrap();
        }
    }
});
