#![no_main]

use cantor_pca::rational::Rat;
use cantor_pca::scan::{parse_grid, MAX_GRID};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = Rat::parse(text);
    if let Ok(grid) = parse_grid(text) {
        assert!(!grid.is_empty() && grid.len() <= MAX_GRID);
        assert!(grid.iter().all(|x| x.is_unit()));
    }
});
