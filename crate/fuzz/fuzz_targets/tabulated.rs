#![no_main]
use libfuzzer_sys::fuzz_target;

use nozzleflow::geometry::TabulatedArea;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = TabulatedArea::parse(s);
    }
});
