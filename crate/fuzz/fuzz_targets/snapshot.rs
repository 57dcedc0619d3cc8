#![no_main]
use libfuzzer_sys::fuzz_target;

use nozzleflow::solver::snapshot::Snapshot;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = Snapshot::parse(s);
    }
});
