//! Reports read back by `goc noise --report`.

#![no_main]

use goc_core::numfmt::to_json_string;
use goc_core::EquilibriumReport;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(report) = serde_json::from_slice::<EquilibriumReport>(data) else { return };
    let _ = to_json_string(&report);
});
