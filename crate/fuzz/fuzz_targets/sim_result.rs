#![no_main]

use goc_core::SimResult;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(r) = serde_json::from_slice::<SimResult>(data) {
        let text = serde_json::to_string(&r).unwrap();
        let _ = serde_json::from_str::<SimResult>(&text);
    }
});
