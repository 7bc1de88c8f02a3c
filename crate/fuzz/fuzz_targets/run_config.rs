//! Run configurations: parsing and validation must never panic, and any
//! accepted document survives a serialize/parse round trip.

#![no_main]

use goc_core::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = RunConfig::parse(text) else { return };
    let grid = cfg.eta_grid().expect("validated config has a grid");
    assert!(grid.iter().all(|&e| e >= 2.0));
    assert!(grid.windows(2).all(|w| w[0] < w[1]));
    let _ = cfg.frontier().validate();
    let back = RunConfig::parse(&serde_json::to_string(&cfg).unwrap()).expect("round trip");
    assert_eq!(back.eta_grid().unwrap(), grid);
});
