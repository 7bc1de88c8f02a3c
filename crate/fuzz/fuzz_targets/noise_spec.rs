#![no_main]

use goc_core::kernels::GameParams;
use goc_core::NoiseSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(spec) = serde_json::from_slice::<NoiseSpec>(data) else { return };
    for (n, eta) in [(1, 2.0), (2, 5.0), (250, 7.4)] {
        let p = GameParams::new(n, 1.0, eta).unwrap();
        if spec.validate(&p, None).is_err() {
            continue;
        }
        // A shell on the outer edge of the support is never accepted.
        if let Ok((pa, mse)) = spec.performance(&p) {
            assert!(pa > 0.0 && pa <= 1.0 + 1e-12, "{spec:?}: pa {pa}");
            assert!(mse >= 0.0, "{spec:?}: mse {mse}");
        }
    }
});
