#![no_main]

use libfuzzer_sys::fuzz_target;
use psob_core::geometry::{curvature_points, perimeter, Ring};
use psob_core::raster::fill_rings;

fuzz_target!(|data: &[u8]| {
    let coords: Vec<f64> = data
        .chunks_exact(4)
        .take(64)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    let Ok(ring) = Ring::from_flat(&coords) else { return };
    let cp = curvature_points(&ring);
    assert!(cp.count() <= ring.len());
    assert!(cp.indices.windows(2).all(|w| w[0] < w[1]));
    if perimeter(&ring).is_finite() {
        let _ = fill_rings(std::slice::from_ref(&ring), 16, 16);
    }
});
