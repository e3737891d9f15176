#![no_main]

use libfuzzer_sys::fuzz_target;
use psob_core::eval::{parse_detections, EvalSet};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let set = EvalSet { images: [(1, (32, 24)), (2, (5, 7))].into(), ..Default::default() };
    if let Ok(dets) = parse_detections(text, &set) {
        for d in &dets {
            assert!((0.0..=1.0).contains(&d.score));
            assert!(set.images.contains_key(&d.image_id));
        }
    }
});
