#![no_main]

use libfuzzer_sys::fuzz_target;
use psob::session::{NewSession, Session};
use psob_core::attention::Stroke;

// request bodies of POST /sessions and POST /sessions/{id}/strokes
fuzz_target!(|data: &[u8]| {
    let mid = data.len() / 2;
    let Ok(spec) = serde_json::from_slice::<NewSession>(&data[..mid]) else { return };
    // keep each run cheap; the session's own cap is far larger
    if spec.image.width as u64 * spec.image.height as u64 > 1 << 16 {
        return;
    }
    let Ok(mut session) = Session::new("fuzz".into(), spec) else { return };
    if let Ok(stroke) = serde_json::from_slice::<Stroke>(&data[mid..]) {
        let _ = session.add_stroke(stroke);
    }
    let _ = session.analysis();
    let _ = session.attention_map();
    if let Ok(split) = session.export() {
        split.validate().expect("exports validate");
    }
});
