#![no_main]

use libfuzzer_sys::fuzz_target;
use psob_core::attention::AttentionMap;
use psob_core::raster::{decode_gray_png, encode_gray_png};

fuzz_target!(|data: &[u8]| {
    if let Ok(raster) = decode_gray_png(data) {
        let png = encode_gray_png(&raster).expect("decoded raster re-encodes");
        assert_eq!(decode_gray_png(&png).expect("round trip"), raster);
        let _ = AttentionMap::from_raster(raster);
    }
});
