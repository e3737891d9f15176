#![no_main]

use libfuzzer_sys::fuzz_target;
use psob_core::netprep::Tensor4;

fuzz_target!(|data: &[u8]| {
    if let Ok(t) = Tensor4::from_bytes(data) {
        assert_eq!(t.to_bytes(), data);
    }
});
