#![no_main]

use libfuzzer_sys::fuzz_target;
use psob_core::eval::{decode_counts_string, encode_counts_string};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(counts) = decode_counts_string(text) {
        let again = decode_counts_string(&encode_counts_string(&counts)).expect("encoded counts decode");
        assert_eq!(again, counts);
    }
});
