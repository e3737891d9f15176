#![no_main]

use libfuzzer_sys::fuzz_target;
use psob_core::dataset::DatasetSplit;

fuzz_target!(|data: &[u8]| {
    if let Ok(split) = DatasetSplit::from_json_bytes(data) {
        // anything accepted must survive its own canonical form
        let text = split.to_canonical_json();
        let again = DatasetSplit::from_json_str(&text).expect("canonical output reloads");
        assert_eq!(again.to_canonical_json(), text);
    }
});
