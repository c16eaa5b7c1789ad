#![no_main]

use canvastune::data::{DatasetManifest, StyleSet};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let styles = StyleSet::default();
    if let Ok(m) = DatasetManifest::parse(text, &styles) {
        let again = DatasetManifest::parse(&m.to_string(), &styles).expect("printed manifest parses");
        assert_eq!(again.records, m.records);
    }
});
