#![no_main]

use canvastune::provider::Catalog;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(catalog) = Catalog::from_json(text) {
        for t in catalog.tracks() {
            let hits = catalog.search_keywords(&t.tags.join(" "), 5).unwrap();
            assert!(hits.len() <= 5);
        }
    }
});
