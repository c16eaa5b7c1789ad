#![no_main]

use canvastune::eval::{parse_ratings, RATING_MAX, RATING_MIN};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(records) = parse_ratings(text) {
        assert!(records.values().all(|r| (RATING_MIN..=RATING_MAX).contains(&r.rating)));
    }
});
