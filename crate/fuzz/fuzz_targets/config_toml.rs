#![no_main]

use canvastune::data::{PolarityTable, StyleSet};
use canvastune::metadata::{KeywordTable, StyleKeywordMap};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&which, rest)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    match which % 4 {
        0 => {
            let _ = KeywordTable::from_toml(text);
        }
        1 => {
            let _ = StyleKeywordMap::from_toml(text, &StyleSet::default());
        }
        2 => {
            let _ = StyleSet::from_toml(text);
        }
        _ => {
            let _ = PolarityTable::from_toml(text);
        }
    }
});
