#![no_main]

use canvastune::data::Image;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = Image::decode(data) {
        assert_eq!(img.data().len(), img.width() * img.height() * 3);
    }
});
