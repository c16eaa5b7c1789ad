#![no_main]

use canvastune::nn::{decode_checkpoint, encode_checkpoint};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok((spec, params)) = decode_checkpoint(data) {
        let bytes = encode_checkpoint(&spec, &params).expect("decoded checkpoint re-encodes");
        let (spec2, params2) = decode_checkpoint(&bytes).expect("re-encoded checkpoint decodes");
        assert_eq!(spec, spec2);
        assert_eq!(bytes, encode_checkpoint(&spec2, &params2).unwrap());
    }
});
