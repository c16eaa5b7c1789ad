#![no_main]

use canvastune::pipeline::RegistryFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = serde_json::from_slice::<RegistryFile>(data);
});
