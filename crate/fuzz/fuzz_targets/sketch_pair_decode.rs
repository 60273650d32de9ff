#![no_main]

use libfuzzer_sys::fuzz_target;
use sketchguard_cli::pair_file::{decode_pair, encode_pair};

fuzz_target!(|data: &[u8]| {
    if let Ok(pair) = decode_pair(data) {
        assert_eq!(pair.a_sketch().rows(), pair.t());
        assert_eq!(pair.b_sketch().rows(), pair.t());
        let again = decode_pair(encode_pair(&pair).as_bytes()).expect("re-encoded pair decodes");
        assert_eq!(again, pair);
    }
});
