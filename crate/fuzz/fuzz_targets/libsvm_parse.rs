#![no_main]

use libfuzzer_sys::fuzz_target;
use sketchguard::datagen::{parse_libsvm, write_libsvm};

fuzz_target!(|data: &[u8]| {
    // First byte optionally fixes the feature count.
    let (expected, text) = match data.split_first() {
        Some((&b, rest)) if b & 0x80 != 0 => (Some(usize::from(b & 0x7f)), rest),
        _ => (None, data),
    };
    let Ok(a) = parse_libsvm(text, expected) else {
        return;
    };
    if let Some(d) = expected {
        assert_eq!(a.cols(), d);
    }
    let mut buf = Vec::new();
    write_libsvm(&a, &mut buf).unwrap();
    let back = parse_libsvm(&buf, Some(a.cols())).expect("written file parses");
    assert_eq!(back.shape(), a.shape());
    for (x, y) in back.data().iter().zip(a.data()) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
});
