#![no_main]

use libfuzzer_sys::fuzz_target;
use saliency_tubes::{encode_npy, parse_npy};

// anything the reader accepts must survive a write/read cycle bit for bit
fuzz_target!(|data: &[u8]| {
    let Ok(t) = parse_npy(data) else { return };
    let bytes = encode_npy(&t).expect("parsed tensor encodes");
    let back = parse_npy(&bytes).expect("encoded tensor parses");
    assert_eq!(back.shape(), t.shape());
    assert!(back.data().iter().zip(t.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
});
