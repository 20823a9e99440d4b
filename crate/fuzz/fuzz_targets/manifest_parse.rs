#![no_main]

use libfuzzer_sys::fuzz_target;
use saliency_tubes::Manifest;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(m) = Manifest::parse(text) else { return };
    let again = Manifest::parse(&m.to_json().to_string()).expect("serialized manifest parses");
    assert_eq!(again, m);
});
