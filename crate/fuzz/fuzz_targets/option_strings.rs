#![no_main]

use libfuzzer_sys::fuzz_target;
use saliency_tubes::{AxisOrder, Method, RenderMode, TauPolicy};

// command-line option values: parse, and re-parse whatever Display prints
fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(p) = s.parse::<TauPolicy>() {
        assert_eq!(p.to_string().parse::<TauPolicy>().unwrap(), p);
    }
    if let Ok(o) = s.parse::<AxisOrder>() {
        assert_eq!(o.to_string().parse::<AxisOrder>().unwrap(), o);
    }
    let _ = s.parse::<Method>();
    let _ = s.parse::<RenderMode>();
});
