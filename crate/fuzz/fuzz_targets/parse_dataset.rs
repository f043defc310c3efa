#![no_main]

use dynaslam::dataset::{parse_dataset, write_dataset};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok((scenario, truth)) = parse_dataset(text, 0.1) else {
        return;
    };
    // anything accepted must survive a write and re-read unchanged
    let mut out = Vec::new();
    write_dataset(&scenario, &truth, &mut out).unwrap();
    let again = parse_dataset(std::str::from_utf8(&out).unwrap(), 0.1).unwrap();
    assert_eq!((scenario, truth), again);
});
