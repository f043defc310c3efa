#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = dynaslam::config::parse_str(text) {
        let _ = cfg.experiment_spec();
    }
});
