#![no_main]
use libfuzzer_sys::fuzz_target;
use torevac_cli::config::Config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = Config::parse(text) {
        let _ = cfg.wall();
        let _ = cfg.sigma();
        let _ = cfg.curve("opt.initial", Some("circle:0.46"));
        let _ = cfg.f64_or("mesh.h", 0.03);
    }
});
