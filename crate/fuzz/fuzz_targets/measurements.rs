#![no_main]
//! Measurement CSV parser, plus the downstream validation and spline fit
//! when a small payload parses cleanly.

use libfuzzer_sys::fuzz_target;
use torevac::boundary_data::{fit_periodic_spline, parse_measurements, BoundarySamples};
use torevac::geometry::Point;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(rows) = parse_measurements(text) else {
        return;
    };
    if rows.len() > 512 {
        return;
    }
    let theta: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let u0: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let u1: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let mut sorted = theta.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted.dedup();
    if sorted.len() == theta.len() {
        if let Ok(samples) =
            BoundarySamples::new(sorted.clone(), u0.clone(), u1, Point::new(2.42, 0.0), 0.92)
        {
            let _ = samples.u0_spline();
        }
        let _ = fit_periodic_spline(&sorted, &u0);
    }
});
