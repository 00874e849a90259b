#![no_main]
use libfuzzer_sys::fuzz_target;
use torevac::geometry::Point;
use torevac::hardy_bep::AnnulusGeometry;
use torevac::report::parse_laurent;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let geometry = AnnulusGeometry::new(Point::new(2.42, 0.0), 0.72, 0.92).unwrap();
    if let Ok(model) = parse_laurent(text, geometry) {
        if model.degree <= 64 {
            // exercise the evaluators on whatever coefficients came through
            let _ = model.trace_at(torevac::boundary_data::BoundaryTag::Inner, 1.0);
            let _ = model.evaluate_interior(Point::new(2.42 + 0.8, 0.0));
        }
    }
});
