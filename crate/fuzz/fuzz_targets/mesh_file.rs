#![no_main]
use libfuzzer_sys::fuzz_target;
use torevac::mesh::parse_mesh;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(mesh) = parse_mesh(text) {
        if mesh.n_nodes() <= 10_000 {
            let _ = mesh.validate();
            let _ = mesh.quality();
        }
    }
});
