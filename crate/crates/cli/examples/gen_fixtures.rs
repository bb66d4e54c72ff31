//! Regenerates the bundled scenario fixtures under crates/cli/fixtures/.

use koszul_core::scenario::GeometryScenario;

// examples cannot see the binary's modules, so the file format is written
// out directly; keep in sync with src/scenario_file.rs
fn wrap(scenario: &GeometryScenario, seed: u64, count: usize) -> serde_json::Value {
    serde_json::json!({
        "version": "koszul-scenario/1",
        "scenario": scenario,
        "sampler": { "seed": seed, "count": count },
        "tolerances": { "construction": 1e-10, "identity": 1e-9, "oracle": 1e-6 }
    })
}

fn write(name: &str, value: &serde_json::Value) {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    println!("wrote {}", path.display());
}

fn main() {
    write(
        "flat-euclidean.json",
        &wrap(&GeometryScenario::flat_euclidean(3), 7, 6),
    );
    write(
        "sphere-metric-H.json",
        &wrap(&GeometryScenario::sphere(std::f64::consts::FRAC_PI_4, 0.3), 11, 8),
    );
    write(
        "sphere3-metric-H.json",
        &wrap(&GeometryScenario::sphere3(0.9, 0.7, 0.3), 13, 6),
    );
    write(
        "skew-standard-n4.json",
        &wrap(
            &GeometryScenario::fedosov_constant_h(
                4,
                koszul_core::scenario::HSymmetry::Skew,
                21,
            )
            .unwrap(),
            21,
            5,
        ),
    );
    write(
        "generic-curved.json",
        &wrap(
            &GeometryScenario::sphere_cylinder_generic(0.7, 0.9, 0.4, 0.2),
            17,
            6,
        ),
    );
    // a frame whose H is singular: the forced-vanishing system needs the
    // inverse and must fail cleanly
    let mut singular = GeometryScenario::flat_euclidean(2);
    singular.name = "singular-h".into();
    singular.h = koszul_core::scenario::HSpec::Constant {
        entries: vec![vec![1.0, 2.0], vec![2.0, 4.0]],
    };
    write("singular-h.json", &wrap(&singular, 3, 2));
}
