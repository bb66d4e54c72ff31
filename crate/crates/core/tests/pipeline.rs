//! End-to-end pipeline over the public API: scenario ingestion, frame
//! evaluation, superconnection sampling, the curvature table, and the
//! scalar supercurvature — the path every CLI command drives.

use koszul_core::scenario::{GeometryScenario, HSymmetry};
use koszul_core::superconn::{
    compatibility_predicate, forced_vanishing_check, sample_fedosov, symmetry_predicate,
};
use koszul_core::supercurv::{
    closed_form_a2_a3, graded_ricci, graded_scalar, max_diff_t5, pair_curvature_with_omega,
};
use koszul_core::superform::{closedness_residual, graded_d_one_form, lambda_h, omega_h};

#[test]
fn sphere_pipeline_end_to_end() {
    let scenario = GeometryScenario::sphere(std::f64::consts::FRAC_PI_4, 0.3);
    let frame = scenario.build_frame().unwrap();
    assert!(frame.check_nabla_h() < 1e-12);

    // two-form consistency and closedness
    let w = omega_h(&frame);
    let wd = graded_d_one_form(&frame, &lambda_h(&frame)).unwrap();
    assert!(w.max_diff(&wd) < 1e-9);
    assert!(closedness_residual(&frame, &w).unwrap() < 1e-9);

    // constraint systems
    let cert = forced_vanishing_check(&frame).unwrap();
    assert!(cert.k1_k2_l3_max < 1e-10);
    assert_eq!(cert.k3_free_dim, 0); // n = 2

    // sampled superconnection and its curvature
    let t = sample_fedosov(&frame, 4).unwrap();
    assert!(symmetry_predicate(&t, &frame).max() < 1e-10);
    assert!(compatibility_predicate(&t, &frame).unwrap().max() < 1e-10);
    let table = pair_curvature_with_omega(&t, &w, &frame).unwrap();
    let (a2c, a3c) = closed_form_a2_a3(&t, &frame);
    assert!(max_diff_t5(&table.a2, &a2c) < 1e-9);
    assert!(max_diff_t5(&table.a3, &a3c) < 1e-9);

    // the scalar supercurvature of a metric-induced form vanishes
    let ric = graded_ricci(&table, &frame);
    let scal = graded_scalar(&ric, &frame).unwrap();
    assert!(scal.value().abs() < 1e-9);
    assert!(scal.scalar.expansion_residual < 1e-10);
}

#[test]
fn skew_pipeline_with_curvature() {
    let scenario = GeometryScenario::fedosov_constant_h(4, HSymmetry::Skew, 8).unwrap();
    let frame = scenario.build_frame().unwrap();
    assert!(frame.check_nabla_h() < 1e-9);
    assert!(koszul_core::frame::max_abs4(&frame.r) > 1e-3);

    let w = omega_h(&frame);
    let t = sample_fedosov(&frame, 2).unwrap();
    let table = pair_curvature_with_omega(&t, &w, &frame).unwrap();
    assert!(table.relation_residual < 1e-9);
    assert!(table.vanishing_residual < 1e-10);

    let ric = graded_ricci(&table, &frame);
    // the cross blocks carry curvature and cancel against each other
    let signal = ric.degree1.iter().map(|sm| sm.b.amax()).fold(0.0, f64::max);
    assert!(signal > 1e-3);
    assert!(ric.antisymmetry_residual() < 1e-9);
    let scal = graded_scalar(&ric, &frame).unwrap();
    assert!(scal.value().abs() < 1e-9);
    for d in &scal.degree1 {
        assert!(d.value.abs() < 1e-9);
    }
}

#[test]
fn scenario_json_roundtrip_preserves_frames() {
    for scenario in [
        GeometryScenario::sphere(0.7, 0.1),
        GeometryScenario::sphere3(0.9, 0.7, 0.3),
        GeometryScenario::sphere_cylinder_generic(0.5, 0.8, 0.2, 0.1),
        GeometryScenario::fedosov_constant_h(3, HSymmetry::Generic, 5).unwrap(),
    ] {
        let json = serde_json::to_string(&scenario).unwrap();
        let back: GeometryScenario = serde_json::from_str(&json).unwrap();
        let fa = scenario.build_frame().unwrap();
        let fb = back.build_frame().unwrap();
        assert!((fa.h.clone() - fb.h.clone()).amax() < 1e-14);
        let mut worst = 0.0f64;
        for i in 0..fa.n {
            for j in 0..fa.n {
                for k in 0..fa.n {
                    worst = worst.max((fa.gamma[i][j][k] - fb.gamma[i][j][k]).abs());
                    for l in 0..fa.n {
                        worst = worst.max((fa.r[i][j][k][l] - fb.r[i][j][k][l]).abs());
                    }
                }
            }
        }
        assert!(worst < 1e-12, "{}: {worst:.3e}", scenario.name);
    }
}
