//! The named invariant suite. Every invariant stated by the library's
//! modules appears here exactly once; `verify` runs all of them against a
//! scenario and the seeded auxiliary data.

use crate::report::{InvariantResult, NamedTensorNorms, PointRun, ScalarSample};
use crate::scenario_file::{ScenarioFile, Tolerances};
use koszul_core::derivation::{basics, bracket_basic_j, parity_of, Derivation, JDerivation};
use koszul_core::exterior::Ext;
use koszul_core::frame::{self, t3, t4, FormKind, PointFrame};
use koszul_core::scenario::{standard_symplectic, GammaSpec, GeometryScenario, HSymmetry};
use koszul_core::superconn::{
    compatibility_functional, compatibility_predicate, forced_vanishing_check, graded_torsion,
    sample_fedosov, symmetry_predicate, ConnectionTensors,
};
use koszul_core::supercurv::{
    closed_form_a2_a3, graded_ricci, graded_scalar, max_diff_t5, pair_curvature_with_omega,
    CurvatureTable,
};
use koszul_core::superform::{closedness_residual, graded_d_one_form, lambda_h, omega_h};
use koszul_core::supermatrix::{Parity, SuperMatrix};
use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn max5(t: &frame::T4) -> f64 {
    frame::max_abs4(t)
}

fn t5_norm(t: &koszul_core::frame::T5) -> f64 {
    t.iter().map(max5).fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// scenario-independent invariants (seeded)
// ---------------------------------------------------------------------------

pub fn exterior_alternation(n: usize) -> InvariantResult {
    let mut worst = 0.0f64;
    for mask in 0..(1usize << n) {
        if (mask as u32).count_ones() % 2 == 1 {
            let a = Ext::basis(n, mask);
            worst = worst.max(a.wedge(&a).unwrap().max_abs());
        }
    }
    InvariantResult::new("exterior/alternation", worst, 0.0)
}

pub fn exterior_graded_commutativity(n: usize) -> InvariantResult {
    let n = n.min(4);
    let mut worst = 0.0f64;
    for ma in 0..(1usize << n) {
        for mb in 0..(1usize << n) {
            let a = Ext::basis(n, ma);
            let b = Ext::basis(n, mb);
            let pa = (ma as u32).count_ones() as usize;
            let pb = (mb as u32).count_ones() as usize;
            let sign = parity_of(pa * pb);
            let diff = &a.wedge(&b).unwrap() - &b.wedge(&a).unwrap().scale(sign);
            worst = worst.max(diff.max_abs());
        }
    }
    InvariantResult::new("exterior/graded-commutativity", worst, 0.0)
}

fn random_homogeneous(rng: &mut ChaCha8Rng, n: usize, parity: Parity) -> SuperMatrix {
    let z = DMatrix::zeros(n, n);
    let r = |rng: &mut ChaCha8Rng| DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    match parity {
        Parity::Even => SuperMatrix::new(
            r(rng) + DMatrix::identity(n, n) * 2.0,
            z.clone(),
            z.clone(),
            r(rng) + DMatrix::identity(n, n) * 2.0,
            parity,
        )
        .unwrap(),
        Parity::Odd => SuperMatrix::new(
            z.clone(),
            r(rng) + DMatrix::identity(n, n) * 2.0,
            r(rng) + DMatrix::identity(n, n) * 2.0,
            z,
            parity,
        )
        .unwrap(),
    }
}

pub fn supermatrix_transpose_inverse(n: usize, seed: u64) -> InvariantResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa5a5);
    let mut worst = 0.0f64;
    for parity in [Parity::Even, Parity::Odd] {
        for _ in 0..8 {
            let m = random_homogeneous(&mut rng, n, parity);
            let sign = if parity == Parity::Odd { -1.0 } else { 1.0 };
            let lhs = m.supertranspose().superinverse().unwrap();
            let rhs = m.superinverse().unwrap().supertranspose();
            let scaled = SuperMatrix {
                a: &rhs.a * sign,
                b: &rhs.b * sign,
                c: &rhs.c * sign,
                d: &rhs.d * sign,
                parity,
            };
            worst = worst.max(lhs.sub(&scaled).max_abs());
        }
    }
    InvariantResult::new("supermatrix/transpose-inverse", worst, 1e-9)
}

pub fn supermatrix_supertrace_cyclicity(n: usize, seed: u64) -> InvariantResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5a5a);
    let mut worst = 0.0f64;
    for (pm, pn) in [
        (Parity::Even, Parity::Even),
        (Parity::Even, Parity::Odd),
        (Parity::Odd, Parity::Even),
        (Parity::Odd, Parity::Odd),
    ] {
        for _ in 0..8 {
            let m = random_homogeneous(&mut rng, n, pm);
            let nn = random_homogeneous(&mut rng, n, pn);
            let sign = if pm == Parity::Odd && pn == Parity::Odd {
                -1.0
            } else {
                1.0
            };
            worst = worst.max((m.multiply(&nn).supertrace() - sign * nn.multiply(&m).supertrace()).abs());
        }
    }
    InvariantResult::new("supermatrix/supertrace-cyclicity", worst, 1e-9)
}

fn random_polynomial_gamma_frame(rng: &mut ChaCha8Rng, n: usize) -> PointFrame {
    let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let mut gamma = t3(n);
    let mut dgamma = t4(n);
    for i in 0..n {
        for j in 0..=i {
            for k in 0..n {
                let a = rng.gen_range(-1.0..1.0);
                let mut val = a;
                for m in 0..n {
                    let b = rng.gen_range(-1.0..1.0);
                    dgamma[m][i][j][k] = b;
                    dgamma[m][j][i][k] = b;
                    val += b * x[m];
                }
                gamma[i][j][k] = val;
                gamma[j][i][k] = val;
            }
        }
    }
    PointFrame::new(
        n,
        DMatrix::identity(n, n),
        t3(n),
        t4(n),
        gamma,
        dgamma,
        Some(koszul_core::frame::t5(n)),
    )
    .unwrap()
}

pub fn chart_first_bianchi(seed: u64) -> InvariantResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 17);
    let mut worst = 0.0f64;
    for n in 2..=4 {
        for _ in 0..5 {
            worst = worst.max(random_polynomial_gamma_frame(&mut rng, n).first_bianchi_residual());
        }
    }
    InvariantResult::new("chart/first-bianchi", worst, 1e-9)
}

/// Random polynomial SPD metric evaluated exactly at a point.
fn random_spd_metric_frame(rng: &mut ChaCha8Rng, n: usize) -> PointFrame {
    use koszul_core::chart::{ChartFn, Term};
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-0.5..0.5));
    let base = &a * a.transpose() + DMatrix::identity(n, n);
    let mut tables = vec![vec![ChartFn::zero(); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut terms = vec![Term {
                c: base[(i, j)],
                pow: vec![],
                sin: vec![],
                cos: vec![],
            }];
            for m in 0..n {
                let mut pow = vec![0i64; n];
                pow[m] = 1;
                terms.push(Term {
                    c: rng.gen_range(-0.1..0.1),
                    pow,
                    sin: vec![],
                    cos: vec![],
                });
            }
            tables[i][j] = ChartFn(terms.clone());
            tables[j][i] = ChartFn(terms);
        }
    }
    let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.2..0.2)).collect();
    let (g, dg, d2g) = koszul_core::scenario::eval_matrix_jets(&tables, &x);
    let (gamma, dgamma) = frame::levi_civita(n, &g, &dg, &d2g).unwrap();
    PointFrame::new(n, g, dg, d2g, gamma, dgamma, None).unwrap()
}

pub fn chart_metric_ricci_symmetry(seed: u64) -> InvariantResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 23);
    let mut worst = 0.0f64;
    for n in 2..=3 {
        for _ in 0..5 {
            let f = random_spd_metric_frame(&mut rng, n);
            let (ric, _) =
                frame::ricci_and_scalar(&f, &f.h.clone(), &f.dh.clone(), FormKind::Metric).unwrap();
            worst = worst.max((&ric - ric.transpose()).amax());
        }
    }
    InvariantResult::new("chart/metric-ricci-symmetry", worst, 1e-9)
}

/// Compatible symplectic pairs: a constant invertible skew form with a
/// seeded curved connection preserving it.
pub fn chart_symplectic_scalar_vanishing(seed: u64, pairs: usize) -> InvariantResult {
    let mut worst = 0.0f64;
    for k in 0..pairs {
        let n = if k % 2 == 0 { 2 } else { 4 };
        let sc = GeometryScenario {
            name: "aux".into(),
            dimension: n,
            h_symmetry: HSymmetry::Skew,
            point: (0..n).map(|i| 0.05 * (i as f64 + 1.0)).collect(),
            h: {
                let w = standard_symplectic(n);
                koszul_core::scenario::HSpec::Constant {
                    entries: (0..n).map(|i| (0..n).map(|j| w[(i, j)]).collect()).collect(),
                }
            },
            metric: None,
            gamma: GammaSpec::SolveParallelH {
                seed: seed.wrapping_add(k as u64),
                linear: true,
            },
        };
        let f = sc.build_frame().unwrap();
        let (_, s) =
            frame::ricci_and_scalar(&f, &f.h.clone(), &f.dh.clone(), FormKind::Symplectic).unwrap();
        worst = worst.max(s.abs());
    }
    InvariantResult::new("chart/symplectic-scalar-vanishing", worst, 1e-9)
}

pub fn graded_jacobi(seed: u64) -> InvariantResult {
    // frames with exact second connection derivatives
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 31);
    let mut frames = vec![GeometryScenario::sphere_tables(0.8, 0.2)
        .build_frame()
        .unwrap()];
    frames.push(random_polynomial_gamma_frame(&mut rng, 3));
    let mut worst = 0.0f64;
    for f in &frames {
        let n = f.n;
        let all: Vec<_> = basics(n).collect();
        for &a in &all {
            for &b in &all {
                for &c in &all {
                    let t1 = koszul_core::derivation::bracket_j(
                        f,
                        &JDerivation::basic(n, a),
                        &bracket_basic_j(f, b, c).unwrap(),
                    )
                    .unwrap();
                    let t2 = koszul_core::derivation::bracket_j(
                        f,
                        &JDerivation::basic(n, b),
                        &bracket_basic_j(f, c, a).unwrap(),
                    )
                    .unwrap();
                    let t3 = koszul_core::derivation::bracket_j(
                        f,
                        &JDerivation::basic(n, c),
                        &bracket_basic_j(f, a, b).unwrap(),
                    )
                    .unwrap();
                    let mut sum = Derivation::zero(n);
                    sum.add_assign_scaled(&t1, parity_of(a.0.parity() * c.0.parity()));
                    sum.add_assign_scaled(&t2, parity_of(b.0.parity() * a.0.parity()));
                    sum.add_assign_scaled(&t3, parity_of(c.0.parity() * b.0.parity()));
                    worst = worst.max(sum.max_abs());
                }
            }
        }
    }
    InvariantResult::new("graded/jacobi", worst, 1e-9)
}

// ---------------------------------------------------------------------------
// scenario-dependent invariants
// ---------------------------------------------------------------------------

pub fn graded_omega_dlambda(f: &PointFrame) -> InvariantResult {
    let w = omega_h(f);
    let wd = graded_d_one_form(f, &lambda_h(f)).unwrap();
    InvariantResult::new("graded/omega-matches-dlambda", w.max_diff(&wd), 1e-9)
}

pub fn graded_closedness(f: &PointFrame) -> InvariantResult {
    let w = omega_h(f);
    InvariantResult::new(
        "graded/closedness",
        closedness_residual(f, &w).unwrap(),
        1e-9,
    )
}

pub fn graded_degree_bookkeeping(f: &PointFrame) -> InvariantResult {
    let w = omega_h(f);
    let mut bad = 0.0f64;
    for b1 in basics(f.n) {
        for b2 in basics(f.n) {
            let v = &w.pair_basic(b1, b2).val;
            if let Some(d) = v.degree(1e-12) {
                let expect = b1.0.degree() + b2.0.degree() + 1;
                if d as i32 != expect {
                    bad = f64::INFINITY;
                }
            }
        }
    }
    InvariantResult::new("graded/degree-bookkeeping", bad, 0.0)
}

pub fn graded_nondegeneracy(f: &PointFrame) -> InvariantResult {
    let w = omega_h(f);
    let sm = w.scalar_supermatrix();
    let residual = match sm.superinverse() {
        Ok(inv) => {
            let p = sm.multiply(&inv);
            p.sub(&SuperMatrix::identity(f.n)).max_abs()
        }
        Err(_) => f64::INFINITY,
    };
    InvariantResult::new("graded/nondegeneracy", residual, 1e-9)
}

pub struct SampledData {
    pub tensors: Vec<(u64, ConnectionTensors)>,
    pub tables: Vec<CurvatureTable>,
}

/// Sample `count` superconnections over the frame and build their tables.
pub fn sample_campaign(f: &PointFrame, seed: u64, count: usize) -> Result<SampledData, String> {
    let w = omega_h(f);
    let mut tensors = Vec::new();
    let mut tables = Vec::new();
    for k in 0..count {
        let s = seed.wrapping_add(k as u64);
        let t = sample_fedosov(f, s).map_err(|e| e.to_string())?;
        let table = pair_curvature_with_omega(&t, &w, f).map_err(|e| e.to_string())?;
        tensors.push((s, t));
        tables.push(table);
    }
    Ok(SampledData { tensors, tables })
}

pub fn superconn_predicates(f: &PointFrame, data: &SampledData) -> Vec<InvariantResult> {
    let mut sym_worst = 0.0f64;
    let mut comp_worst = 0.0f64;
    let mut tor_worst = 0.0f64;
    for (_, t) in &data.tensors {
        sym_worst = sym_worst.max(symmetry_predicate(t, f).max());
        comp_worst = comp_worst.max(compatibility_predicate(t, f).unwrap().max());
        for b1 in basics(f.n) {
            for b2 in basics(f.n) {
                tor_worst = tor_worst.max(graded_torsion(t, f, b1, b2).unwrap().max_abs());
            }
        }
    }
    vec![
        InvariantResult::new("superconn/symmetry-predicate", sym_worst, 1e-10),
        InvariantResult::new("superconn/compatibility-predicate", comp_worst, 1e-10),
        InvariantResult::new("superconn/torsion-vanishing", tor_worst, 1e-9),
    ]
}

/// Equivalence of the compatibility predicate and the defining functional,
/// in both directions: valid samples pass both; targeted single-condition
/// violations fail both.
pub fn superconn_theorem_equivalence(f: &PointFrame, data: &SampledData) -> InvariantResult {
    let w = omega_h(f);
    let mut worst = 0.0f64;
    for (_, t) in &data.tensors {
        let func = compatibility_functional(t, &w, f).unwrap();
        let pred = compatibility_predicate(t, f).unwrap().max();
        if pred < 1e-10 {
            worst = worst.max(func);
        } else {
            worst = f64::INFINITY;
        }
    }
    // targeted violations, one per condition: each must register on the
    // predicate and fail the functional with it
    let n = f.n;
    if n < 2 {
        return InvariantResult::new("superconn/theorem-equivalence", worst, 1e-9)
            .with_details("violation constructions need n >= 2".into());
    }
    let base = &data.tensors[0].1;
    let mut violated = 0usize;
    for idx in 0..6usize {
        match koszul_core::superconn::violate_condition(base, f, idx) {
            Some(t) => {
                let func = compatibility_functional(&t, &w, f).unwrap();
                if func < 1e-6 {
                    worst = f64::INFINITY;
                }
                violated += 1;
            }
            None => worst = f64::INFINITY,
        }
    }
    InvariantResult::new("superconn/theorem-equivalence", worst, 1e-9).with_details(format!(
        "{} samples + {violated}/6 targeted violations",
        data.tensors.len()
    ))
}

pub fn superconn_forced_vanishing(f: &PointFrame) -> (InvariantResult, Option<koszul_core::superconn::ForcedVanishingCertificate>) {
    match forced_vanishing_check(f) {
        Ok(cert) => {
            let mut residual = cert.k1_k2_l3_max;
            if cert.k3_free_dim != cert.expected_k3_dim {
                residual = f64::INFINITY;
            }
            let inv = InvariantResult::new("superconn/forced-vanishing", residual, 1e-10)
                .with_details(format!(
                    "K1=K2=L3 forced to 0; K3 free dimension = {} (expected {})",
                    cert.k3_free_dim, cert.expected_k3_dim
                ));
            (inv, Some(cert))
        }
        Err(e) => (
            InvariantResult::new("superconn/forced-vanishing", f64::INFINITY, 1e-10)
                .with_details(e.to_string()),
            None,
        ),
    }
}

pub fn superconn_determinism(f: &PointFrame, seed: u64) -> InvariantResult {
    let a = sample_fedosov(f, seed).unwrap();
    let b = sample_fedosov(f, seed).unwrap();
    let ja = serde_json::to_string(&a).unwrap();
    let jb = serde_json::to_string(&b).unwrap();
    let residual = if ja == jb { 0.0 } else { f64::INFINITY };
    InvariantResult::new("superconn/sampler-determinism", residual, 0.0)
}

pub fn supercurv_invariants(
    f: &PointFrame,
    data: &SampledData,
    h_symmetry: HSymmetry,
    tol: &Tolerances,
) -> (Vec<InvariantResult>, Vec<ScalarSample>, Option<NamedTensorNorms>) {
    let mut antisym = 0.0f64;
    let mut relations = 0.0f64;
    let mut vanishing = 0.0f64;
    let mut roundtrip = 0.0f64;
    let mut a2a3 = 0.0f64;
    let mut prop = 0.0f64;
    let mut ric_anti = 0.0f64;
    let mut scal_worst = 0.0f64;
    let mut cancel_worst = 0.0f64;
    let mut expansion = 0.0f64;
    let mut samples = Vec::new();
    let mut norms = None;
    for ((seed, t), table) in data.tensors.iter().zip(&data.tables) {
        antisym = antisym.max(table.antisymmetry_residual);
        relations = relations.max(table.relation_residual);
        vanishing = vanishing.max(table.vanishing_residual);
        roundtrip = roundtrip.max(table.roundtrip_residual);
        let (a2c, a3c) = closed_form_a2_a3(t, f);
        a2a3 = a2a3
            .max(max_diff_t5(&table.a2, &a2c))
            .max(max_diff_t5(&table.a3, &a3c));
        let p = koszul_core::supercurv::proposition_identities(table, f);
        prop = prop.max(p[0]).max(p[1]).max(p[2]);
        let ric = graded_ricci(table, f);
        let scal = graded_scalar(&ric, f).unwrap();
        expansion = expansion.max(scal.scalar.expansion_residual);
        for d in &scal.degree1 {
            expansion = expansion.max(d.expansion_residual);
        }
        let cross = ric
            .degree1
            .iter()
            .map(|sm| sm.b.amax().max(sm.c.amax()))
            .fold(ric.scalar.b.amax().max(ric.scalar.c.amax()), f64::max);
        if h_symmetry != HSymmetry::Generic {
            ric_anti = ric_anti.max(ric.antisymmetry_residual());
            scal_worst = scal_worst.max(scal.value().abs());
            for d in &scal.degree1 {
                scal_worst = scal_worst.max(d.value.abs());
            }
            cancel_worst = cancel_worst.max(scal.cancellation_relative());
        }
        if norms.is_none() {
            norms = Some(NamedTensorNorms {
                a1: max5(&table.a1),
                a2: t5_norm(&table.a2),
                a3: t5_norm(&table.a3),
                a4: max5(&table.a4),
                a5: max5(&table.a5),
                b1: t5_norm(&table.b1),
                b3: max5(&table.b3),
            });
        }
        samples.push(ScalarSample {
            seed: *seed,
            scal: scal.value(),
            term_c: scal.scalar.term_c,
            term_b: scal.scalar.term_b,
            degree1: scal.degree1.iter().map(|d| d.value).collect(),
            cross_block_norm: cross,
            ricci_antisymmetry: ric.antisymmetry_residual(),
        });
    }

    // sensitivity: one constructed non-Fedosov perturbation must break a
    // proposition identity
    let sensitivity = {
        let (_, base) = &data.tensors[0];
        let mut t = base.clone();
        let j = 1.min(f.n - 1);
        t.k3[0][j][0] += 0.4;
        t.k3[j][0][0] -= 0.4;
        let w = omega_h(f);
        match pair_curvature_with_omega(&t, &w, f) {
            Ok(table) => {
                let p = koszul_core::supercurv::proposition_identities(&table, f);
                if p.iter().any(|&v| v > 1e-6) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Err(_) => f64::INFINITY,
        }
    };

    // scale covariance: scaling H leaves the vanishing status unchanged
    let scale_cov = {
        let mut scaled = f.clone();
        let c = 2.5;
        scaled.h *= c;
        for k in 0..f.n {
            for i in 0..f.n {
                for j in 0..f.n {
                    scaled.dh[k][i][j] *= c;
                    for l in 0..f.n {
                        scaled.d2h[k][l][i][j] *= c;
                    }
                }
            }
        }
        let t = sample_fedosov(&scaled, data.tensors[0].0).unwrap();
        let w = omega_h(&scaled);
        let table = pair_curvature_with_omega(&t, &w, &scaled).unwrap();
        let ric = graded_ricci(&table, &scaled);
        let scal = graded_scalar(&ric, &scaled).unwrap();
        let before = samples[0].scal.abs() < 1e-9;
        let after = scal.value().abs() < 1e-9;
        if before == after {
            0.0
        } else {
            f64::INFINITY
        }
    };

    let generic_note = if h_symmetry == HSymmetry::Generic {
        Some("generic H: values reported, vanishing not asserted".to_string())
    } else {
        None
    };
    let with_note = |mut r: InvariantResult| {
        if let Some(note) = &generic_note {
            r.details = Some(note.clone());
        }
        r
    };

    let invariants = vec![
        InvariantResult::new("supercurv/graded-antisymmetry", antisym, 1e-10),
        InvariantResult::new("supercurv/table-relations", relations, tol.identity),
        InvariantResult::new("supercurv/vanishing-patterns", vanishing, 1e-10),
        InvariantResult::new("supercurv/extraction-roundtrip", roundtrip, tol.identity),
        InvariantResult::new("supercurv/a2a3-closed-form", a2a3, tol.identity),
        InvariantResult::new("supercurv/proposition-identities", prop, tol.identity),
        InvariantResult::new("supercurv/proposition-sensitivity", sensitivity, 0.0),
        with_note(InvariantResult::new(
            "supercurv/ricci-antisymmetry",
            ric_anti,
            tol.identity,
        )),
        with_note(InvariantResult::new(
            "supercurv/scal-vanishing",
            scal_worst,
            tol.identity,
        )),
        InvariantResult::new("supercurv/two-term-cancellation", cancel_worst, 1e-12),
        InvariantResult::new("supercurv/supertrace-expansion", expansion, 1e-10),
        InvariantResult::new("supercurv/scale-covariance", scale_cov, 0.0),
    ];
    (invariants, samples, norms)
}

/// The full suite for one evaluation point.
pub fn run_point(
    file: &ScenarioFile,
    point: &[f64],
) -> Result<(PointRun, Vec<InvariantResult>), String> {
    let scenario = file.scenario_at(point);
    let f = scenario.build_frame().map_err(|e| e.to_string())?;
    let tol = &file.tolerances;
    let seed = file.sampler.seed;
    let mut invariants = Vec::new();

    // frame structure
    invariants.push(InvariantResult::new(
        "chart/curvature-antisymmetry",
        f.curvature_antisymmetry_residual(),
        0.0,
    ));
    invariants.push(InvariantResult::new(
        "chart/base-first-bianchi",
        f.first_bianchi_residual(),
        tol.identity,
    ));

    // graded calculus over the scenario
    invariants.push(graded_omega_dlambda(&f));
    invariants.push(graded_closedness(&f));
    invariants.push(graded_degree_bookkeeping(&f));
    invariants.push(graded_nondegeneracy(&f));

    let parallel = f.check_nabla_h() <= koszul_core::superconn::PARALLEL_H_TOL;
    let mut run = PointRun {
        point: point.to_vec(),
        nabla_h_residual: f.check_nabla_h(),
        curvature_norm: frame::max_abs4(&f.r),
        forced: None,
        symmetry_residual: None,
        compatibility_residual: None,
        named_tensor_norms: None,
        scalar_samples: Vec::new(),
    };

    if parallel {
        let count = file.sampler.count.max(1);
        let data = sample_campaign(&f, seed, count)?;
        run.symmetry_residual = Some(
            data.tensors
                .iter()
                .map(|(_, t)| symmetry_predicate(t, &f).max())
                .fold(0.0, f64::max),
        );
        run.compatibility_residual = Some(
            data.tensors
                .iter()
                .map(|(_, t)| compatibility_predicate(t, &f).unwrap().max())
                .fold(0.0, f64::max),
        );
        invariants.extend(superconn_predicates(&f, &data));
        invariants.push(superconn_theorem_equivalence(&f, &data));
        let (inv, cert) = superconn_forced_vanishing(&f);
        invariants.push(inv);
        run.forced = cert;
        invariants.push(superconn_determinism(&f, seed));
        let (curv_inv, samples, norms) =
            supercurv_invariants(&f, &data, scenario.h_symmetry, tol);
        invariants.extend(curv_inv);
        run.scalar_samples = samples;
        run.named_tensor_norms = norms;
    }

    Ok((run, invariants))
}

/// Scenario-independent invariants, run once per report.
pub fn run_global(n: usize, seed: u64) -> Vec<InvariantResult> {
    vec![
        exterior_alternation(n),
        exterior_graded_commutativity(n),
        supermatrix_transpose_inverse(n, seed),
        supermatrix_supertrace_cyclicity(n, seed),
        chart_first_bianchi(seed),
        chart_metric_ricci_symmetry(seed),
        chart_symplectic_scalar_vanishing(seed, 6),
        graded_jacobi(seed),
    ]
}

/// Merge invariants from several points: same name, worst residual.
pub fn merge_invariants(lists: Vec<Vec<InvariantResult>>) -> Vec<InvariantResult> {
    let mut merged: Vec<InvariantResult> = Vec::new();
    for list in lists {
        for item in list {
            if let Some(existing) = merged.iter_mut().find(|m| m.name == item.name) {
                if item.residual > existing.residual {
                    *existing = item;
                }
            } else {
                merged.push(item);
            }
        }
    }
    merged
}
