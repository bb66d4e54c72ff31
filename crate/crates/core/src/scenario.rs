//! Scenario descriptions: closed-form chart tables for the bilinear form H
//! and the connection, an evaluation point, and generator policies. A
//! scenario evaluates to a [`PointFrame`] with exact derivative data.

use crate::chart::ChartFn;
use crate::error::{GeoError, Result};
use crate::frame::{self, t3, t4, t5, PointFrame, T3, T4};
use crate::linalg;
use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Declared symmetry class of H, used to select which assertions apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HSymmetry {
    Symmetric,
    Skew,
    Generic,
}

/// How the bilinear form H is specified.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HSpec {
    /// Chart tables, entries[i][j] = H(X_i)(X_j).
    Table { entries: Vec<Vec<ChartFn>> },
    /// H equals the metric table of the scenario.
    Metric,
    /// A constant matrix.
    Constant { entries: Vec<Vec<f64>> },
}

/// How the connection coefficients are specified.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GammaSpec {
    Zero,
    /// Chart tables, entries[i][j][k] = Γ^k_{ij}.
    Table { entries: Vec<Vec<Vec<ChartFn>>> },
    /// Levi-Civita connection of the scenario metric.
    LeviCivita,
    /// Seeded sample from the space of symmetric connections that make the
    /// constant H parallel; with `linear`, coefficients vary linearly in x
    /// within that space, so the sampled frames carry curvature.
    SolveParallelH { seed: u64, linear: bool },
    /// Seeded random constant symmetric coefficients (generally ∇H ≠ 0).
    RandomConstant { seed: u64, scale: f64 },
}

/// A full pointwise geometry scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeometryScenario {
    pub name: String,
    pub dimension: usize,
    pub h_symmetry: HSymmetry,
    pub point: Vec<f64>,
    pub h: HSpec,
    #[serde(default)]
    pub metric: Option<Vec<Vec<ChartFn>>>,
    pub gamma: GammaSpec,
}

fn check_tables_defined(tables: &[Vec<ChartFn>], x: &[f64]) -> Result<()> {
    for row in tables {
        for f in row {
            if !f.defined_at(x) {
                return Err(GeoError::OutsideChartDomain(x.to_vec()));
            }
        }
    }
    Ok(())
}

/// Evaluate a matrix of chart functions to (value, ∂, ∂∂) at a point.
pub fn eval_matrix_jets(tables: &[Vec<ChartFn>], x: &[f64]) -> (DMatrix<f64>, T3, T4) {
    let n = tables.len();
    let m = DMatrix::from_fn(n, n, |i, j| tables[i][j].eval(x));
    let mut dm = t3(n);
    let mut d2m = t4(n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let p = tables[i][j].partial(k);
                dm[k][i][j] = p.eval(x);
                for l in 0..n {
                    d2m[l][k][i][j] = p.partial(l).eval(x);
                }
            }
        }
    }
    (m, dm, d2m)
}

/// Sample a constant symmetric Γ that makes the constant matrix `h`
/// parallel. Returns the sampled tensor and the nullspace dimension of the
/// constraint system.
pub fn sample_parallel_gamma(
    h: &DMatrix<f64>,
    rng: &mut ChaCha8Rng,
) -> (T3, usize) {
    let n = h.nrows();
    // unknowns: Γ^q_{ki} with {k,i} unordered
    let mut pairs = Vec::new();
    for k in 0..n {
        for i in k..n {
            pairs.push((k, i));
        }
    }
    let unknowns = pairs.len() * n;
    let col = |pair_idx: usize, q: usize| pair_idx * n + q;
    // rows: for all (k,i,j): Σ_q Γ^q_{ki} H_qj + Γ^q_{kj} H_iq = 0
    let mut rows: Vec<f64> = Vec::new();
    let mut nrows = 0;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut row = vec![0.0; unknowns];
                for q in 0..n {
                    let p1 = pairs.iter().position(|&p| p == (k.min(i), k.max(i))).unwrap();
                    row[col(p1, q)] += h[(q, j)];
                    let p2 = pairs.iter().position(|&p| p == (k.min(j), k.max(j))).unwrap();
                    row[col(p2, q)] += h[(i, q)];
                }
                rows.extend_from_slice(&row);
                nrows += 1;
            }
        }
    }
    let a = DMatrix::from_row_slice(nrows, unknowns, &rows);
    let basis = linalg::nullspace(&a);
    let dim = basis.len();
    let mut x = DVector::zeros(unknowns);
    for v in &basis {
        x += v * rng.gen_range(-1.0..1.0);
    }
    let mut gamma = t3(n);
    for (pi, &(k, i)) in pairs.iter().enumerate() {
        for q in 0..n {
            gamma[k][i][q] = x[col(pi, q)];
            gamma[i][k][q] = x[col(pi, q)];
        }
    }
    (gamma, dim)
}

impl GeometryScenario {
    pub fn validate(&self) -> Result<()> {
        let n = self.dimension;
        if n < 1 || n > crate::exterior::MAX_GENERATORS {
            return Err(GeoError::InvalidScenario(format!(
                "dimension {n} outside 1..=6"
            )));
        }
        if self.point.len() != n {
            return Err(GeoError::InvalidScenario(format!(
                "point has {} coordinates, expected {n}",
                self.point.len()
            )));
        }
        let shape_ok = |rows: usize| rows == n;
        match &self.h {
            HSpec::Table { entries } => {
                if !shape_ok(entries.len()) || entries.iter().any(|r| r.len() != n) {
                    return Err(GeoError::InvalidScenario("H table shape".into()));
                }
            }
            HSpec::Constant { entries } => {
                if !shape_ok(entries.len()) || entries.iter().any(|r| r.len() != n) {
                    return Err(GeoError::InvalidScenario("H matrix shape".into()));
                }
            }
            HSpec::Metric => {
                if self.metric.is_none() {
                    return Err(GeoError::InvalidScenario(
                        "h.kind = metric requires a metric table".into(),
                    ));
                }
            }
        }
        if let Some(m) = &self.metric {
            if !shape_ok(m.len()) || m.iter().any(|r| r.len() != n) {
                return Err(GeoError::InvalidScenario("metric table shape".into()));
            }
        }
        match &self.gamma {
            GammaSpec::Table { entries } => {
                if entries.len() != n
                    || entries
                        .iter()
                        .any(|a| a.len() != n || a.iter().any(|b| b.len() != n))
                {
                    return Err(GeoError::InvalidScenario("gamma table shape".into()));
                }
            }
            GammaSpec::LeviCivita => {
                if self.metric.is_none() {
                    return Err(GeoError::InvalidScenario(
                        "gamma.kind = levi_civita requires a metric table".into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn h_tables(&self) -> Result<Vec<Vec<ChartFn>>> {
        let n = self.dimension;
        Ok(match &self.h {
            HSpec::Table { entries } => entries.clone(),
            HSpec::Metric => self.metric.clone().expect("validated"),
            HSpec::Constant { entries } => {
                let mut t = vec![vec![ChartFn::zero(); n]; n];
                for i in 0..n {
                    for j in 0..n {
                        t[i][j] = ChartFn::constant(entries[i][j]);
                    }
                }
                t
            }
        })
    }

    /// Evaluate the scenario to a pointwise frame with exact derivatives.
    pub fn build_frame(&self) -> Result<PointFrame> {
        self.validate()?;
        let n = self.dimension;
        let x = &self.point;
        let h_tables = self.h_tables()?;
        check_tables_defined(&h_tables, x)?;
        let (h, dh, d2h) = eval_matrix_jets(&h_tables, x);

        let (gamma, dgamma, d2gamma) = match &self.gamma {
            GammaSpec::Zero => (t3(n), t4(n), Some(t5(n))),
            GammaSpec::Table { entries } => {
                let mut gamma = t3(n);
                let mut dgamma = t4(n);
                let mut d2gamma = t5(n);
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            let f = &entries[i][j][k];
                            if !f.defined_at(x) {
                                return Err(GeoError::OutsideChartDomain(x.clone()));
                            }
                            gamma[i][j][k] = f.eval(x);
                            for m in 0..n {
                                let p = f.partial(m);
                                dgamma[m][i][j][k] = p.eval(x);
                                for l in 0..n {
                                    d2gamma[l][m][i][j][k] = p.partial(l).eval(x);
                                }
                            }
                        }
                    }
                }
                (gamma, dgamma, Some(d2gamma))
            }
            GammaSpec::LeviCivita => {
                let m_tables = self.metric.as_ref().expect("validated");
                check_tables_defined(m_tables, x)?;
                let (g, dg, d2g) = eval_matrix_jets(m_tables, x);
                let (gamma, dgamma) = frame::levi_civita(n, &g, &dg, &d2g)?;
                (gamma, dgamma, None)
            }
            GammaSpec::SolveParallelH { seed, linear } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let (a, _dim) = sample_parallel_gamma(&h, &mut rng);
                let mut gamma = a.clone();
                let mut dgamma = t4(n);
                if *linear {
                    for m in 0..n {
                        let (b, _) = sample_parallel_gamma(&h, &mut rng);
                        for i in 0..n {
                            for j in 0..n {
                                for k in 0..n {
                                    gamma[i][j][k] += x[m] * b[i][j][k];
                                    dgamma[m][i][j][k] = b[i][j][k];
                                }
                            }
                        }
                    }
                }
                (gamma, dgamma, Some(t5(n)))
            }
            GammaSpec::RandomConstant { seed, scale } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut gamma = t3(n);
                for i in 0..n {
                    for j in 0..=i {
                        for k in 0..n {
                            let v = scale * rng.gen_range(-1.0..1.0);
                            gamma[i][j][k] = v;
                            gamma[j][i][k] = v;
                        }
                    }
                }
                (gamma, t4(n), Some(t5(n)))
            }
        };

        PointFrame::new(n, h, dh, d2h, gamma, dgamma, d2gamma)
    }

    // ---- stock scenarios ------------------------------------------------

    /// Flat Euclidean space with the identity pairing.
    pub fn flat_euclidean(n: usize) -> GeometryScenario {
        let id: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        GeometryScenario {
            name: format!("flat-euclidean-{n}d"),
            dimension: n,
            h_symmetry: HSymmetry::Symmetric,
            point: vec![0.0; n],
            h: HSpec::Constant { entries: id },
            metric: None,
            gamma: GammaSpec::Zero,
        }
    }

    fn sphere_metric_tables() -> Vec<Vec<ChartFn>> {
        use crate::chart::Term;
        let sin2 = ChartFn(vec![Term {
            c: 1.0,
            pow: vec![],
            sin: vec![2],
            cos: vec![],
        }]);
        vec![
            vec![ChartFn::constant(1.0), ChartFn::zero()],
            vec![ChartFn::zero(), sin2],
        ]
    }

    /// Unit round 2-sphere in a polar chart, H = g, Levi-Civita connection.
    pub fn sphere(theta: f64, phi: f64) -> GeometryScenario {
        GeometryScenario {
            name: "sphere-metric-H".into(),
            dimension: 2,
            h_symmetry: HSymmetry::Symmetric,
            point: vec![theta, phi],
            h: HSpec::Metric,
            metric: Some(Self::sphere_metric_tables()),
            gamma: GammaSpec::LeviCivita,
        }
    }

    /// Unit round 3-sphere in hyperspherical coordinates (χ, θ, φ):
    /// g = diag(1, sin²χ, sin²χ sin²θ), H = g, Levi-Civita connection.
    /// The smallest symmetric-H frame whose insertion-insertion freedom is
    /// nontrivial.
    pub fn sphere3(chi: f64, theta: f64, phi: f64) -> GeometryScenario {
        use crate::chart::Term;
        let sin2_chi = ChartFn(vec![Term {
            c: 1.0,
            pow: vec![],
            sin: vec![2],
            cos: vec![],
        }]);
        let sin2_chi_sin2_theta = ChartFn(vec![Term {
            c: 1.0,
            pow: vec![],
            sin: vec![2, 2],
            cos: vec![],
        }]);
        let z = ChartFn::zero;
        let metric = vec![
            vec![ChartFn::constant(1.0), z(), z()],
            vec![z(), sin2_chi, z()],
            vec![z(), z(), sin2_chi_sin2_theta],
        ];
        GeometryScenario {
            name: "sphere3-metric-H".into(),
            dimension: 3,
            h_symmetry: HSymmetry::Symmetric,
            point: vec![chi, theta, phi],
            h: HSpec::Metric,
            metric: Some(metric),
            gamma: GammaSpec::LeviCivita,
        }
    }

    /// A curved frame with a generic parallel H: on the product of a round
    /// 2-sphere with a line, H is the metric plus `c` times the parallel
    /// area form of the sphere factor. Neither symmetric nor skew for
    /// c ≠ 0, yet ∇H = 0 with nonzero curvature.
    pub fn sphere_cylinder_generic(c: f64, theta: f64, phi: f64, z: f64) -> GeometryScenario {
        use crate::chart::Term;
        let sin2 = ChartFn(vec![Term {
            c: 1.0,
            pow: vec![],
            sin: vec![2],
            cos: vec![],
        }]);
        let zero = ChartFn::zero;
        let metric = vec![
            vec![ChartFn::constant(1.0), zero(), zero()],
            vec![zero(), sin2.clone(), zero()],
            vec![zero(), zero(), ChartFn::constant(1.0)],
        ];
        let area = ChartFn(vec![Term {
            c,
            pow: vec![],
            sin: vec![1],
            cos: vec![],
        }]);
        let neg_area = ChartFn(vec![Term {
            c: -c,
            pow: vec![],
            sin: vec![1],
            cos: vec![],
        }]);
        let h = vec![
            vec![ChartFn::constant(1.0), area, zero()],
            vec![neg_area, sin2, zero()],
            vec![zero(), zero(), ChartFn::constant(1.0)],
        ];
        GeometryScenario {
            name: "sphere-cylinder-generic-H".into(),
            dimension: 3,
            h_symmetry: HSymmetry::Generic,
            point: vec![theta, phi, z],
            h: HSpec::Table { entries: h },
            metric: Some(metric),
            gamma: GammaSpec::LeviCivita,
        }
    }

    /// The same sphere with the connection given by explicit chart tables,
    /// so second connection derivatives are available.
    pub fn sphere_tables(theta: f64, phi: f64) -> GeometryScenario {
        use crate::chart::Term;
        let n = 2;
        let mut entries = vec![vec![vec![ChartFn::zero(); n]; n]; n];
        // Γ^θ_{φφ} = −sinθ cosθ
        entries[1][1][0] = ChartFn(vec![Term {
            c: -1.0,
            pow: vec![],
            sin: vec![1],
            cos: vec![1],
        }]);
        // Γ^φ_{θφ} = Γ^φ_{φθ} = cot θ
        let cot = ChartFn(vec![Term {
            c: 1.0,
            pow: vec![],
            sin: vec![-1],
            cos: vec![1],
        }]);
        entries[0][1][1] = cot.clone();
        entries[1][0][1] = cot;
        GeometryScenario {
            name: "sphere-gamma-tables".into(),
            dimension: 2,
            h_symmetry: HSymmetry::Symmetric,
            point: vec![theta, phi],
            h: HSpec::Metric,
            metric: Some(Self::sphere_metric_tables()),
            gamma: GammaSpec::Table { entries },
        }
    }

    /// Random constant invertible H of the requested symmetry class plus a
    /// seeded curved connection that keeps H parallel.
    pub fn fedosov_constant_h(
        n: usize,
        symmetry: HSymmetry,
        seed: u64,
    ) -> Result<GeometryScenario> {
        let h = random_h(n, symmetry, seed)?;
        let entries: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| h[(i, j)]).collect())
            .collect();
        Ok(GeometryScenario {
            name: format!("fedosov-{symmetry:?}-{n}d-seed{seed}").to_lowercase(),
            dimension: n,
            h_symmetry: symmetry,
            point: (0..n).map(|k| 0.1 + 0.05 * k as f64).collect(),
            h: HSpec::Constant { entries },
            metric: None,
            gamma: GammaSpec::SolveParallelH { seed, linear: true },
        })
    }
}

/// Random invertible constant H of a given symmetry class.
pub fn random_h(n: usize, symmetry: HSymmetry, seed: u64) -> Result<DMatrix<f64>> {
    if symmetry == HSymmetry::Skew && n % 2 != 0 {
        return Err(GeoError::InvalidScenario(
            "skew H must have even dimension".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1));
    for _ in 0..64 {
        let raw = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let h = match symmetry {
            HSymmetry::Symmetric => {
                // SPD, comfortably invertible
                &raw * raw.transpose() + DMatrix::identity(n, n)
            }
            HSymmetry::Skew => (&raw - raw.transpose()) * 0.5 + standard_symplectic(n),
            HSymmetry::Generic => raw + DMatrix::identity(n, n) * 1.5,
        };
        if linalg::condition_number(&h) < 1e6 {
            return Ok(h);
        }
    }
    Err(GeoError::InvalidScenario(
        "failed to sample a well-conditioned H".into(),
    ))
}

/// The standard symplectic matrix [[0, I], [-I, 0]] (even n).
pub fn standard_symplectic(n: usize) -> DMatrix<f64> {
    let half = n / 2;
    DMatrix::from_fn(n, n, |i, j| {
        if i < half && j == i + half {
            1.0
        } else if i >= half && j + half == i {
            -1.0
        } else {
            0.0
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_scenario_builds() {
        let f = GeometryScenario::flat_euclidean(3).build_frame().unwrap();
        assert_eq!(frame::max_abs4(&f.r), 0.0);
        assert_eq!(f.check_nabla_h(), 0.0);
    }

    #[test]
    fn sphere_scenarios_agree() {
        let theta = 0.8;
        let a = GeometryScenario::sphere(theta, 0.2).build_frame().unwrap();
        let b = GeometryScenario::sphere_tables(theta, 0.2)
            .build_frame()
            .unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert!((a.gamma[i][j][k] - b.gamma[i][j][k]).abs() < 1e-12);
                    for m in 0..2 {
                        assert!((a.dgamma[m][i][j][k] - b.dgamma[m][i][j][k]).abs() < 1e-12);
                    }
                }
            }
        }
        assert!(b.d2gamma.is_some() && b.dr.is_some());
        assert!(a.check_nabla_h() < 1e-12);
        assert!(b.check_nabla_h() < 1e-12);
    }

    #[test]
    fn sphere_pole_is_outside_chart() {
        let s = GeometryScenario::sphere_tables(0.0, 0.0);
        assert!(matches!(
            s.build_frame(),
            Err(GeoError::OutsideChartDomain(_))
        ));
    }

    #[test]
    fn parallel_h_sampler_zero_for_symmetric_constant_h() {
        // the only symmetric connection parallelizing a constant metric is 0
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (gamma, dim) = sample_parallel_gamma(&h, &mut rng);
        assert_eq!(dim, 0);
        assert_eq!(frame::max_abs3(&gamma), 0.0);
    }

    #[test]
    fn parallel_h_sampler_skew_dimension() {
        // symplectic connections form a space of totally symmetric 3-tensors
        for n in [2usize, 4] {
            let h = standard_symplectic(n);
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            let (gamma, dim) = sample_parallel_gamma(&h, &mut rng);
            assert_eq!(dim, n * (n + 1) * (n + 2) / 6, "n={n}");
            // residual of the compatibility system at the sample
            let mut worst = 0.0f64;
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let mut v = 0.0;
                        for q in 0..n {
                            v += gamma[k][i][q] * h[(q, j)] + gamma[k][j][q] * h[(i, q)];
                        }
                        worst = worst.max(v.abs());
                    }
                }
            }
            assert!(worst < 1e-10);
        }
    }

    #[test]
    fn sphere3_has_parallel_h_and_scalar_six() {
        let f = GeometryScenario::sphere3(0.9, 0.7, 0.3).build_frame().unwrap();
        assert!(f.check_nabla_h() < 1e-10);
        let (_, s) =
            frame::ricci_and_scalar(&f, &f.h.clone(), &f.dh.clone(), crate::frame::FormKind::Metric)
                .unwrap();
        assert!((s - 6.0).abs() < 1e-9, "s={s}");
    }

    #[test]
    fn sphere_cylinder_generic_h_is_parallel_and_curved() {
        let f = GeometryScenario::sphere_cylinder_generic(0.7, 0.9, 0.4, 0.2)
            .build_frame()
            .unwrap();
        assert!(f.check_nabla_h() < 1e-10);
        assert!(frame::max_abs4(&f.r) > 0.1);
        // H is genuinely generic: both symmetric and skew parts invertible-ish
        let sym = (&f.h + f.h.transpose()).amax();
        let skew = (&f.h - f.h.transpose()).amax();
        assert!(sym > 0.5 && skew > 0.5);
    }

    #[test]
    fn fedosov_scenarios_have_parallel_h_and_curvature() {
        for (n, sym) in [
            (2, HSymmetry::Skew),
            (4, HSymmetry::Skew),
            (3, HSymmetry::Generic),
        ] {
            let sc = GeometryScenario::fedosov_constant_h(n, sym, 11).unwrap();
            let f = sc.build_frame().unwrap();
            assert!(f.check_nabla_h() < 1e-9, "n={n} {sym:?}");
            if sym == HSymmetry::Skew {
                assert!(frame::max_abs4(&f.r) > 1e-6, "expected curvature for {sym:?}");
            }
        }
    }

    #[test]
    fn scenario_roundtrips_through_json() {
        let sc = GeometryScenario::sphere(0.7, 0.1);
        let s = serde_json::to_string(&sc).unwrap();
        let back: GeometryScenario = serde_json::from_str(&s).unwrap();
        let fa = sc.build_frame().unwrap();
        let fb = back.build_frame().unwrap();
        assert!((fa.h.clone() - fb.h.clone()).amax() == 0.0);
    }
}
