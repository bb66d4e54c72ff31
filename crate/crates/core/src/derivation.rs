//! Graded derivations of the superfunction algebra at a point, expanded
//! over the basic derivations: for each frame index j there is an even
//! generator (the covariant derivative along X_j, acting on forms) and an
//! odd generator (insertion of X_j). A derivation is a sum of these with
//! exterior-algebra coefficients.
//!
//! Two coefficient semantics coexist. Plain [`Derivation`] values treat
//! their coefficients as frame-constant fields; that is exact for basic
//! inputs and for the frame coforms themselves. [`JDerivation`] carries
//! first-order jets of the coefficients so that compositions and nested
//! brackets differentiate them exactly.

use crate::error::{GeoError, Result};
use crate::exterior::{Ext, ExtJet1, ExtJet2};
use crate::frame::PointFrame;

/// The two kinds of basic derivation attached to a frame index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasicKind {
    /// Covariant derivative along a frame vector; even, degree 0.
    Nabla,
    /// Insertion of a frame vector; odd, degree -1.
    Insert,
}

impl BasicKind {
    /// Z-degree of the basic derivation.
    pub fn degree(self) -> i32 {
        match self {
            BasicKind::Nabla => 0,
            BasicKind::Insert => -1,
        }
    }

    pub fn parity(self) -> usize {
        match self {
            BasicKind::Nabla => 0,
            BasicKind::Insert => 1,
        }
    }
}

/// A basic derivation: kind plus frame index.
pub type Basic = (BasicKind, usize);

pub fn parity_of(p: usize) -> f64 {
    if p % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Frozen action of the covariant derivative along X_k on an exterior
/// value: only the connection part acts, coefficients are treated as
/// frame-constant. Sends e^m to -Γ^m_{kl} e^l.
pub fn nabla_frozen(frame: &PointFrame, k: usize, a: &Ext) -> Ext {
    let n = frame.n;
    let mut m = vec![vec![0.0; n]; n];
    for gm in 0..n {
        for l in 0..n {
            m[gm][l] = -frame.gamma[k][l][gm];
        }
    }
    a.endo_action(&m)
}

/// Same as [`nabla_frozen`] but with the connection differentiated in
/// direction `dir`: sends e^m to -∂_dir Γ^m_{kl} e^l.
fn nabla_frozen_deriv(frame: &PointFrame, dir: usize, k: usize, a: &Ext) -> Ext {
    let n = frame.n;
    let mut m = vec![vec![0.0; n]; n];
    for gm in 0..n {
        for l in 0..n {
            m[gm][l] = -frame.dgamma[dir][k][l][gm];
        }
    }
    a.endo_action(&m)
}

/// Apply a basic derivation to a frozen (frame-constant) value.
pub fn basic_apply(frame: &PointFrame, b: Basic, a: &Ext) -> Ext {
    match b.0 {
        BasicKind::Nabla => nabla_frozen(frame, b.1, a),
        BasicKind::Insert => a.insert(b.1),
    }
}

/// Apply a basic derivation to a first-order jet, producing the exact
/// value at the point.
pub fn basic_apply_j1(frame: &PointFrame, b: Basic, a: &ExtJet1) -> Ext {
    match b.0 {
        BasicKind::Nabla => &a.grad[b.1] + &nabla_frozen(frame, b.1, &a.val),
        BasicKind::Insert => a.val.insert(b.1),
    }
}

/// Apply a basic derivation to a second-order jet, keeping one jet order.
pub fn basic_apply_j2(frame: &PointFrame, b: Basic, a: &ExtJet2) -> ExtJet1 {
    match b.0 {
        BasicKind::Nabla => {
            let k = b.1;
            let val = &a.grad[k] + &nabla_frozen(frame, k, &a.val);
            let n = frame.n;
            let mut grad = Vec::with_capacity(n);
            for m in 0..n {
                let mut g = &a.hess[m][k] + &nabla_frozen(frame, k, &a.grad[m]);
                g.add_assign_scaled(&nabla_frozen_deriv(frame, m, k, &a.val), 1.0);
                grad.push(g);
            }
            ExtJet1 { val, grad }
        }
        BasicKind::Insert => a.insert(b.1).truncate(),
    }
}

/// A derivation expanded over the basic derivations with exterior
/// coefficients, all at a single point.
#[derive(Debug, Clone)]
pub struct Derivation {
    pub n: usize,
    pub nabla: Vec<Ext>,
    pub insert: Vec<Ext>,
}

impl Derivation {
    pub fn zero(n: usize) -> Self {
        Derivation {
            n,
            nabla: vec![Ext::zero(n); n],
            insert: vec![Ext::zero(n); n],
        }
    }

    pub fn basic(n: usize, b: Basic) -> Self {
        let mut d = Derivation::zero(n);
        match b.0 {
            BasicKind::Nabla => d.nabla[b.1] = Ext::scalar(n, 1.0),
            BasicKind::Insert => d.insert[b.1] = Ext::scalar(n, 1.0),
        }
        d
    }

    pub fn coeff(&self, b: Basic) -> &Ext {
        match b.0 {
            BasicKind::Nabla => &self.nabla[b.1],
            BasicKind::Insert => &self.insert[b.1],
        }
    }

    pub fn coeff_mut(&mut self, b: Basic) -> &mut Ext {
        match b.0 {
            BasicKind::Nabla => &mut self.nabla[b.1],
            BasicKind::Insert => &mut self.insert[b.1],
        }
    }

    pub fn add_assign_scaled(&mut self, other: &Derivation, s: f64) {
        for j in 0..self.n {
            self.nabla[j].add_assign_scaled(&other.nabla[j], s);
            self.insert[j].add_assign_scaled(&other.insert[j], s);
        }
    }

    pub fn max_abs(&self) -> f64 {
        let a = self.nabla.iter().fold(0.0f64, |m, c| m.max(c.max_abs()));
        self.insert.iter().fold(a, |m, c| m.max(c.max_abs()))
    }

    /// Z-degree of a homogeneous derivation: coefficients of even basics
    /// carry their own degree, coefficients of odd basics their degree
    /// minus one. `None` for mixed or zero derivations.
    pub fn degree(&self, tol: f64) -> Option<i32> {
        let mut deg: Option<i32> = None;
        let mut push = |d: i32| -> bool {
            match deg {
                None => {
                    deg = Some(d);
                    true
                }
                Some(q) => q == d,
            }
        };
        for j in 0..self.n {
            for p in 0..=self.n {
                if !self.nabla[j].component(p).is_zero(tol) && !push(p as i32) {
                    return None;
                }
                if !self.insert[j].component(p).is_zero(tol) && !push(p as i32 - 1) {
                    return None;
                }
            }
        }
        deg
    }

    /// Frozen action on an exterior value (coefficients and the argument
    /// are treated as frame-constant fields).
    pub fn apply(&self, frame: &PointFrame, a: &Ext) -> Result<Ext> {
        if a.n() != self.n {
            return Err(GeoError::DimensionMismatch(a.n(), self.n));
        }
        let mut out = Ext::zero(self.n);
        for j in 0..self.n {
            let t = self
                .nabla[j]
                .wedge(&nabla_frozen(frame, j, a))?;
            out.add_assign_scaled(&t, 1.0);
            let t = self.insert[j].wedge(&a.insert(j))?;
            out.add_assign_scaled(&t, 1.0);
        }
        Ok(out)
    }

    /// Jet-aware action on a first-order jet.
    pub fn apply_j1(&self, frame: &PointFrame, a: &ExtJet1) -> Result<Ext> {
        let mut out = Ext::zero(self.n);
        for j in 0..self.n {
            let t = self
                .nabla[j]
                .wedge(&basic_apply_j1(frame, (BasicKind::Nabla, j), a))?;
            out.add_assign_scaled(&t, 1.0);
            let t = self.insert[j].wedge(&a.val.insert(j))?;
            out.add_assign_scaled(&t, 1.0);
        }
        Ok(out)
    }
}

/// A derivation whose coefficients carry first-order jets.
#[derive(Debug, Clone)]
pub struct JDerivation {
    pub n: usize,
    pub nabla: Vec<ExtJet1>,
    pub insert: Vec<ExtJet1>,
}

impl JDerivation {
    pub fn zero(n: usize) -> Self {
        JDerivation {
            n,
            nabla: vec![ExtJet1::zero(n); n],
            insert: vec![ExtJet1::zero(n); n],
        }
    }

    /// Lift a plain derivation, declaring its coefficients frame-constant.
    pub fn lift(d: &Derivation) -> Self {
        JDerivation {
            n: d.n,
            nabla: d.nabla.iter().map(|c| ExtJet1::constant(c.clone())).collect(),
            insert: d.insert.iter().map(|c| ExtJet1::constant(c.clone())).collect(),
        }
    }

    pub fn basic(n: usize, b: Basic) -> Self {
        JDerivation::lift(&Derivation::basic(n, b))
    }

    pub fn values(&self) -> Derivation {
        Derivation {
            n: self.n,
            nabla: self.nabla.iter().map(|c| c.val.clone()).collect(),
            insert: self.insert.iter().map(|c| c.val.clone()).collect(),
        }
    }

    pub fn coeff(&self, b: Basic) -> &ExtJet1 {
        match b.0 {
            BasicKind::Nabla => &self.nabla[b.1],
            BasicKind::Insert => &self.insert[b.1],
        }
    }

    pub fn coeff_mut(&mut self, b: Basic) -> &mut ExtJet1 {
        match b.0 {
            BasicKind::Nabla => &mut self.nabla[b.1],
            BasicKind::Insert => &mut self.insert[b.1],
        }
    }

    pub fn add_assign_scaled(&mut self, other: &JDerivation, s: f64) {
        for j in 0..self.n {
            self.nabla[j].add_assign_scaled(&other.nabla[j], s);
            self.insert[j].add_assign_scaled(&other.insert[j], s);
        }
    }
}

pub const ALL_KINDS: [BasicKind; 2] = [BasicKind::Nabla, BasicKind::Insert];

/// Iterate over all 2n basic derivations of a frame.
pub fn basics(n: usize) -> impl Iterator<Item = Basic> {
    ALL_KINDS
        .into_iter()
        .flat_map(move |k| (0..n).map(move |j| (k, j)))
}

/// Structural bracket of two basic derivations, with coefficient jets.
///
/// The table is
///   [insert, insert] = 0
///   [nabla_i, insert_j] = Γ^m_{ij} insert_m
///   [nabla_i, nabla_j] = [X_i,X_j]^m nabla_m − R^m_{ijl} e^l insert_m
/// where the sign of the curvature-insertion term is the one under which
/// applying both sides to test forms agrees (see the operator oracle test).
pub fn bracket_basic_j(frame: &PointFrame, b1: Basic, b2: Basic) -> Result<JDerivation> {
    let n = frame.n;
    let mut out = JDerivation::zero(n);
    match (b1.0, b2.0) {
        (BasicKind::Insert, BasicKind::Insert) => {}
        (BasicKind::Nabla, BasicKind::Insert) => {
            let (i, j) = (b1.1, b2.1);
            for m in 0..n {
                let mut c = ExtJet1::zero(n);
                c.val = Ext::scalar(n, frame.gamma[i][j][m]);
                for dir in 0..n {
                    c.grad[dir] = Ext::scalar(n, frame.dgamma[dir][i][j][m]);
                }
                out.insert[m] = c;
            }
        }
        (BasicKind::Insert, BasicKind::Nabla) => {
            // [i_X, ∇_Y] = −[∇_Y, i_X] (the parity product is even)
            let sub = bracket_basic_j(frame, b2, b1)?;
            out.add_assign_scaled(&sub, -1.0);
        }
        (BasicKind::Nabla, BasicKind::Nabla) => {
            let (i, j) = (b1.1, b2.1);
            for m in 0..n {
                let mut c = ExtJet1::zero(n);
                c.val = Ext::scalar(n, frame.frame_brackets[i][j][m]);
                out.nabla[m] = c;
            }
            for m in 0..n {
                let mut val = Ext::zero(n);
                for l in 0..n {
                    val.add_assign_scaled(&Ext::generator(n, l), -frame.r[i][j][l][m]);
                }
                let mut grad = vec![Ext::zero(n); n];
                if let Some(dr) = &frame.dr {
                    for (dir, g) in grad.iter_mut().enumerate() {
                        for l in 0..n {
                            g.add_assign_scaled(&Ext::generator(n, l), -dr[dir][i][j][l][m]);
                        }
                    }
                }
                out.insert[m] = ExtJet1 { val, grad };
            }
        }
    }
    Ok(out)
}

/// Same table at value level.
pub fn bracket_basic(frame: &PointFrame, b1: Basic, b2: Basic) -> Result<Derivation> {
    Ok(bracket_basic_j(frame, b1, b2)?.values())
}

/// Graded bracket of two derivations with jet coefficients, re-expanded
/// over the basic derivations. For homogeneous terms D1 = α·b, D2 = β·c,
///   [α b, β c] = α∧b(β)·c + (−1)^{(|α|+|b|)|β|} (β∧α)·[b,c]
///                − (−1)^{(|α|+|b|)(|β|+|c|)} (β∧c(α))·b,
/// extended bilinearly over the degree components of the coefficients.
pub fn bracket_j(frame: &PointFrame, d1: &JDerivation, d2: &JDerivation) -> Result<Derivation> {
    let n = frame.n;
    let mut out = Derivation::zero(n);
    let component_j = |jet: &ExtJet1, p: usize| ExtJet1 {
        val: jet.val.component(p),
        grad: jet.grad.iter().map(|g| g.component(p)).collect(),
    };
    for b in basics(n) {
        let alpha = d1.coeff(b);
        if alpha.max_abs() == 0.0 {
            continue;
        }
        for c in basics(n) {
            let beta = d2.coeff(c);
            if beta.max_abs() == 0.0 {
                continue;
            }
            // term 1: α ∧ b(β) · c
            let b_beta = basic_apply_j1(frame, b, beta);
            if b_beta.max_abs() > 0.0 {
                let t = alpha.val.wedge(&b_beta)?;
                out.coeff_mut(c).add_assign_scaled(&t, 1.0);
            }
            // term 2: (−1)^{(|α|+|b|)|β|} (β∧α) · [b,c]
            let table = bracket_basic(frame, b, c)?;
            if table.max_abs() > 0.0 {
                for pa in 0..=n {
                    let alpha_p = alpha.val.component(pa);
                    if alpha_p.max_abs() == 0.0 {
                        continue;
                    }
                    for pb in 0..=n {
                        let beta_p = beta.val.component(pb);
                        if beta_p.max_abs() == 0.0 {
                            continue;
                        }
                        let sign2 = parity_of((pa + b.0.parity()) * pb);
                        let ba = beta_p.wedge(&alpha_p)?;
                        for e in basics(n) {
                            let t = ba.wedge(table.coeff(e))?;
                            out.coeff_mut(e).add_assign_scaled(&t, sign2);
                        }
                    }
                }
            }
            // term 3: −(−1)^{(|α|+|b|)(|β|+|c|)} (β ∧ c(α)) · b
            for pa in 0..=n {
                let alpha_p = component_j(alpha, pa);
                if alpha_p.max_abs() == 0.0 {
                    continue;
                }
                let c_alpha = basic_apply_j1(frame, c, &alpha_p);
                if c_alpha.max_abs() == 0.0 {
                    continue;
                }
                for pb in 0..=n {
                    let beta_p = beta.val.component(pb);
                    if beta_p.max_abs() == 0.0 {
                        continue;
                    }
                    let sign3 = parity_of((pa + b.0.parity()) * (pb + c.0.parity()));
                    let t = beta_p.wedge(&c_alpha)?;
                    out.coeff_mut(b).add_assign_scaled(&t, -sign3);
                }
            }
        }
    }
    Ok(out)
}

/// Graded bracket of two derivations whose coefficients are frame-constant.
pub fn graded_bracket(
    frame: &PointFrame,
    d1: &Derivation,
    d2: &Derivation,
) -> Result<Derivation> {
    bracket_j(frame, &JDerivation::lift(d1), &JDerivation::lift(d2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{t3, t4, t5};
    use nalgebra::DMatrix;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_gamma_frame(seed: u64, n: usize) -> PointFrame {
        // Γ linear in x with random coefficients; exact second derivatives 0
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let mut gamma = t3(n);
        let mut dgamma = t4(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let a = rng.gen_range(-1.0..1.0);
                    let mut val = a;
                    for m in 0..n {
                        let b = rng.gen_range(-1.0..1.0);
                        dgamma[m][i][j][k] = b;
                        val += b * x[m];
                    }
                    gamma[i][j][k] = val;
                }
            }
        }
        // record only the point data; dgamma rows already filled
        PointFrame::new(
            n,
            DMatrix::identity(n, n),
            t3(n),
            t4(n),
            gamma,
            dgamma,
            Some(t5(n)),
        )
        .unwrap()
    }

    #[test]
    fn insertion_applied_to_generator() {
        let f = PointFrame::flat(2, DMatrix::identity(2, 2)).unwrap();
        let d = Derivation::basic(2, (BasicKind::Insert, 0));
        let r = d.apply(&f, &Ext::generator(2, 0)).unwrap();
        assert_eq!(r.scalar_part(), 1.0);
    }

    #[test]
    fn nabla_applied_to_constant_is_zero() {
        let f = random_gamma_frame(1, 3);
        let d = Derivation::basic(3, (BasicKind::Nabla, 0));
        let r = d.apply(&f, &Ext::scalar(3, 5.0)).unwrap();
        assert!(r.is_zero(0.0));
    }

    #[test]
    fn nabla_applied_to_coform_contracts_gamma() {
        // ∇_{X_1} e^2 = −Γ^2_{1k} e^k
        let f = random_gamma_frame(2, 3);
        let d = Derivation::basic(3, (BasicKind::Nabla, 0));
        let r = d.apply(&f, &Ext::generator(3, 1)).unwrap();
        for k in 0..3 {
            let expect = -f.gamma[0][k][1];
            assert!((r.coeff(1 << k) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn apply_dimension_mismatch() {
        let f = PointFrame::flat(2, DMatrix::identity(2, 2)).unwrap();
        let d = Derivation::basic(2, (BasicKind::Nabla, 0));
        assert!(d.apply(&f, &Ext::scalar(3, 1.0)).is_err());
    }

    #[test]
    fn apply_satisfies_graded_leibniz() {
        // D(a∧b) = D(a)∧b + (−1)^{|D||a|} a∧D(b) for homogeneous a
        let f = random_gamma_frame(3, 3);
        let n = 3;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for b in basics(n) {
            let d = Derivation::basic(n, b);
            for ma in 0..(1usize << n) {
                let mut a = Ext::basis(n, ma);
                a = a.scale(rng.gen_range(0.5..1.5));
                let mut bb = Ext::zero(n);
                for mb in 0..(1usize << n) {
                    bb.set_coeff(mb, rng.gen_range(-1.0..1.0));
                }
                let lhs = d.apply(&f, &a.wedge(&bb).unwrap()).unwrap();
                let pa = (ma as u32).count_ones() as usize;
                let sign = parity_of(b.0.parity() * pa);
                let rhs = &d.apply(&f, &a).unwrap().wedge(&bb).unwrap()
                    + &a.wedge(&d.apply(&f, &bb).unwrap()).unwrap().scale(sign);
                assert!((&lhs - &rhs).is_zero(1e-12));
            }
        }
    }

    #[test]
    fn bracket_of_insertions_vanishes() {
        let f = random_gamma_frame(5, 2);
        let b = bracket_basic(&f, (BasicKind::Insert, 0), (BasicKind::Insert, 1)).unwrap();
        assert_eq!(b.max_abs(), 0.0);
    }

    #[test]
    fn bracket_nabla_insert_flat_vanishes() {
        let f = PointFrame::flat(2, DMatrix::identity(2, 2)).unwrap();
        let b = bracket_basic(&f, (BasicKind::Nabla, 0), (BasicKind::Insert, 1)).unwrap();
        assert_eq!(b.max_abs(), 0.0);
    }

    #[test]
    fn bracket_nabla_insert_is_covariant_insertion() {
        let f = random_gamma_frame(6, 3);
        let b = bracket_basic(&f, (BasicKind::Nabla, 0), (BasicKind::Insert, 2)).unwrap();
        for m in 0..3 {
            assert!((b.insert[m].scalar_part() - f.gamma[0][2][m]).abs() < 1e-14);
            assert!(b.nabla[m].is_zero(0.0));
        }
    }

    /// Operator oracle: the bracket table must agree with the actual graded
    /// commutator of the operators, applied to every basis form with exact
    /// first derivatives tracked through the composition.
    #[test]
    fn bracket_table_matches_operator_commutator() {
        for seed in [7u64, 8, 9] {
            for n in 2..=3 {
                let f = random_gamma_frame(seed, n);
                for i in 0..n {
                    for j in 0..n {
                        for mask in 0..(1usize << n) {
                            let a2 = ExtJet2 {
                                val: Ext::basis(n, mask),
                                grad: vec![Ext::zero(n); n],
                                hess: vec![vec![Ext::zero(n); n]; n],
                            };
                            // [∇_i, ∇_j] via composition of jet applications
                            let ni = (BasicKind::Nabla, i);
                            let nj = (BasicKind::Nabla, j);
                            let lhs = &basic_apply_j1(&f, ni, &basic_apply_j2(&f, nj, &a2))
                                - &basic_apply_j1(&f, nj, &basic_apply_j2(&f, ni, &a2));
                            let table = bracket_basic(&f, ni, nj).unwrap();
                            let rhs = table.apply(&f, &Ext::basis(n, mask)).unwrap();
                            assert!(
                                (&lhs - &rhs).is_zero(1e-10),
                                "n={n} i={i} j={j} mask={mask:b}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn bracket_on_sphere_frame_matches_operator() {
        // [∇_θ, ∇_φ] on the round sphere equals the curvature insertion
        let frame = crate::scenario::GeometryScenario::sphere_tables(0.9, 0.2)
            .build_frame()
            .unwrap();
        let n = 2;
        for mask in 0..(1usize << n) {
            let a2 = ExtJet2 {
                val: Ext::basis(n, mask),
                grad: vec![Ext::zero(n); n],
                hess: vec![vec![Ext::zero(n); n]; n],
            };
            let ni = (BasicKind::Nabla, 0);
            let nj = (BasicKind::Nabla, 1);
            let lhs = &basic_apply_j1(&frame, ni, &basic_apply_j2(&frame, nj, &a2))
                - &basic_apply_j1(&frame, nj, &basic_apply_j2(&frame, ni, &a2));
            let table = bracket_basic(&frame, ni, nj).unwrap();
            let rhs = table.apply(&frame, &Ext::basis(n, mask)).unwrap();
            assert!((&lhs - &rhs).is_zero(1e-9));
            // nonzero somewhere: the sphere has curvature
        }
        let table = bracket_basic(&frame, (BasicKind::Nabla, 0), (BasicKind::Nabla, 1)).unwrap();
        assert!(table.max_abs() > 1e-3);
    }

    #[test]
    fn graded_jacobi_identity_on_basic_triples() {
        // (−1)^{|a||c|}[a,[b,c]] + (−1)^{|b||a|}[b,[c,a]] + (−1)^{|c||b|}[c,[a,b]] = 0
        let frame = crate::scenario::GeometryScenario::sphere_tables(0.7, 0.2)
            .build_frame()
            .unwrap();
        let n = 2;
        let all: Vec<Basic> = basics(n).collect();
        for &a in &all {
            for &b in &all {
                for &c in &all {
                    let pa = a.0.parity();
                    let pb = b.0.parity();
                    let pc = c.0.parity();
                    let t1 = bracket_j(
                        &frame,
                        &JDerivation::basic(n, a),
                        &bracket_basic_j(&frame, b, c).unwrap(),
                    )
                    .unwrap();
                    let t2 = bracket_j(
                        &frame,
                        &JDerivation::basic(n, b),
                        &bracket_basic_j(&frame, c, a).unwrap(),
                    )
                    .unwrap();
                    let t3 = bracket_j(
                        &frame,
                        &JDerivation::basic(n, c),
                        &bracket_basic_j(&frame, a, b).unwrap(),
                    )
                    .unwrap();
                    let mut sum = Derivation::zero(n);
                    sum.add_assign_scaled(&t1, parity_of(pa * pc));
                    sum.add_assign_scaled(&t2, parity_of(pb * pa));
                    sum.add_assign_scaled(&t3, parity_of(pc * pb));
                    assert!(
                        sum.max_abs() < 1e-9,
                        "jacobi failed for {a:?},{b:?},{c:?}: {}",
                        sum.max_abs()
                    );
                }
            }
        }
    }

    #[test]
    fn degree_bookkeeping() {
        let n = 3;
        let mut d = Derivation::zero(n);
        d.nabla[0] = Ext::generator(n, 1); // degree 1 coefficient on ∇: degree 1
        d.insert[2] = Ext::basis(n, 0b011); // degree 2 coefficient on i: degree 1
        assert_eq!(d.degree(1e-14), Some(1));
        d.insert[0] = Ext::scalar(n, 1.0); // degree −1 term: now mixed
        assert_eq!(d.degree(1e-14), None);
    }
}
