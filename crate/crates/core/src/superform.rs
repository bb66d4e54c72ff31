//! Graded one- and two-forms on the derivation module at a point: the odd
//! potential one-form built from H, the odd symplectic two-form it
//! differentiates to, and the graded exterior differential on degrees
//! zero through two.
//!
//! Pairings are stored against the basic derivations with first-order jets
//! so the differential can be evaluated exactly. Module linearity is
//!   <α D1, D2; ω> = α ∧ <D1, D2; ω>
//!   <D1, α D2; ω> = (−1)^{|α||D1|} α ∧ <D1, D2; ω>.

use crate::derivation::{
    basic_apply_j1, basic_apply_j2, basics, bracket_basic, bracket_basic_j, parity_of, Basic,
    BasicKind, Derivation,
};
use crate::error::Result;
use crate::exterior::{Ext, ExtJet1, ExtJet2};
use crate::frame::PointFrame;
use crate::supermatrix::{Parity, SuperMatrix};
use nalgebra::DMatrix;

/// An odd one-form given by its pairings with the basic derivations,
/// carried to second jet order.
#[derive(Debug, Clone)]
pub struct SuperOneForm {
    pub n: usize,
    pub nabla: Vec<ExtJet2>,
    pub insert: Vec<ExtJet2>,
}

impl SuperOneForm {
    pub fn pair_basic(&self, b: Basic) -> &ExtJet2 {
        match b.0 {
            BasicKind::Nabla => &self.nabla[b.1],
            BasicKind::Insert => &self.insert[b.1],
        }
    }

    /// Value pairing with a coefficiented derivation (left linear).
    pub fn pair(&self, d: &Derivation) -> Result<Ext> {
        let mut out = Ext::zero(self.n);
        for b in basics(self.n) {
            let t = d.coeff(b).wedge(&self.pair_basic(b).val)?;
            out.add_assign_scaled(&t, 1.0);
        }
        Ok(out)
    }
}

/// The odd potential one-form of H: it pairs the covariant-derivative
/// generators to the rows of H and annihilates insertions. Independent of
/// the connection.
pub fn lambda_h(frame: &PointFrame) -> SuperOneForm {
    let n = frame.n;
    let mut nabla = Vec::with_capacity(n);
    for i in 0..n {
        let mut jet = ExtJet2::zero(n);
        for j in 0..n {
            let e = Ext::generator(n, j);
            jet.val.add_assign_scaled(&e, frame.h[(i, j)]);
            for k in 0..n {
                jet.grad[k].add_assign_scaled(&e, frame.dh[k][i][j]);
                for l in 0..n {
                    jet.hess[k][l].add_assign_scaled(&e, frame.d2h[k][l][i][j]);
                }
            }
        }
        nabla.push(jet);
    }
    SuperOneForm {
        n,
        nabla,
        insert: vec![ExtJet2::zero(n); n],
    }
}

/// An odd two-form given by its pairings with ordered pairs of basic
/// derivations, carried to first jet order.
#[derive(Debug, Clone)]
pub struct SuperTwoForm {
    pub n: usize,
    pub parity: Parity,
    pub nn: Vec<Vec<ExtJet1>>,
    pub ni: Vec<Vec<ExtJet1>>,
    pub in_: Vec<Vec<ExtJet1>>,
    pub ii: Vec<Vec<ExtJet1>>,
}

impl SuperTwoForm {
    pub fn zero(n: usize, parity: Parity) -> Self {
        let blk = vec![vec![ExtJet1::zero(n); n]; n];
        SuperTwoForm {
            n,
            parity,
            nn: blk.clone(),
            ni: blk.clone(),
            in_: blk.clone(),
            ii: blk,
        }
    }

    pub fn pair_basic(&self, b1: Basic, b2: Basic) -> &ExtJet1 {
        match (b1.0, b2.0) {
            (BasicKind::Nabla, BasicKind::Nabla) => &self.nn[b1.1][b2.1],
            (BasicKind::Nabla, BasicKind::Insert) => &self.ni[b1.1][b2.1],
            (BasicKind::Insert, BasicKind::Nabla) => &self.in_[b1.1][b2.1],
            (BasicKind::Insert, BasicKind::Insert) => &self.ii[b1.1][b2.1],
        }
    }

    fn pair_basic_mut(&mut self, b1: Basic, b2: Basic) -> &mut ExtJet1 {
        match (b1.0, b2.0) {
            (BasicKind::Nabla, BasicKind::Nabla) => &mut self.nn[b1.1][b2.1],
            (BasicKind::Nabla, BasicKind::Insert) => &mut self.ni[b1.1][b2.1],
            (BasicKind::Insert, BasicKind::Nabla) => &mut self.in_[b1.1][b2.1],
            (BasicKind::Insert, BasicKind::Insert) => &mut self.ii[b1.1][b2.1],
        }
    }

    /// Value pairing of two coefficiented derivations:
    /// <α b, β c> = (−1)^{|β|(|α|+|b|)} β∧α∧<b,c>.
    pub fn pair(&self, d1: &Derivation, d2: &Derivation) -> Result<Ext> {
        let n = self.n;
        let mut out = Ext::zero(n);
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
                let base = &self.pair_basic(b, c).val;
                if base.max_abs() == 0.0 {
                    continue;
                }
                for pa in 0..=n {
                    let ap = alpha.component(pa);
                    if ap.max_abs() == 0.0 {
                        continue;
                    }
                    for pb in 0..=n {
                        let bp = beta.component(pb);
                        if bp.max_abs() == 0.0 {
                            continue;
                        }
                        let sign = parity_of(pb * (pa + b.0.parity()));
                        let t = bp.wedge(&ap)?.wedge(base)?;
                        out.add_assign_scaled(&t, sign);
                    }
                }
            }
        }
        Ok(out)
    }

    /// The scalar (degree-0) blocks of the pairings as a supermatrix.
    pub fn scalar_supermatrix(&self) -> SuperMatrix {
        let n = self.n;
        let take = |blk: &Vec<Vec<ExtJet1>>| {
            DMatrix::from_fn(n, n, |i, j| blk[i][j].val.scalar_part())
        };
        SuperMatrix {
            a: take(&self.nn),
            b: take(&self.ni),
            c: take(&self.in_),
            d: take(&self.ii),
            parity: match self.parity {
                Parity::Odd => Parity::Odd,
                Parity::Even => Parity::Even,
            },
        }
    }

    pub fn max_diff(&self, other: &SuperTwoForm) -> f64 {
        let mut worst = 0.0f64;
        for b1 in basics(self.n) {
            for b2 in basics(self.n) {
                let a = self.pair_basic(b1, b2);
                let b = other.pair_basic(b1, b2);
                worst = worst.max((&a.val - &b.val).max_abs());
                for k in 0..self.n {
                    worst = worst.max((&a.grad[k] - &b.grad[k]).max_abs());
                }
            }
        }
        worst
    }
}

/// The odd symplectic two-form of the frame, written directly from its
/// defining matrix: the nabla-nabla block is the antisymmetrized covariant
/// derivative of H, the cross blocks are ∓H, insertions pair to zero.
pub fn omega_h(frame: &PointFrame) -> SuperTwoForm {
    let n = frame.n;
    let mut w = SuperTwoForm::zero(n, Parity::Odd);
    let nh = frame.nabla_h();
    // ∂_m (∇_i H)_{jl} with exact second derivatives of H
    let dnh = |m: usize, i: usize, j: usize, l: usize| {
        let mut v = frame.d2h[m][i][j][l];
        for q in 0..n {
            v -= frame.dgamma[m][i][j][q] * frame.h[(q, l)]
                + frame.gamma[i][j][q] * frame.dh[m][q][l]
                + frame.dgamma[m][i][l][q] * frame.h[(j, q)]
                + frame.gamma[i][l][q] * frame.dh[m][j][q];
        }
        v
    };
    for i in 0..n {
        for j in 0..n {
            // <∇_i, ∇_j> = (∇_i H)(X_j) − (∇_j H)(X_i), a one-form
            let mut jet = ExtJet1::zero(n);
            for l in 0..n {
                let e = Ext::generator(n, l);
                jet.val.add_assign_scaled(&e, nh[i][j][l] - nh[j][i][l]);
                for m in 0..n {
                    jet.grad[m].add_assign_scaled(&e, dnh(m, i, j, l) - dnh(m, j, i, l));
                }
            }
            w.nn[i][j] = jet;

            // <∇_i, i_j> = −H_ij and <i_i, ∇_j> = H_ji, scalar blocks
            let mut jet = ExtJet1::zero(n);
            jet.val = Ext::scalar(n, -frame.h[(i, j)]);
            for m in 0..n {
                jet.grad[m] = Ext::scalar(n, -frame.dh[m][i][j]);
            }
            w.ni[i][j] = jet;

            let mut jet = ExtJet1::zero(n);
            jet.val = Ext::scalar(n, frame.h[(j, i)]);
            for m in 0..n {
                jet.grad[m] = Ext::scalar(n, frame.dh[m][j][i]);
            }
            w.in_[i][j] = jet;
        }
    }
    w
}

/// Graded differential of a one-form, evaluated on basic pairs:
/// <D,D';dβ> = D<D';β> − (−1)^{|D||D'|} D'<D;β> − <[D,D'];β>.
pub fn graded_d_one_form(frame: &PointFrame, beta: &SuperOneForm) -> Result<SuperTwoForm> {
    let n = frame.n;
    let mut out = SuperTwoForm::zero(n, Parity::Odd);
    for b1 in basics(n) {
        for b2 in basics(n) {
            let mut jet = basic_apply_j2(frame, b1, beta.pair_basic(b2));
            let sign = parity_of(b1.0.parity() * b2.0.parity());
            let t = basic_apply_j2(frame, b2, beta.pair_basic(b1));
            jet.add_assign_scaled(&t, -sign);
            // bracket term: <[b1,b2]; β> = Σ α_e ∧ <e; β>, as a jet
            let br = bracket_basic_j(frame, b1, b2)?;
            for e in basics(n) {
                let coeff = br.coeff(e);
                if coeff.max_abs() == 0.0 {
                    continue;
                }
                let t = coeff.wedge(&beta.pair_basic(e).truncate())?;
                jet.add_assign_scaled(&t, -1.0);
            }
            *out.pair_basic_mut(b1, b2) = jet;
        }
    }
    Ok(out)
}

/// Graded differential of a two-form on a triple of basic derivations
/// (the graded Koszul formula, value level).
pub fn graded_d_two_form(
    frame: &PointFrame,
    w: &SuperTwoForm,
    d1: Basic,
    d2: Basic,
    d3: Basic,
) -> Result<Ext> {
    let n = frame.n;
    let (p1, p2, p3) = (d1.0.parity(), d2.0.parity(), d3.0.parity());
    let mut out = basic_apply_j1(frame, d1, w.pair_basic(d2, d3));
    out.add_assign_scaled(
        &basic_apply_j1(frame, d2, w.pair_basic(d1, d3)),
        -parity_of(p1 * p2),
    );
    out.add_assign_scaled(
        &basic_apply_j1(frame, d3, w.pair_basic(d1, d2)),
        parity_of(p3 * (p1 + p2)),
    );
    let pair_bracket = |ba: Basic, bb: Basic, other: Basic| -> Result<Ext> {
        let br = bracket_basic(frame, ba, bb)?;
        w.pair(&br, &Derivation::basic(n, other))
    };
    out.add_assign_scaled(&pair_bracket(d1, d2, d3)?, -1.0);
    out.add_assign_scaled(&pair_bracket(d1, d3, d2)?, parity_of(p2 * p3));
    out.add_assign_scaled(&pair_bracket(d2, d3, d1)?, -parity_of(p1 * (p2 + p3)));
    Ok(out)
}

/// Max residual of d(ω) over all triples of basic derivations.
pub fn closedness_residual(frame: &PointFrame, w: &SuperTwoForm) -> Result<f64> {
    let n = frame.n;
    let mut worst = 0.0f64;
    for d1 in basics(n) {
        for d2 in basics(n) {
            for d3 in basics(n) {
                let v = graded_d_two_form(frame, w, d1, d2, d3)?;
                worst = worst.max(v.max_abs());
            }
        }
    }
    Ok(worst)
}
