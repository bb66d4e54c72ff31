//! Exterior algebra on `n` anticommuting generators, stored dense.
//!
//! An [`Ext`] holds the 2^n coefficients of an element of Λ(e¹,…,eⁿ),
//! indexed by bitmask: bit `k` of the mask means generator `e^{k+1}`
//! is present, and the basis monomial is the wedge of its generators in
//! increasing order. All values of superfunctions at a point live here.

use crate::error::{GeoError, Result};
use std::ops::{Add, Mul, Neg, Sub};

/// Maximum number of generators supported by the dense layout.
pub const MAX_GENERATORS: usize = 6;

/// Dense element of the exterior algebra on `n` generators.
#[derive(Debug, Clone, PartialEq)]
pub struct Ext {
    n: usize,
    coeffs: Vec<f64>,
}

/// Sign of merging basis monomial `a` with `b` (disjoint masks): counts
/// transpositions needed to sort the concatenation.
fn merge_sign(a: u32, b: u32) -> f64 {
    let mut inversions = 0u32;
    let mut bb = b;
    while bb != 0 {
        let j = bb.trailing_zeros();
        // generators of `a` strictly above j must hop over e^{j+1}
        inversions += (a >> (j + 1)).count_ones();
        bb &= bb - 1;
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl Ext {
    pub fn zero(n: usize) -> Self {
        assert!(n >= 1 && n <= MAX_GENERATORS, "n out of range");
        Ext {
            n,
            coeffs: vec![0.0; 1 << n],
        }
    }

    /// The constant (degree-0) element with the given value.
    pub fn scalar(n: usize, v: f64) -> Self {
        let mut e = Ext::zero(n);
        e.coeffs[0] = v;
        e
    }

    /// Basis monomial for a subset mask, with coefficient 1.
    pub fn basis(n: usize, mask: usize) -> Self {
        assert!(mask < (1 << n));
        let mut e = Ext::zero(n);
        e.coeffs[mask] = 1.0;
        e
    }

    /// The generator e^{k+1} (0-indexed `k`).
    pub fn generator(n: usize, k: usize) -> Self {
        assert!(k < n);
        Ext::basis(n, 1 << k)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeff(&self, mask: usize) -> f64 {
        self.coeffs[mask]
    }

    pub fn set_coeff(&mut self, mask: usize, v: f64) {
        self.coeffs[mask] = v;
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Degree-p homogeneous component.
    pub fn component(&self, p: usize) -> Ext {
        let mut out = Ext::zero(self.n);
        for mask in 0..self.coeffs.len() {
            if (mask as u32).count_ones() as usize == p {
                out.coeffs[mask] = self.coeffs[mask];
            }
        }
        out
    }

    /// Degree-0 part as a plain number.
    pub fn scalar_part(&self) -> f64 {
        self.coeffs[0]
    }

    /// Degree of a homogeneous element; `None` for 0 or mixed elements.
    pub fn degree(&self, tol: f64) -> Option<usize> {
        let mut deg: Option<usize> = None;
        for mask in 0..self.coeffs.len() {
            if self.coeffs[mask].abs() > tol {
                let p = (mask as u32).count_ones() as usize;
                match deg {
                    None => deg = Some(p),
                    Some(q) if q != p => return None,
                    _ => {}
                }
            }
        }
        deg
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.max_abs() <= tol
    }

    pub fn scale(&self, s: f64) -> Ext {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c *= s;
        }
        out
    }

    pub fn add_assign_scaled(&mut self, other: &Ext, s: f64) {
        debug_assert_eq!(self.n, other.n);
        for (a, b) in self.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *a += s * b;
        }
    }

    /// Graded-commutative wedge product.
    pub fn wedge(&self, other: &Ext) -> Result<Ext> {
        if self.n != other.n {
            return Err(GeoError::DimensionMismatch(self.n, other.n));
        }
        let mut out = Ext::zero(self.n);
        for a in 0..self.coeffs.len() {
            let ca = self.coeffs[a];
            if ca == 0.0 {
                continue;
            }
            for b in 0..other.coeffs.len() {
                let cb = other.coeffs[b];
                if cb == 0.0 || (a & b) != 0 {
                    continue;
                }
                out.coeffs[a | b] += ca * cb * merge_sign(a as u32, b as u32);
            }
        }
        Ok(out)
    }

    /// Insertion of the frame vector X_{k+1}: the odd derivation dual to
    /// the generator e^{k+1}.
    pub fn insert(&self, k: usize) -> Ext {
        assert!(k < self.n);
        let bit = 1usize << k;
        let mut out = Ext::zero(self.n);
        for mask in 0..self.coeffs.len() {
            if mask & bit != 0 {
                let below = (mask & (bit - 1)).count_ones();
                let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
                out.coeffs[mask & !bit] += sign * self.coeffs[mask];
            }
        }
        out
    }

    /// Action of the degree-0 algebraic derivation Σ_{m,l} M[m][l] e^l ∧ i_m.
    /// On a generator it sends e^m to Σ_l M[m][l] e^l.
    pub fn endo_action(&self, m: &[Vec<f64>]) -> Ext {
        let n = self.n;
        let mut out = Ext::zero(n);
        for gm in 0..n {
            let inserted = self.insert(gm);
            if inserted.is_zero(0.0) {
                continue;
            }
            for l in 0..n {
                let c = m[gm][l];
                if c == 0.0 {
                    continue;
                }
                let el = Ext::generator(n, l);
                let term = el.wedge(&inserted).expect("same n");
                out.add_assign_scaled(&term, c);
            }
        }
        out
    }
}

impl Add for &Ext {
    type Output = Ext;
    fn add(self, rhs: &Ext) -> Ext {
        let mut out = self.clone();
        out.add_assign_scaled(rhs, 1.0);
        out
    }
}

impl Sub for &Ext {
    type Output = Ext;
    fn sub(self, rhs: &Ext) -> Ext {
        let mut out = self.clone();
        out.add_assign_scaled(rhs, -1.0);
        out
    }
}

impl Neg for &Ext {
    type Output = Ext;
    fn neg(self) -> Ext {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &Ext {
    type Output = Ext;
    fn mul(self, rhs: f64) -> Ext {
        self.scale(rhs)
    }
}

/// First-order jet of an exterior-valued field at a point: the value and
/// all first frame derivatives of its coefficients.
#[derive(Debug, Clone)]
pub struct ExtJet1 {
    pub val: Ext,
    pub grad: Vec<Ext>,
}

impl ExtJet1 {
    pub fn zero(n: usize) -> Self {
        ExtJet1 {
            val: Ext::zero(n),
            grad: vec![Ext::zero(n); n],
        }
    }

    /// Jet of a field that is constant in the frame basis.
    pub fn constant(val: Ext) -> Self {
        let n = val.n();
        ExtJet1 {
            val,
            grad: vec![Ext::zero(n); n],
        }
    }

    pub fn n(&self) -> usize {
        self.val.n()
    }

    pub fn scale(&self, s: f64) -> ExtJet1 {
        ExtJet1 {
            val: self.val.scale(s),
            grad: self.grad.iter().map(|g| g.scale(s)).collect(),
        }
    }

    pub fn add_assign_scaled(&mut self, other: &ExtJet1, s: f64) {
        self.val.add_assign_scaled(&other.val, s);
        for (a, b) in self.grad.iter_mut().zip(other.grad.iter()) {
            a.add_assign_scaled(b, s);
        }
    }

    /// Leibniz wedge of jets.
    pub fn wedge(&self, other: &ExtJet1) -> Result<ExtJet1> {
        let val = self.val.wedge(&other.val)?;
        let mut grad = Vec::with_capacity(self.grad.len());
        for k in 0..self.grad.len() {
            let t = &self.grad[k].wedge(&other.val)? + &self.val.wedge(&other.grad[k])?;
            grad.push(t);
        }
        Ok(ExtJet1 { val, grad })
    }

    /// Insertion acts coefficientwise (frame vectors are jet-constant).
    pub fn insert(&self, k: usize) -> ExtJet1 {
        ExtJet1 {
            val: self.val.insert(k),
            grad: self.grad.iter().map(|g| g.insert(k)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.grad
            .iter()
            .fold(self.val.max_abs(), |m, g| m.max(g.max_abs()))
    }
}

/// Second-order jet of an exterior-valued field.
#[derive(Debug, Clone)]
pub struct ExtJet2 {
    pub val: Ext,
    pub grad: Vec<Ext>,
    pub hess: Vec<Vec<Ext>>,
}

impl ExtJet2 {
    pub fn zero(n: usize) -> Self {
        ExtJet2 {
            val: Ext::zero(n),
            grad: vec![Ext::zero(n); n],
            hess: vec![vec![Ext::zero(n); n]; n],
        }
    }

    pub fn truncate(&self) -> ExtJet1 {
        ExtJet1 {
            val: self.val.clone(),
            grad: self.grad.clone(),
        }
    }

    pub fn add_assign_scaled(&mut self, other: &ExtJet2, s: f64) {
        self.val.add_assign_scaled(&other.val, s);
        for (a, b) in self.grad.iter_mut().zip(other.grad.iter()) {
            a.add_assign_scaled(b, s);
        }
        for (ra, rb) in self.hess.iter_mut().zip(other.hess.iter()) {
            for (a, b) in ra.iter_mut().zip(rb.iter()) {
                a.add_assign_scaled(b, s);
            }
        }
    }

    pub fn insert(&self, k: usize) -> ExtJet2 {
        ExtJet2 {
            val: self.val.insert(k),
            grad: self.grad.iter().map(|g| g.insert(k)).collect(),
            hess: self
                .hess
                .iter()
                .map(|row| row.iter().map(|h| h.insert(k)).collect())
                .collect(),
        }
    }
}
