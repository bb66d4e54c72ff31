//! 2x2-block supermatrix algebra over real scalar blocks: graded transpose,
//! inverse, trace, and composition, with the sign conventions pinned by the
//! block computation of the odd symplectic scalar supercurvature.

use crate::error::{GeoError, Result};
use crate::linalg;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Declared parity of a supermatrix. Even matrices act within the even/odd
/// summands (diagonal blocks), odd matrices swap them (cross blocks).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

/// Block matrix [[A, B], [C, D]] with all four blocks n x n.
#[derive(Debug, Clone)]
pub struct SuperMatrix {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub parity: Parity,
}

impl SuperMatrix {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        parity: Parity,
    ) -> Result<Self> {
        let n = a.nrows();
        for m in [&a, &b, &c, &d] {
            if m.nrows() != n || m.ncols() != n {
                return Err(GeoError::DimensionMismatch(m.nrows(), n));
            }
        }
        Ok(SuperMatrix { a, b, c, d, parity })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn identity(n: usize) -> Self {
        SuperMatrix {
            a: DMatrix::identity(n, n),
            b: DMatrix::zeros(n, n),
            c: DMatrix::zeros(n, n),
            d: DMatrix::identity(n, n),
            parity: Parity::Even,
        }
    }

    pub fn zeros(n: usize, parity: Parity) -> Self {
        SuperMatrix {
            a: DMatrix::zeros(n, n),
            b: DMatrix::zeros(n, n),
            c: DMatrix::zeros(n, n),
            d: DMatrix::zeros(n, n),
            parity,
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&self.a);
        m.view_mut((0, n), (n, n)).copy_from(&self.b);
        m.view_mut((n, 0), (n, n)).copy_from(&self.c);
        m.view_mut((n, n), (n, n)).copy_from(&self.d);
        m
    }

    fn from_dense(m: &DMatrix<f64>, parity: Parity) -> Self {
        let n = m.nrows() / 2;
        SuperMatrix {
            a: m.view((0, 0), (n, n)).into(),
            b: m.view((0, n), (n, n)).into(),
            c: m.view((n, 0), (n, n)).into(),
            d: m.view((n, n), (n, n)).into(),
            parity,
        }
    }

    /// Graded transpose: [[A,B],[C,D]] -> [[Aᵗ, -Cᵗ], [Bᵗ, Dᵗ]].
    pub fn supertranspose(&self) -> SuperMatrix {
        SuperMatrix {
            a: self.a.transpose(),
            b: -self.c.transpose(),
            c: self.b.transpose(),
            d: self.d.transpose(),
            parity: self.parity,
        }
    }

    /// Supertrace STr = Tr(A) - Tr(D).
    pub fn supertrace(&self) -> f64 {
        self.a.trace() - self.d.trace()
    }

    /// Plain block product; the inverse and the cyclicity law are stated
    /// with respect to this multiplication.
    pub fn multiply(&self, other: &SuperMatrix) -> SuperMatrix {
        let parity = match (self.parity, other.parity) {
            (Parity::Even, Parity::Even) | (Parity::Odd, Parity::Odd) => Parity::Even,
            _ => Parity::Odd,
        };
        SuperMatrix::from_dense(&(self.to_dense() * other.to_dense()), parity)
    }

    /// Graded composition of the morphisms the matrices represent. It agrees
    /// with `multiply` unless both factors are odd, in which case the terms
    /// routed through the even intermediate block flip sign. This is the rule
    /// under which STr((w^b)^{-1} . (Ric^b)) expands into the two-term trace
    /// expression used by the vanishing theorem.
    pub fn compose(&self, other: &SuperMatrix) -> SuperMatrix {
        if !(self.parity == Parity::Odd && other.parity == Parity::Odd) {
            return self.multiply(other);
        }
        let s = -1.0;
        SuperMatrix {
            a: &self.a * &other.a * s + &self.b * &other.c,
            b: &self.a * &other.b * s + &self.b * &other.d,
            c: &self.c * &other.a * s + &self.d * &other.c,
            d: &self.c * &other.b * s + &self.d * &other.d,
            parity: Parity::Even,
        }
    }

    /// Two-sided inverse under supermatrix multiplication, computed on the
    /// dense 2n x 2n matrix with a condition-number guard.
    pub fn superinverse(&self) -> Result<SuperMatrix> {
        let inv = linalg::inverse_guarded(&self.to_dense())?;
        Ok(SuperMatrix::from_dense(&inv, self.parity))
    }

    pub fn max_abs(&self) -> f64 {
        self.a
            .amax()
            .max(self.b.amax())
            .max(self.c.amax())
            .max(self.d.amax())
    }

    pub fn sub(&self, other: &SuperMatrix) -> SuperMatrix {
        SuperMatrix {
            a: &self.a - &other.a,
            b: &self.b - &other.b,
            c: &self.c - &other.c,
            d: &self.d - &other.d,
            parity: self.parity,
        }
    }
}

/// The supermatrix of the musical morphism induced by the odd two-form with
/// scalar cross blocks (-H, Hᵗ): [[0, H], [-Hᵗ, 0]].
pub fn omega_flat(h: &DMatrix<f64>) -> SuperMatrix {
    let n = h.nrows();
    SuperMatrix {
        a: DMatrix::zeros(n, n),
        b: h.clone(),
        c: -h.transpose(),
        d: DMatrix::zeros(n, n),
        parity: Parity::Odd,
    }
}
