//! Pointwise chart geometry: connection coefficients, curvature, the
//! Levi-Civita construction, metric/symplectic Ricci and scalar curvature,
//! and the parallel-H compatibility check.
//!
//! Index conventions (0-indexed frame X_1..X_n):
//!   gamma[i][j][k]      = Γ^k_{ij},  the k-component of ∇_{X_i} X_j
//!   dgamma[m][i][j][k]  = ∂_m Γ^k_{ij}
//!   h[i][j]             = H(X_i)(X_j)
//!   dh[k][i][j]         = ∂_k H_ij
//!   r[i][j][k][l]       = l-component of Curv(X_i, X_j) X_k

use crate::error::{GeoError, Result};
use crate::linalg;
use nalgebra::DMatrix;

pub type T2 = Vec<Vec<f64>>;
pub type T3 = Vec<Vec<Vec<f64>>>;
pub type T4 = Vec<Vec<Vec<Vec<f64>>>>;
pub type T5 = Vec<Vec<Vec<Vec<Vec<f64>>>>>;

pub fn t2(n: usize) -> T2 {
    vec![vec![0.0; n]; n]
}
pub fn t3(n: usize) -> T3 {
    vec![t2(n); n]
}
pub fn t4(n: usize) -> T4 {
    vec![t3(n); n]
}
pub fn t5(n: usize) -> T5 {
    vec![t4(n); n]
}

pub fn max_abs3(t: &T3) -> f64 {
    t.iter()
        .flatten()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
}

pub fn max_abs4(t: &T4) -> f64 {
    t.iter()
        .flat_map(|a| a.iter())
        .flat_map(|a| a.iter())
        .flat_map(|a| a.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
}

/// All pointwise chart data at a single point.
#[derive(Debug, Clone)]
pub struct PointFrame {
    pub n: usize,
    pub h: DMatrix<f64>,
    pub dh: T3,
    pub d2h: T4,
    pub gamma: T3,
    pub dgamma: T4,
    /// ∂∂Γ, present only when the connection comes from closed-form tables.
    pub d2gamma: Option<T5>,
    pub r: T4,
    /// ∂R, derived from d2gamma when available.
    pub dr: Option<T5>,
    /// Structure coefficients [X_i, X_j]^k; zero for coordinate frames.
    pub frame_brackets: T3,
}

/// Curvature components from connection coefficients and their exact
/// first derivatives:
/// R^l_{ijk} = ∂_i Γ^l_{jk} − ∂_j Γ^l_{ik} + Γ^l_{im}Γ^m_{jk} − Γ^l_{jm}Γ^m_{ik}.
pub fn curvature_from_gamma(n: usize, gamma: &T3, dgamma: &T4) -> T4 {
    let mut r = t4(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut v = dgamma[i][j][k][l] - dgamma[j][i][k][l];
                    for m in 0..n {
                        v += gamma[i][m][l] * gamma[j][k][m] - gamma[j][m][l] * gamma[i][k][m];
                    }
                    r[i][j][k][l] = v;
                }
            }
        }
    }
    r
}

/// ∂_m R^l_{ijk} from first and second derivatives of Γ.
fn curvature_derivative(n: usize, gamma: &T3, dgamma: &T4, d2gamma: &T5) -> T5 {
    let mut dr = t5(n);
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut v = d2gamma[m][i][j][k][l] - d2gamma[m][j][i][k][l];
                        for p in 0..n {
                            v += dgamma[m][i][p][l] * gamma[j][k][p]
                                + gamma[i][p][l] * dgamma[m][j][k][p]
                                - dgamma[m][j][p][l] * gamma[i][k][p]
                                - gamma[j][p][l] * dgamma[m][i][k][p];
                        }
                        dr[m][i][j][k][l] = v;
                    }
                }
            }
        }
    }
    dr
}

impl PointFrame {
    /// Assemble a frame from pointwise data, computing curvature and
    /// validating the structural invariants.
    pub fn new(
        n: usize,
        h: DMatrix<f64>,
        dh: T3,
        d2h: T4,
        gamma: T3,
        dgamma: T4,
        d2gamma: Option<T5>,
    ) -> Result<PointFrame> {
        // |det H| guard relative to the matrix scale
        let scale = h.amax().max(1e-300);
        let det = h.clone().lu().determinant();
        if det.abs() <= 1e-12 * scale.powi(n as i32) {
            return Err(GeoError::SingularBlock {
                cond: linalg::condition_number(&h),
                guard: linalg::COND_GUARD,
            });
        }
        let r = curvature_from_gamma(n, &gamma, &dgamma);
        let dr = d2gamma
            .as_ref()
            .map(|d2| curvature_derivative(n, &gamma, &dgamma, d2));
        Ok(PointFrame {
            n,
            h,
            dh,
            d2h,
            gamma,
            dgamma,
            d2gamma,
            r,
            dr,
            frame_brackets: t3(n),
        })
    }

    pub fn flat(n: usize, h: DMatrix<f64>) -> Result<PointFrame> {
        PointFrame::new(n, h, t3(n), t4(n), t3(n), t4(n), Some(t5(n)))
    }

    pub fn h_inverse(&self) -> Result<DMatrix<f64>> {
        linalg::inverse_guarded(&self.h)
    }

    /// Components of ∇H at the point:
    /// (∇_k H)_{ij} = ∂_k H_ij − Γ^q_{ki} H_qj − Γ^q_{kj} H_iq.
    pub fn nabla_h(&self) -> T3 {
        let n = self.n;
        let mut out = t3(n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = self.dh[k][i][j];
                    for q in 0..n {
                        v -= self.gamma[k][i][q] * self.h[(q, j)]
                            + self.gamma[k][j][q] * self.h[(i, q)];
                    }
                    out[k][i][j] = v;
                }
            }
        }
        out
    }

    /// Max-norm of the ∇H components; 0 means the connection preserves H.
    pub fn check_nabla_h(&self) -> f64 {
        max_abs3(&self.nabla_h())
    }

    /// Exact antisymmetry of the curvature in its first two slots.
    pub fn curvature_antisymmetry_residual(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        worst = worst.max((self.r[i][j][k][l] + self.r[j][i][k][l]).abs());
                    }
                }
            }
        }
        worst
    }

    /// First Bianchi residual: cyclic sum of Curv(X,Y)Z over (X,Y,Z).
    pub fn first_bianchi_residual(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let v = self.r[i][j][k][l] + self.r[j][k][i][l] + self.r[k][i][j][l];
                        worst = worst.max(v.abs());
                    }
                }
            }
        }
        worst
    }
}

/// Which kind of bilinear form is used to contract the curvature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormKind {
    Metric,
    Symplectic,
}

/// Ricci tensor and scalar curvature of the frame's connection, contracted
/// with an invertible bilinear form `b` (with frame derivatives `db`).
///
/// The trace convention Ric(X,Y) = contraction of Curv(Z,X)Y over Z is the
/// one that assigns the unit round 2-sphere scalar curvature +2.
pub fn ricci_and_scalar(
    frame: &PointFrame,
    b: &DMatrix<f64>,
    db: &T3,
    kind: FormKind,
) -> Result<(DMatrix<f64>, f64)> {
    let n = frame.n;
    if kind == FormKind::Symplectic {
        // the connection must preserve the form
        let mut worst = 0.0f64;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = db[k][i][j];
                    for q in 0..n {
                        v -= frame.gamma[k][i][q] * b[(q, j)] + frame.gamma[k][j][q] * b[(i, q)];
                    }
                    worst = worst.max(v.abs());
                }
            }
        }
        if worst > 1e-9 {
            return Err(GeoError::IncompatibleConnection(worst));
        }
    }
    let ric = DMatrix::from_fn(n, n, |x, y| (0..n).map(|z| frame.r[z][x][y][z]).sum());
    let binv = linalg::inverse_guarded(b)?;
    let s = (&binv * &ric).trace();
    Ok((ric, s))
}

/// Levi-Civita connection data at a point from the 2-jet of a metric:
/// returns (Γ, ∂Γ). `g`, `dg`, `d2g` are the exact value and derivatives
/// of the metric coefficients at the point.
pub fn levi_civita(n: usize, g: &DMatrix<f64>, dg: &T3, d2g: &T4) -> Result<(T3, T4)> {
    let sym_residual = (g - &g.transpose()).amax();
    if sym_residual > 1e-12 * g.amax().max(1.0) {
        return Err(GeoError::NonSymmetric(sym_residual));
    }
    if g.clone().cholesky().is_none() {
        return Err(GeoError::NotPositiveDefinite);
    }
    let ginv = linalg::inverse_guarded(g)?;

    // T_{lij} = ½(∂_i g_{lj} + ∂_j g_{li} − ∂_l g_{ij})
    let mut t = t3(n);
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                t[l][i][j] = 0.5 * (dg[i][l][j] + dg[j][l][i] - dg[l][i][j]);
            }
        }
    }
    let mut gamma = t3(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                gamma[i][j][k] = (0..n).map(|l| ginv[(k, l)] * t[l][i][j]).sum();
            }
        }
    }

    // ∂_m g^{-1} = −g^{-1} (∂_m g) g^{-1}
    let mut dginv: Vec<DMatrix<f64>> = Vec::with_capacity(n);
    for m in 0..n {
        let dgm = DMatrix::from_fn(n, n, |a, b| dg[m][a][b]);
        dginv.push(-(&ginv * dgm * &ginv));
    }
    // ∂_m T_{lij} from the metric's second derivatives
    let mut dt = t4(n);
    for m in 0..n {
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    dt[m][l][i][j] =
                        0.5 * (d2g[m][i][l][j] + d2g[m][j][l][i] - d2g[m][l][i][j]);
                }
            }
        }
    }
    let mut dgamma = t4(n);
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    dgamma[m][i][j][k] = (0..n)
                        .map(|l| dginv[m][(k, l)] * t[l][i][j] + ginv[(k, l)] * dt[m][l][i][j])
                        .sum();
                }
            }
        }
    }
    Ok((gamma, dgamma))
}
