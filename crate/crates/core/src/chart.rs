//! Closed-form chart coefficient functions: finite sums of monomials
//! c · Π xᵢ^pᵢ · Π sin(xᵢ)^sᵢ · Π cos(xᵢ)^qᵢ with integer exponents
//! (negative exponents allowed away from their singular sets).
//!
//! The family is closed under partial differentiation, so connection and
//! form tables given this way have exact derivatives of every order at the
//! evaluation point. No finite differencing enters identity tests.

use serde::{Deserialize, Serialize};

/// One monomial term. The exponent vectors are indexed by chart variable;
/// missing entries are treated as zero.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Term {
    pub c: f64,
    #[serde(default)]
    pub pow: Vec<i64>,
    #[serde(default)]
    pub sin: Vec<i64>,
    #[serde(default)]
    pub cos: Vec<i64>,
}

impl Term {
    fn exp(v: &[i64], i: usize) -> i64 {
        v.get(i).copied().unwrap_or(0)
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = self.c;
        for (i, &xi) in x.iter().enumerate() {
            let p = Self::exp(&self.pow, i);
            let s = Self::exp(&self.sin, i);
            let q = Self::exp(&self.cos, i);
            if p != 0 {
                acc *= xi.powi(p as i32);
            }
            if s != 0 {
                acc *= xi.sin().powi(s as i32);
            }
            if q != 0 {
                acc *= xi.cos().powi(q as i32);
            }
        }
        acc
    }

    fn with_exps(&self, i: usize, c: f64, p: i64, s: i64, q: i64) -> Term {
        let mut t = self.clone();
        t.c = c;
        let grow = |v: &mut Vec<i64>, val: i64| {
            if v.len() <= i {
                v.resize(i + 1, 0);
            }
            v[i] = val;
        };
        grow(&mut t.pow, p);
        grow(&mut t.sin, s);
        grow(&mut t.cos, q);
        t
    }
}

/// A chart coefficient function, as a sum of monomial terms.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct ChartFn(pub Vec<Term>);

impl ChartFn {
    pub fn zero() -> Self {
        ChartFn(Vec::new())
    }

    pub fn constant(v: f64) -> Self {
        if v == 0.0 {
            return Self::zero();
        }
        ChartFn(vec![Term {
            c: v,
            pow: vec![],
            sin: vec![],
            cos: vec![],
        }])
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.0.iter().map(|t| t.eval(x)).sum()
    }

    /// Exact partial derivative with respect to variable `i`.
    pub fn partial(&self, i: usize) -> ChartFn {
        let mut out = Vec::new();
        for t in &self.0 {
            let p = Term::exp(&t.pow, i);
            let s = Term::exp(&t.sin, i);
            let q = Term::exp(&t.cos, i);
            // d/dx [x^p sin^s cos^q] =
            //   p x^{p-1} sin^s cos^q + s x^p sin^{s-1} cos^{q+1} - q x^p sin^{s+1} cos^{q-1}
            if p != 0 {
                out.push(t.with_exps(i, t.c * p as f64, p - 1, s, q));
            }
            if s != 0 {
                out.push(t.with_exps(i, t.c * s as f64, p, s - 1, q + 1));
            }
            if q != 0 {
                out.push(t.with_exps(i, -t.c * q as f64, p, s + 1, q - 1));
            }
        }
        ChartFn(out)
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|t| {
            t.pow.iter().all(|&p| p == 0)
                && t.sin.iter().all(|&s| s == 0)
                && t.cos.iter().all(|&q| q == 0)
        })
    }

    /// The evaluation point must avoid poles of negative powers.
    pub fn defined_at(&self, x: &[f64]) -> bool {
        self.0.iter().all(|t| {
            x.iter().enumerate().all(|(i, &xi)| {
                (Term::exp(&t.pow, i) >= 0 || xi.abs() > 1e-9)
                    && (Term::exp(&t.sin, i) >= 0 || xi.sin().abs() > 1e-9)
                    && (Term::exp(&t.cos, i) >= 0 || xi.cos().abs() > 1e-9)
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: &ChartFn, x: &[f64], i: usize) -> f64 {
        let h = 1e-6;
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        (f.eval(&xp) - f.eval(&xm)) / (2.0 * h)
    }

    #[test]
    fn polynomial_partials_exact() {
        // f = 3 x0^2 x1
        let f = ChartFn(vec![Term {
            c: 3.0,
            pow: vec![2, 1],
            sin: vec![],
            cos: vec![],
        }]);
        let x = [1.3, -0.7];
        assert!((f.partial(0).eval(&x) - 6.0 * 1.3 * -0.7).abs() < 1e-12);
        assert!((f.partial(1).eval(&x) - 3.0 * 1.3 * 1.3).abs() < 1e-12);
    }

    #[test]
    fn trig_partials_match_finite_differences() {
        // f = sin^2(x0) cos(x1) + x1^3 sin(x1)
        let f = ChartFn(vec![
            Term {
                c: 1.0,
                pow: vec![],
                sin: vec![2, 0],
                cos: vec![0, 1],
            },
            Term {
                c: 1.0,
                pow: vec![0, 3],
                sin: vec![0, 1],
                cos: vec![],
            },
        ]);
        let x = [0.9, 0.4];
        for i in 0..2 {
            assert!((f.partial(i).eval(&x) - fd(&f, &x, i)).abs() < 1e-8);
        }
        // second derivatives stay in the family
        let fxx = f.partial(0).partial(0);
        let h = 1e-4;
        let num = (f.eval(&[0.9 + h, 0.4]) - 2.0 * f.eval(&x) + f.eval(&[0.9 - h, 0.4])) / (h * h);
        assert!((fxx.eval(&x) - num).abs() < 1e-6);
    }

    #[test]
    fn cotangent_partial() {
        // cot θ = sin^{-1} cos, with derivative -1/sin² = -(1 + cot²)
        let f = ChartFn(vec![Term {
            c: 1.0,
            pow: vec![],
            sin: vec![-1],
            cos: vec![1],
        }]);
        let theta = 0.8;
        assert!((f.eval(&[theta]) - 1.0 / theta.tan()).abs() < 1e-14);
        let d = f.partial(0).eval(&[theta]);
        assert!((d + 1.0 / theta.sin().powi(2)).abs() < 1e-12);
        assert!(f.defined_at(&[theta]));
        assert!(!f.defined_at(&[0.0]));
    }

    #[test]
    fn sphere_metric_component() {
        // sin^2(theta), the angular metric coefficient of the round sphere
        let f = ChartFn(vec![Term {
            c: 1.0,
            pow: vec![],
            sin: vec![2],
            cos: vec![],
        }]);
        let theta = std::f64::consts::FRAC_PI_4;
        assert!((f.eval(&[theta]) - 0.5).abs() < 1e-15);
        // d/dθ sin²θ = 2 sinθ cosθ = sin 2θ = 1 at θ=π/4
        assert!((f.partial(0).eval(&[theta]) - 1.0).abs() < 1e-15);
    }
}
