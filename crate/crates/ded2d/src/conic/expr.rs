//! Real and complex affine expressions over the variables of a [`ConicProgram`].
//!
//! [`ConicProgram`]: super::ConicProgram

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// `Σ coef·x[idx] + constant`. Terms are kept sorted by index with no duplicates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(value: f64) -> Self {
        Self { terms: Vec::new(), constant: value }
    }

    pub fn var(idx: usize) -> Self {
        Self { terms: vec![(idx, 1.0)], constant: 0.0 }
    }

    pub fn term(idx: usize, coef: f64) -> Self {
        Self { terms: vec![(idx, coef)], constant: 0.0 }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().fold(self.constant, |acc, &(i, c)| acc + c * x[i])
    }

    pub fn scale(&self, k: f64) -> Self {
        if k == 0.0 {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|&(i, c)| (i, c * k)).collect(),
            constant: self.constant * k,
        }
    }

    /// `self + k·other`, merging terms.
    pub fn add_scaled(&self, other: &LinExpr, k: f64) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut a, mut b) = (self.terms.iter().peekable(), other.terms.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some(&&(ia, ca)), Some(&&(ib, cb))) => {
                    if ia == ib {
                        terms.push((ia, ca + k * cb));
                        a.next();
                        b.next();
                    } else if ia < ib {
                        terms.push((ia, ca));
                        a.next();
                    } else {
                        terms.push((ib, k * cb));
                        b.next();
                    }
                }
                (Some(&&t), None) => {
                    terms.push(t);
                    a.next();
                }
                (None, Some(&&(ib, cb))) => {
                    terms.push((ib, k * cb));
                    b.next();
                }
                (None, None) => break,
            }
        }
        terms.retain(|&(_, c)| c != 0.0);
        Self { terms, constant: self.constant + k * other.constant }
    }

    pub fn sum<'a>(items: impl IntoIterator<Item = &'a LinExpr>) -> Self {
        items.into_iter().fold(Self::zero(), |acc, e| acc.add_scaled(e, 1.0))
    }
}

impl Add for &LinExpr {
    type Output = LinExpr;
    fn add(self, rhs: &LinExpr) -> LinExpr {
        self.add_scaled(rhs, 1.0)
    }
}

impl Sub for &LinExpr {
    type Output = LinExpr;
    fn sub(self, rhs: &LinExpr) -> LinExpr {
        self.add_scaled(rhs, -1.0)
    }
}

impl Add<f64> for &LinExpr {
    type Output = LinExpr;
    fn add(self, rhs: f64) -> LinExpr {
        let mut out = self.clone();
        out.constant += rhs;
        out
    }
}

impl Mul<f64> for &LinExpr {
    type Output = LinExpr;
    fn mul(self, rhs: f64) -> LinExpr {
        self.scale(rhs)
    }
}

impl Neg for &LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self.scale(-1.0)
    }
}

/// A complex scalar whose real and imaginary parts are affine in the real variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CExpr {
    pub re: LinExpr,
    pub im: LinExpr,
}

impl CExpr {
    pub fn constant(z: Complex64) -> Self {
        Self { re: LinExpr::constant(z.re), im: LinExpr::constant(z.im) }
    }

    /// Complex variable stored as the real pair `(re_idx, im_idx)`, scaled by `k`.
    pub fn var(re_idx: usize, im_idx: usize, k: f64) -> Self {
        Self { re: LinExpr::term(re_idx, k), im: LinExpr::term(im_idx, k) }
    }

    pub fn is_constant(&self) -> bool {
        self.re.is_constant() && self.im.is_constant()
    }

    pub fn constant_value(&self) -> Complex64 {
        Complex64::new(self.re.constant, self.im.constant)
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        Complex64::new(self.re.eval(x), self.im.eval(x))
    }

    /// `self + k·other` for a complex constant `k`.
    pub fn add_scaled(&self, other: &CExpr, k: Complex64) -> Self {
        // (a + jb)(c + jd) = (ac − bd) + j(ad + bc)
        let re = self.re.add_scaled(&other.re, k.re).add_scaled(&other.im, -k.im);
        let im = self.im.add_scaled(&other.im, k.re).add_scaled(&other.re, k.im);
        Self { re, im }
    }

    pub fn scale(&self, k: Complex64) -> Self {
        CExpr::default().add_scaled(self, k)
    }

    /// Product of two complex affine expressions, at least one of which is constant.
    pub fn mul(&self, other: &CExpr) -> Self {
        if self.is_constant() {
            other.scale(self.constant_value())
        } else {
            assert!(other.is_constant(), "product of two non-constant complex expressions is not affine");
            self.scale(other.constant_value())
        }
    }

    /// `Re{self · conj(k)}` for a complex constant `k`.
    pub fn re_mul_conj(&self, k: Complex64) -> LinExpr {
        self.re.scale(k.re).add_scaled(&self.im, k.im)
    }
}

/// `Σ_j (const_j + coef_jᵀ x) ⋯` helper: dot product of a constant complex vector
/// with a vector of complex expressions.
pub fn cdot(coefs: &[Complex64], items: &[CExpr]) -> CExpr {
    debug_assert_eq!(coefs.len(), items.len());
    coefs
        .iter()
        .zip(items)
        .fold(CExpr::default(), |acc, (&k, e)| acc.add_scaled(e, k))
}

/// A convex quadratic `lin + Σ_k squares_k²`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvexQuadratic {
    pub lin: LinExpr,
    pub squares: Vec<LinExpr>,
}

impl ConvexQuadratic {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.lin.eval(x) + self.squares.iter().map(|s| s.eval(x).powi(2)).sum::<f64>()
    }

    pub fn add_abs2(&mut self, z: &CExpr, weight: f64) {
        debug_assert!(weight >= 0.0);
        let r = weight.sqrt();
        self.squares.push(z.re.scale(r));
        self.squares.push(z.im.scale(r));
    }

    pub fn scale(&self, k: f64) -> Self {
        debug_assert!(k >= 0.0);
        let r = k.sqrt();
        Self {
            lin: self.lin.scale(k),
            squares: self.squares.iter().map(|s| s.scale(r)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_scaled_merges_and_drops_zeros() {
        let a = LinExpr { terms: vec![(0, 1.0), (2, 3.0)], constant: 1.0 };
        let b = LinExpr { terms: vec![(1, 2.0), (2, 1.5)], constant: -1.0 };
        let c = a.add_scaled(&b, -2.0);
        assert_eq!(c.terms, vec![(0, 1.0), (1, -4.0)]);
        assert_eq!(c.constant, 3.0);
    }

    #[test]
    fn complex_product_matches_arithmetic() {
        let z = CExpr::var(0, 1, 1.0);
        let k = Complex64::new(0.5, -2.0);
        let x = [1.3, -0.7];
        let got = z.mul(&CExpr::constant(k)).eval(&x);
        let want = Complex64::new(1.3, -0.7) * k;
        assert!((got - want).norm() < 1e-14);
        let re = z.re_mul_conj(k).eval(&x);
        assert!((re - (Complex64::new(1.3, -0.7) * k.conj()).re).abs() < 1e-14);
    }
}
