use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Truncated power series `c_0 + c_1 z + ... + c_{N-1} z^{N-1}` viewed as an
/// element of H². The truncation order `N` is the length of the coefficient
/// vector and never changes under the arithmetic below: products and shifts
/// drop everything of degree `>= N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyVector {
    coeffs: Vec<Complex64>,
}

impl HardyVector {
    pub fn zeros(order: usize) -> Self {
        assert!(order > 0, "truncation order must be positive");
        Self {
            coeffs: vec![Complex64::new(0.0, 0.0); order],
        }
    }

    /// The monomial `z^k` at truncation order `order`. Panics when `k >= order`.
    pub fn monomial(k: usize, order: usize) -> Self {
        assert!(k < order, "monomial degree {k} outside truncation {order}");
        let mut v = Self::zeros(order);
        v.coeffs[k] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn constant(c: Complex64, order: usize) -> Self {
        let mut v = Self::zeros(order);
        v.coeffs[0] = c;
        v
    }

    /// Copies `coeffs` into a vector of order `order`, zero padding. Coefficients
    /// beyond the order are dropped.
    pub fn from_coeffs(coeffs: &[Complex64], order: usize) -> Self {
        let mut v = Self::zeros(order);
        for (dst, src) in v.coeffs.iter_mut().zip(coeffs) {
            *dst = *src;
        }
        v
    }

    pub fn from_vec(coeffs: Vec<Complex64>) -> Self {
        assert!(!coeffs.is_empty(), "truncation order must be positive");
        Self { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Index of the highest nonzero coefficient, `None` for the zero vector.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| c.norm_sqr() > 0.0)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `Σ f_k conj(g_k)`, linear in the first argument.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.order() != other.order() {
            return Err(LabError::dim(format!(
                "inner product of orders {} and {}",
                self.order(),
                other.order()
            )));
        }
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b.conj())
            .sum())
    }

    /// Multiplication by `z`; the top coefficient falls off the truncation.
    pub fn shift(&self) -> Self {
        let n = self.order();
        let mut out = Self::zeros(n);
        out.coeffs[1..].copy_from_slice(&self.coeffs[..n - 1]);
        out
    }

    /// Multiplication by `z^k`.
    pub fn shift_by(&self, k: usize) -> Self {
        let n = self.order();
        let mut out = Self::zeros(n);
        if k < n {
            out.coeffs[k..].copy_from_slice(&self.coeffs[..n - k]);
        }
        out
    }

    /// Backward shift `S* f = (f - f(0)) / z`.
    pub fn backward_shift(&self) -> Self {
        let n = self.order();
        let mut out = Self::zeros(n);
        out.coeffs[..n - 1].copy_from_slice(&self.coeffs[1..]);
        out
    }

    /// Truncated Cauchy product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.order() != other.order() {
            return Err(LabError::dim(format!(
                "product of orders {} and {}",
                self.order(),
                other.order()
            )));
        }
        let n = self.order();
        let mut out = Self::zeros(n);
        let top = other.degree().map_or(0, |d| d + 1);
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            for (j, b) in other.coeffs[..top.min(n - i)].iter().enumerate() {
                out.coeffs[i + j] += a * b;
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Horner evaluation of the truncated series.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    /// Largest coefficient-wise distance to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Sum of `|c_k|²` over `k >= from`.
    pub fn tail_norm_sqr(&self, from: usize) -> f64 {
        self.coeffs
            .iter()
            .skip(from)
            .map(|c| c.norm_sqr())
            .sum()
    }
}

/// `h2_inner_product` in the coefficient form.
pub fn h2_inner_product(f: &HardyVector, g: &HardyVector) -> Result<Complex64> {
    f.inner(g)
}

impl Add for &HardyVector {
    type Output = HardyVector;

    fn add(self, rhs: Self) -> HardyVector {
        assert_eq!(self.order(), rhs.order(), "order mismatch in addition");
        HardyVector {
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &HardyVector {
    type Output = HardyVector;

    fn sub(self, rhs: Self) -> HardyVector {
        assert_eq!(self.order(), rhs.order(), "order mismatch in subtraction");
        HardyVector {
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &HardyVector {
    type Output = HardyVector;

    fn neg(self) -> HardyVector {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul<Complex64> for &HardyVector {
    type Output = HardyVector;

    fn mul(self, rhs: Complex64) -> HardyVector {
        self.scale(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn inner_product_examples() {
        let one = HardyVector::monomial(0, 4);
        let z = HardyVector::monomial(1, 4);
        assert_eq!(one.inner(&one).unwrap(), c(1.0, 0.0));
        assert_eq!(z.inner(&one).unwrap(), c(0.0, 0.0));
        let p = HardyVector::from_coeffs(&[c(1.0, 0.0), c(1.0, 0.0)], 4);
        let q = HardyVector::from_coeffs(&[c(1.0, 0.0), c(-1.0, 0.0)], 4);
        assert_eq!(p.inner(&q).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn mismatched_orders_are_rejected() {
        let a = HardyVector::zeros(3);
        let b = HardyVector::zeros(4);
        assert!(matches!(a.inner(&b), Err(LabError::Dimension(_))));
        assert!(matches!(a.mul(&b), Err(LabError::Dimension(_))));
    }

    #[test]
    fn shift_drops_only_top_coefficient() {
        let v = HardyVector::from_coeffs(&[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)], 3);
        let s = v.shift();
        assert_eq!(s.coeffs(), &[c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]);
        assert_eq!(v.shift().backward_shift().coeffs()[..2], v.coeffs()[..2]);
        let low = HardyVector::from_coeffs(&[c(1.0, 0.0)], 3);
        assert_eq!(low.shift().norm_sqr(), low.norm_sqr());
    }

    #[test]
    fn product_and_eval_agree() {
        let a = HardyVector::from_coeffs(&[c(1.0, 0.0), c(0.0, 2.0)], 8);
        let b = HardyVector::from_coeffs(&[c(-1.0, 0.5), c(0.3, 0.0), c(0.0, -1.0)], 8);
        let p = a.mul(&b).unwrap();
        let z = c(0.3, -0.4);
        assert!((p.eval(z) - a.eval(z) * b.eval(z)).norm() < 1e-14);
    }
}
