//! The Brownian shift `B(f, α) = (z f + σ α, e^{iθ} α)` on `H² ⊕ ℂ`.
//!
//! Matrices use the basis `z^0, …, z^{N-1}` followed by the scalar slot.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::hardy::inner::normalize_angle;
use crate::hardy::HardyVector;

/// Element `(f, α)` of `H² ⊕ ℂ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrownianVector {
    pub analytic: HardyVector,
    pub scalar: Complex64,
}

impl BrownianVector {
    pub fn new(analytic: HardyVector, scalar: Complex64) -> Self {
        Self { analytic, scalar }
    }

    pub fn zeros(order: usize) -> Self {
        Self::new(HardyVector::zeros(order), Complex64::new(0.0, 0.0))
    }

    /// `(0, 1)`.
    pub fn slot(order: usize) -> Self {
        Self::new(HardyVector::zeros(order), Complex64::new(1.0, 0.0))
    }

    /// `(z^k, 0)`.
    pub fn monomial(k: usize, order: usize) -> Self {
        Self::new(HardyVector::monomial(k, order), Complex64::new(0.0, 0.0))
    }

    pub fn order(&self) -> usize {
        self.analytic.order()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.analytic.norm_sqr() + self.scalar.norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        Ok(self.analytic.inner(&other.analytic)? + self.scalar * other.scalar.conj())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.analytic.scale(s), self.scalar * s)
    }

    /// Coordinates with the scalar slot last.
    pub fn to_column(&self) -> DVector<Complex64> {
        let n = self.order();
        DVector::from_fn(n + 1, |i, _| {
            if i < n {
                self.analytic.coeffs()[i]
            } else {
                self.scalar
            }
        })
    }

    pub fn from_column(col: &DVector<Complex64>) -> Result<Self> {
        if col.len() < 2 {
            return Err(LabError::dim("column needs at least one coefficient and the slot"));
        }
        let n = col.len() - 1;
        Ok(Self::new(
            HardyVector::from_vec(col.as_slice()[..n].to_vec()),
            col[n],
        ))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.analytic
            .max_abs_diff(&other.analytic)
            .max((self.scalar - other.scalar).norm())
    }
}

/// Covariance `σ > 0` and angle `θ ∈ [0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct BrownianShiftParams {
    sigma: f64,
    theta: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    sigma: f64,
    theta: f64,
}

impl TryFrom<RawParams> for BrownianShiftParams {
    type Error = LabError;

    fn try_from(raw: RawParams) -> Result<Self> {
        Self::new(raw.sigma, raw.theta)
    }
}

impl BrownianShiftParams {
    pub fn new(sigma: f64, theta: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(LabError::domain(format!("covariance must be positive, got {sigma}")));
        }
        if !theta.is_finite() {
            return Err(LabError::domain(format!("angle must be finite, got {theta}")));
        }
        Ok(Self {
            sigma,
            theta: normalize_angle(theta),
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `e^{iθ}`.
    pub fn rotation(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.theta)
    }
}

pub fn apply(p: &BrownianShiftParams, v: &BrownianVector) -> BrownianVector {
    let mut f = v.analytic.shift();
    f.coeffs_mut()[0] += p.sigma * v.scalar;
    BrownianVector::new(f, p.rotation() * v.scalar)
}

/// `B*(f, α) = (S* f, σ f(0) + e^{-iθ} α)`.
pub fn apply_adjoint(p: &BrownianShiftParams, v: &BrownianVector) -> BrownianVector {
    let f0 = v.analytic.coeffs()[0];
    BrownianVector::new(
        v.analytic.backward_shift(),
        p.sigma * f0 + p.rotation().conj() * v.scalar,
    )
}

/// `B^m v`, refusing powers whose exact image would leave the truncation.
pub fn power_apply(p: &BrownianShiftParams, m: usize, v: &BrownianVector) -> Result<BrownianVector> {
    let n = v.order();
    // B^m(f, α) has analytic degree max(deg f + m, m - 1)
    let reach = match (v.analytic.degree(), v.scalar.norm_sqr() > 0.0) {
        (Some(d), _) => Some(d + m),
        (None, true) => Some(m.saturating_sub(1)),
        (None, false) => None,
    };
    if let Some(deg) = reach {
        if deg >= n {
            return Err(LabError::dim(format!(
                "B^{m} reaches degree {deg}, outside truncation {n}"
            )));
        }
    }
    let mut out = v.clone();
    for _ in 0..m {
        out = apply(p, &out);
    }
    Ok(out)
}

/// `B^m (0, 1) = (σ Σ_{k<m} e^{ikθ} z^{m-k-1}, e^{imθ})`.
pub fn power_closed_form(p: &BrownianShiftParams, m: usize, order: usize) -> Result<BrownianVector> {
    if m > order {
        return Err(LabError::dim(format!(
            "B^{m}(0,1) has degree {} outside truncation {order}",
            m - 1
        )));
    }
    let mut f = HardyVector::zeros(order);
    for k in 0..m {
        f.coeffs_mut()[m - k - 1] = p.sigma * Complex64::from_polar(1.0, k as f64 * p.theta);
    }
    Ok(BrownianVector::new(f, Complex64::from_polar(1.0, m as f64 * p.theta)))
}

/// `‖B‖ = √(1 + σ²)`.
pub fn operator_norm(p: &BrownianShiftParams) -> f64 {
    (1.0 + p.sigma * p.sigma).sqrt()
}

/// Dense `(N+1) × (N+1)` compression of an operator on `H² ⊕ ℂ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedOperator {
    entries: DMatrix<Complex64>,
}

impl TruncatedOperator {
    pub fn from_matrix(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() < 3 {
            return Err(LabError::dim(format!(
                "operator matrix must be square of size >= 3, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self { entries })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// Truncation order `N` of the `H²` part.
    pub fn order(&self) -> usize {
        self.entries.nrows() - 1
    }

    pub fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.adjoint(),
        }
    }

    pub fn apply(&self, v: &BrownianVector) -> Result<BrownianVector> {
        if v.order() != self.order() {
            return Err(LabError::dim(format!(
                "vector of order {} against operator of order {}",
                v.order(),
                self.order()
            )));
        }
        BrownianVector::from_column(&(&self.entries * v.to_column()))
    }

    /// Numerical rank: singular values above `tol` times the largest.
    pub fn numerical_rank(&self, tol: f64) -> usize {
        let sv = self.entries.clone().singular_values();
        let top = sv.max();
        if top == 0.0 {
            return 0;
        }
        sv.iter().filter(|&&s| s > tol * top.max(1.0)).count()
    }

    /// Largest singular value by power iteration on `A* A` from a seeded
    /// random start, capped at `10 (N + 1)` iterations.
    pub fn largest_singular_value(&self, seed: u64) -> SingularValueEstimate {
        let dim = self.entries.nrows();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = DVector::from_fn(dim, |_, _| {
            Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
        });
        x /= Complex64::new(x.norm(), 0.0);
        let gram = self.entries.adjoint() * &self.entries;
        let cap = 10 * dim;
        let mut lambda = 0.0;
        let mut residual = f64::INFINITY;
        let mut iterations = 0;
        while iterations < cap {
            iterations += 1;
            let y = &gram * &x;
            lambda = x.dotc(&y).re;
            residual = (&y - &x * Complex64::new(lambda, 0.0)).norm();
            let ny = y.norm();
            if ny == 0.0 {
                break;
            }
            x = y / Complex64::new(ny, 0.0);
            if residual <= 1e-15 * lambda.abs().max(1.0) {
                break;
            }
        }
        SingularValueEstimate {
            value: lambda.max(0.0).sqrt(),
            residual,
            iterations,
        }
    }

    /// Row-major CSV, one quoted `"re,im"` cell per entry.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.entries.nrows() {
            let row: Vec<String> = (0..self.entries.ncols())
                .map(|j| {
                    let c = self.entries[(i, j)];
                    format!("\"{:e},{:e}\"", c.re, c.im)
                })
                .collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

/// Power-iteration result for the top singular value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularValueEstimate {
    pub value: f64,
    /// `‖A*A x - λ x‖` at the final iterate.
    pub residual: f64,
    pub iterations: usize,
}

/// Exact norm next to the truncated estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormDiagnostic {
    pub exact: f64,
    pub truncated: SingularValueEstimate,
    pub gap: f64,
}

pub fn norm_diagnostic(p: &BrownianShiftParams, order: usize, seed: u64) -> Result<NormDiagnostic> {
    let t = truncated_matrix(p, order)?.largest_singular_value(seed);
    let exact = operator_norm(p);
    Ok(NormDiagnostic {
        exact,
        truncated: t,
        gap: (t.value - exact).abs(),
    })
}

fn check_order(order: usize) -> Result<()> {
    if order < 2 {
        return Err(LabError::dim(format!("truncation order must be >= 2, got {order}")));
    }
    Ok(())
}

/// Matrix of `B` on the truncation: column `k < N` is `B(z^k, 0)`, column `N`
/// is `B(0, 1)`.
pub fn truncated_matrix(p: &BrownianShiftParams, order: usize) -> Result<TruncatedOperator> {
    let (bs, r) = rank_one_decomposition(p, order)?;
    TruncatedOperator::from_matrix(bs.entries + r.entries)
}

/// `B = B_s + R` with `B_s = S ⊕ 1` and `R(f, α) = (σ α, (e^{iθ} - 1) α)`.
pub fn rank_one_decomposition(
    p: &BrownianShiftParams,
    order: usize,
) -> Result<(TruncatedOperator, TruncatedOperator)> {
    check_order(order)?;
    let n = order;
    let mut bs = DMatrix::zeros(n + 1, n + 1);
    for k in 0..n - 1 {
        bs[(k + 1, k)] = Complex64::new(1.0, 0.0);
    }
    bs[(n, n)] = Complex64::new(1.0, 0.0);
    let mut r = DMatrix::zeros(n + 1, n + 1);
    r[(0, n)] = Complex64::new(p.sigma, 0.0);
    r[(n, n)] = p.rotation() - 1.0;
    Ok((
        TruncatedOperator { entries: bs },
        TruncatedOperator { entries: r },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn apply_examples() {
        let p = BrownianShiftParams::new(0.7, 1.2).unwrap();
        let out = apply(&p, &BrownianVector::slot(4));
        assert_eq!(out.analytic.coeffs()[0], c(0.7, 0.0));
        assert!((out.scalar - p.rotation()).norm() < 1e-15);
        let out = apply(&p, &BrownianVector::monomial(0, 4));
        assert_eq!(out, BrownianVector::monomial(1, 4));
    }

    #[test]
    fn adjoint_examples() {
        let p = BrownianShiftParams::new(0.7, 1.2).unwrap();
        let out = apply_adjoint(&p, &BrownianVector::slot(4));
        assert!(out.analytic.norm() == 0.0 && (out.scalar - p.rotation().conj()).norm() < 1e-15);
        let out = apply_adjoint(&p, &BrownianVector::monomial(0, 4));
        assert_eq!(out.scalar, c(0.7, 0.0));
        assert_eq!(apply_adjoint(&p, &BrownianVector::monomial(3, 4)), BrownianVector::monomial(2, 4));
    }

    #[test]
    fn second_power_at_zero_angle() {
        let p = BrownianShiftParams::new(1.0, 0.0).unwrap();
        let v = power_apply(&p, 2, &BrownianVector::slot(8)).unwrap();
        let expect = BrownianVector::new(
            HardyVector::from_coeffs(&[c(1.0, 0.0), c(1.0, 0.0)], 8),
            c(1.0, 0.0),
        );
        assert!(v.max_abs_diff(&expect) < 1e-15);
        assert!((v.norm_sqr() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn power_overflow_is_a_dimension_error() {
        let p = BrownianShiftParams::new(1.0, 0.0).unwrap();
        assert!(power_apply(&p, 8, &BrownianVector::slot(8)).is_ok());
        assert!(matches!(
            power_apply(&p, 9, &BrownianVector::slot(8)),
            Err(LabError::Dimension(_))
        ));
        assert!(power_apply(&p, 3, &BrownianVector::monomial(5, 8)).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(BrownianShiftParams::new(0.0, 1.0).is_err());
        assert!(BrownianShiftParams::new(f64::NAN, 1.0).is_err());
        let p = BrownianShiftParams::new(1.0, -PI / 2.0).unwrap();
        assert!((p.theta() - 1.5 * PI).abs() < 1e-15);
        let parsed: std::result::Result<BrownianShiftParams, _> =
            serde_json::from_str(r#"{"sigma": -1, "theta": 0}"#);
        assert!(parsed.is_err());
        let parsed: BrownianShiftParams = serde_json::from_str(r#"{"sigma": 2, "theta": 7}"#).unwrap();
        assert!((parsed.theta() - (7.0 - 2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn matrix_columns() {
        let p = BrownianShiftParams::new(0.4, 0.9).unwrap();
        let t = truncated_matrix(&p, 5).unwrap();
        let m = t.matrix();
        assert_eq!(m[(0, 5)], c(0.4, 0.0));
        assert!((m[(5, 5)] - p.rotation()).norm() < 1e-15);
        assert!((0..6).all(|i| m[(i, 4)].norm() == 0.0));
        let adj = t.adjoint();
        for k in 0..5 {
            let e = BrownianVector::monomial(k, 5);
            assert!(adj.apply(&e).unwrap().max_abs_diff(&apply_adjoint(&p, &e)) < 1e-15);
        }
        let s = BrownianVector::slot(5);
        assert!(adj.apply(&s).unwrap().max_abs_diff(&apply_adjoint(&p, &s)) < 1e-15);
        assert!(truncated_matrix(&p, 1).is_err());
    }

    #[test]
    fn rank_one_perturbation() {
        let p = BrownianShiftParams::new(1.0, PI / 3.0).unwrap();
        let (bs, r) = rank_one_decomposition(&p, 16).unwrap();
        assert_eq!(r.numerical_rank(1e-10), 1);
        let v = BrownianVector::new(
            HardyVector::from_coeffs(&[c(0.3, 0.1), c(0.0, -0.5)], 16),
            c(0.2, 0.4),
        );
        let rv = r.apply(&v).unwrap();
        assert!((rv.analytic.coeffs()[0] - v.scalar).norm() < 1e-15);
        assert!((rv.scalar - (p.rotation() - 1.0) * v.scalar).norm() < 1e-15);
        assert!((bs.apply(&v).unwrap().norm() - v.norm()).abs() < 1e-15);
    }

    #[test]
    fn truncated_norm_matches() {
        let p = BrownianShiftParams::new(2.0, 0.3).unwrap();
        let d = norm_diagnostic(&p, 128, 7).unwrap();
        assert!(d.gap < 1e-6, "{d:?}");
        assert!((operator_norm(&BrownianShiftParams::new(1.0, 0.0).unwrap()) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn csv_layout() {
        let p = BrownianShiftParams::new(1.0, 0.0).unwrap();
        let csv = truncated_matrix(&p, 2).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].ends_with("\"1e0,0e0\""));
    }
}
