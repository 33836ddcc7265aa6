//! The model-space vector `g` and the projection onto `K_φ = H² ⊖ φH²`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::inner::InnerFunction;
use super::quadrature::{circle_norm_squared, QuadratureMethod};
use super::taylor::taylor_coefficients;
use super::vector::HardyVector;
use crate::error::{LabError, Result};

/// Relative size of `|h(e^{iθ})|` accepted by [`divide_by_boundary_root`].
pub const ROOT_TOLERANCE: f64 = 1e-8;

/// Quotient `q` with `h = (z - e^{iθ}) q`, without checking that `h`
/// vanishes at `e^{iθ}`. The first `N` coefficients of the quotient only
/// depend on the first `N` coefficients of `h`, so they are exact whenever
/// the untruncated `h` has the root.
pub fn divide_by_boundary_root_unchecked(h: &HardyVector, theta: f64) -> HardyVector {
    let rot = Complex64::from_polar(1.0, -theta);
    let mut q = HardyVector::zeros(h.order());
    let mut prev = Complex64::new(0.0, 0.0);
    for (qk, hk) in q.coeffs_mut().iter_mut().zip(h.coeffs()) {
        prev = rot * (prev - hk);
        *qk = prev;
    }
    q
}

/// `divide_by_boundary_root`: checked version of
/// [`divide_by_boundary_root_unchecked`].
pub fn divide_by_boundary_root(h: &HardyVector, theta: f64) -> Result<HardyVector> {
    let scale = h.norm();
    let residual = h.eval(Complex64::from_polar(1.0, theta)).norm();
    let tolerance = ROOT_TOLERANCE * scale;
    if residual > tolerance {
        return Err(LabError::NonvanishingAtRoot { residual, tolerance });
    }
    Ok(divide_by_boundary_root_unchecked(h, theta))
}

/// `μ = conj(φ(e^{iθ}))`, or an error at an atom.
pub fn boundary_conjugate(phi: &InnerFunction, theta: f64) -> Result<Complex64> {
    phi.boundary_eval(theta)
        .map(|v| v.conj())
        .ok_or(LabError::UndefinedBoundaryValue { angle: theta })
}

/// `g = σ (μ φ - 1) / (z - e^{iθ})` to order `n`.
pub fn make_g(phi: &InnerFunction, theta: f64, sigma: f64, n: usize) -> Result<HardyVector> {
    phi.validate()?;
    let mu = boundary_conjugate(phi, theta)?;
    let taylor = taylor_coefficients(phi, n)?;
    Ok(g_from_taylor(&taylor, mu, theta, sigma))
}

/// [`make_g`] from already extracted Taylor coefficients.
pub fn g_from_taylor(taylor: &HardyVector, mu: Complex64, theta: f64, sigma: f64) -> HardyVector {
    let mut h = taylor.scale(mu);
    h.coeffs_mut()[0] -= 1.0;
    divide_by_boundary_root_unchecked(&h, theta).scale(Complex64::new(sigma, 0.0))
}

/// `f - φ P₊(conj(φ) f)` with `φ` given by its Taylor coefficients.
pub fn project_with_taylor(f: &HardyVector, taylor: &HardyVector) -> Result<HardyVector> {
    if f.order() != taylor.order() {
        return Err(LabError::dim(format!(
            "projection of order {} with symbol of order {}",
            f.order(),
            taylor.order()
        )));
    }
    let n = f.order();
    let (fc, pc) = (f.coeffs(), taylor.coeffs());
    // P₊(conj(φ) f)_k = Σ_j conj(φ_j) f_{j+k}
    let anti: Vec<Complex64> = (0..n)
        .map(|k| (0..n - k).map(|j| pc[j].conj() * fc[j + k]).sum())
        .collect();
    let back = taylor.mul(&HardyVector::from_vec(anti))?;
    Ok(f - &back)
}

/// `model_space_project`: orthogonal projection onto `K_φ` on the truncation.
pub fn model_space_project(f: &HardyVector, phi: &InnerFunction) -> Result<HardyVector> {
    let taylor = taylor_coefficients(phi, f.order())?;
    project_with_taylor(f, &taylor)
}

/// Boundary values of `g`, evaluated in closed form from `φ`.
#[derive(Debug, Clone)]
pub struct GBoundary {
    phi: InnerFunction,
    theta: f64,
    sigma: f64,
    mu: Complex64,
}

/// Half-width of the interpolation window around the removable point.
const REMOVABLE_GAP: f64 = 1e-5;

impl GBoundary {
    pub fn new(phi: &InnerFunction, theta: f64, sigma: f64) -> Result<Self> {
        Ok(Self {
            mu: boundary_conjugate(phi, theta)?,
            phi: phi.clone(),
            theta,
            sigma,
        })
    }

    pub fn mu(&self) -> Complex64 {
        self.mu
    }

    fn direct(&self, t: f64) -> Complex64 {
        match self.phi.boundary_eval(t) {
            Some(v) => {
                let den = Complex64::from_polar(1.0, t) - Complex64::from_polar(1.0, self.theta);
                self.sigma * (self.mu * v - 1.0) / den
            }
            // a single point of measure zero
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// `g(e^{it})`. Within `1e-5` of the removable point the value is
    /// interpolated linearly from the window edges.
    pub fn eval(&self, t: f64) -> Complex64 {
        let d = (t - self.theta + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU)
            - std::f64::consts::PI;
        if d.abs() >= REMOVABLE_GAP {
            return self.direct(t);
        }
        let lo = self.direct(self.theta - REMOVABLE_GAP);
        let hi = self.direct(self.theta + REMOVABLE_GAP);
        let w = (d + REMOVABLE_GAP) / (2.0 * REMOVABLE_GAP);
        lo * (1.0 - w) + hi * w
    }
}

/// Which route produced a value of `‖g‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormRoute {
    /// Coefficient sum; the truncated series has converged.
    Parseval,
    /// Boundary quadrature; the coefficient tail had not converged.
    Quadrature,
}

/// True when the last quarter of the coefficients carries at most `1e-16` of
/// the energy, i.e. the truncated series represents the function.
pub fn has_converged(v: &HardyVector) -> bool {
    let n = v.order();
    let total = v.norm_sqr();
    total == 0.0 || v.tail_norm_sqr(n - n / 4) <= 1e-16 * total
}

/// `‖g‖²` from the coefficients when they have converged, otherwise from the
/// boundary values by quadrature.
pub fn g_norm_squared(g: &HardyVector, boundary: &GBoundary, tol: f64) -> Result<(f64, NormRoute)> {
    if has_converged(g) {
        return Ok((g.norm_sqr(), NormRoute::Parseval));
    }
    let method = QuadratureMethod::for_inner(&boundary.phi, &[boundary.theta]);
    let v = circle_norm_squared(|t| boundary.eval(t), &method, tol)?;
    Ok((v, NormRoute::Quadrature))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn division_examples() {
        let h = HardyVector::from_coeffs(&[c(-1.0, 0.0), c(1.0, 0.0)], 4);
        let q = divide_by_boundary_root(&h, 0.0).unwrap();
        assert!(q.max_abs_diff(&HardyVector::monomial(0, 4)) < 1e-15);
        let h = HardyVector::from_coeffs(&[c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], 4);
        let q = divide_by_boundary_root(&h, 0.0).unwrap();
        let expect = HardyVector::from_coeffs(&[c(1.0, 0.0), c(1.0, 0.0)], 4);
        assert!(q.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn nonvanishing_is_rejected() {
        let h = HardyVector::from_coeffs(&[c(1.0, 0.0), c(1.0, 0.0)], 4);
        assert!(matches!(
            divide_by_boundary_root(&h, 0.0),
            Err(LabError::NonvanishingAtRoot { .. })
        ));
    }

    #[test]
    fn g_for_identity_is_constant() {
        let theta = 0.8;
        let g = make_g(&InnerFunction::blaschke_factor(c(0.0, 0.0)), theta, 1.5, 16).unwrap();
        let expect = HardyVector::constant(Complex64::from_polar(1.5, -theta), 16);
        assert!(g.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn g_norm_for_half_blaschke() {
        let phi = InnerFunction::blaschke_factor(c(0.5, 0.0));
        let g = make_g(&phi, 0.0, 1.0, 128).unwrap();
        assert!((g.norm_sqr() - 3.0).abs() < 1e-10);
        let b = GBoundary::new(&phi, 0.0, 1.0).unwrap();
        let q = circle_norm_squared(|t| b.eval(t), &QuadratureMethod::Uniform, 1e-11).unwrap();
        assert!((q - 3.0).abs() < 1e-9, "{q}");
    }

    #[test]
    fn g_at_atom_is_undefined() {
        let phi = InnerFunction::atomic(0.0, 1.0);
        assert!(matches!(
            make_g(&phi, 0.0, 1.0, 32),
            Err(LabError::UndefinedBoundaryValue { .. })
        ));
    }

    #[test]
    fn atomic_g_norm_by_quadrature() {
        let phi = InnerFunction::atomic(0.0, 1.0);
        let g = make_g(&phi, std::f64::consts::PI, 1.0, 256).unwrap();
        let b = GBoundary::new(&phi, std::f64::consts::PI, 1.0).unwrap();
        let (v, route) = g_norm_squared(&g, &b, 1e-10).unwrap();
        assert_eq!(route, NormRoute::Quadrature);
        assert!((v - 0.5).abs() < 1e-9, "{v}");
    }

    #[test]
    fn projection_onto_constants() {
        let f = HardyVector::from_coeffs(&[c(3.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], 4);
        let p = model_space_project(&f, &InnerFunction::blaschke_factor(c(0.0, 0.0))).unwrap();
        assert!(p.max_abs_diff(&HardyVector::constant(c(3.0, 0.0), 4)) < 1e-12);
    }

    #[test]
    fn g_lies_in_model_space() {
        let phi = InnerFunction::blaschke(&[c(0.3, 0.2), c(-0.4, 0.1)], 0.3);
        let g = make_g(&phi, 1.1, 0.7, 64).unwrap();
        let p = model_space_project(&g, &phi).unwrap();
        assert!(p.max_abs_diff(&g) < 1e-10);
    }
}
