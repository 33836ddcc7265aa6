use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::inner::InnerFunction;
use super::vector::HardyVector;
use crate::error::{LabError, Result};

/// Settings for Taylor-coefficient extraction by circle sampling.
#[derive(Debug, Clone, Copy)]
pub struct TaylorConfig {
    /// Allowed disagreement between the two sampling radii, and the slack for
    /// the re-evaluation check.
    pub tolerance: f64,
    /// Largest FFT grid tried before giving up.
    pub max_samples: usize,
}

impl Default for TaylorConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_samples: 1 << 20,
        }
    }
}

/// Sampling radii for order `n`. Rescaling by `r^{-k}` amplifies rounding by at
/// most `e^4` (outer) and `e^6` (inner) for every `k < n`.
fn radii(n: usize) -> (f64, f64) {
    let n = n.max(1) as f64;
    ((-4.0 / n).exp(), (-6.0 / n).exp())
}

fn sample_coefficients(
    phi: &InnerFunction,
    n: usize,
    radius: f64,
    samples: usize,
    planner: &mut FftPlanner<f64>,
) -> Result<Vec<Complex64>> {
    let mut buf = (0..samples)
        .map(|j| phi.eval(Complex64::from_polar(radius, TAU * j as f64 / samples as f64)))
        .collect::<Result<Vec<_>>>()?;
    planner.plan_fft_forward(samples).process(&mut buf);
    let scale = 1.0 / samples as f64;
    let mut rk = 1.0;
    Ok(buf[..n]
        .iter()
        .map(|x| {
            let c = x * scale / rk;
            rk *= radius;
            c
        })
        .collect())
}

/// First `n` Taylor coefficients of `φ` at the origin, using the default
/// [`TaylorConfig`].
pub fn taylor_coefficients(phi: &InnerFunction, n: usize) -> Result<HardyVector> {
    taylor_coefficients_with(phi, n, &TaylorConfig::default())
}

/// Samples `φ` on two circles inside the disc, takes the DFT and rescales by
/// `r^{-k}`. The grid doubles until both radii agree to `tolerance`; the result
/// is then re-evaluated against `φ` at interior test points.
pub fn taylor_coefficients_with(
    phi: &InnerFunction,
    n: usize,
    config: &TaylorConfig,
) -> Result<HardyVector> {
    if n == 0 {
        return Err(LabError::dim("Taylor extraction needs order >= 1"));
    }
    let (r_outer, r_inner) = radii(n);
    let mut planner = FftPlanner::new();
    let mut samples = (8 * n).max(64).next_power_of_two();
    let mut last_gap = f64::INFINITY;
    while samples <= config.max_samples {
        let outer = sample_coefficients(phi, n, r_outer, samples, &mut planner)?;
        let inner = sample_coefficients(phi, n, r_inner, samples, &mut planner)?;
        last_gap = outer
            .iter()
            .zip(&inner)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if last_gap <= config.tolerance {
            let v = HardyVector::from_vec(outer);
            check_reevaluation(phi, &v, config.tolerance)?;
            return Ok(v);
        }
        samples *= 2;
    }
    Err(LabError::Precision {
        what: format!("Taylor coefficients of order {n}"),
        achieved: last_gap,
        wanted: config.tolerance,
    })
}

/// Compares the truncated series with `φ` on `|z| = 1/2`. Since `|c_k| <= 1`
/// for an inner function, the neglected tail is at most `2^{1-n}`.
fn check_reevaluation(phi: &InnerFunction, v: &HardyVector, tol: f64) -> Result<()> {
    let n = v.order() as i32;
    let allowed = 10.0 * tol + 2.0 * 0.5f64.powi(n);
    let worst = (0..7)
        .map(|j| {
            let z = Complex64::from_polar(0.5, 0.37 + TAU * j as f64 / 7.0);
            phi.eval(z).map(|exact| (exact - v.eval(z)).norm())
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    if worst > allowed {
        return Err(LabError::Precision {
            what: "re-evaluation of truncated Taylor series".into(),
            achieved: worst,
            wanted: allowed,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_function() {
        let v = taylor_coefficients(&InnerFunction::blaschke_factor(c(0.0, 0.0)), 4).unwrap();
        let expect = [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        for (a, b) in v.coeffs().iter().zip(expect) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn blaschke_half_geometric_expansion() {
        let v = taylor_coefficients(&InnerFunction::blaschke_factor(c(0.5, 0.0)), 3).unwrap();
        let expect = [-0.5, 0.75, 0.375];
        for (a, b) in v.coeffs().iter().zip(expect) {
            assert!((a - c(b, 0.0)).norm() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn zero_order_is_rejected() {
        assert!(taylor_coefficients(&InnerFunction::one(), 0).is_err());
    }
}
