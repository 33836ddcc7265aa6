//! Power growth of `B` and decay of the normalized powers `B̃ⁿ`, `B̃*ⁿ` with
//! `B̃ = B/√(1+σ²)`.
//!
//! Everything here is coefficient arithmetic on the truncation; no
//! quadrature is involved.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;

use crate::brownian::{apply, apply_adjoint, BrownianShiftParams, BrownianVector};
use crate::error::{LabError, Result};

/// Slack allowed between a measured norm and its bound.
pub const BOUND_SLACK: f64 = 1e-12;

/// `‖B^m (0,1)‖²` for `m = 1..=m_max`; equals `1 + mσ²`.
pub fn power_norm_growth(p: &BrownianShiftParams, m_max: usize, order: usize) -> Result<Vec<f64>> {
    if m_max >= order {
        return Err(LabError::dim(format!("m_max = {m_max} must stay below truncation {order}")));
    }
    let mut v = BrownianVector::slot(order);
    Ok((0..m_max)
        .map(|_| {
            v = apply(p, &v);
            v.norm_sqr()
        })
        .collect())
}

/// Measured norms of a decaying orbit next to the bound they must respect.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub n_values: Vec<usize>,
    pub measured: Vec<f64>,
    pub bound: Vec<f64>,
    /// The coarser `O(1/n)` bound, defined for `n ≥ 2`.
    pub final_bound: Vec<Option<f64>>,
    pub satisfied: bool,
}

impl DecayReport {
    fn new(n_values: Vec<usize>, measured: Vec<f64>, bound: Vec<f64>, final_bound: Vec<Option<f64>>) -> Self {
        let satisfied = measured.iter().zip(&bound).all(|(m, b)| *m <= b + BOUND_SLACK);
        Self {
            n_values,
            measured,
            bound,
            final_bound,
            satisfied,
        }
    }

    /// Whether the `O(1/n)` bound dominates too, wherever it is defined.
    pub fn final_bound_satisfied(&self) -> bool {
        self.measured
            .iter()
            .zip(&self.final_bound)
            .all(|(m, b)| b.is_none_or(|b| *m <= b + BOUND_SLACK))
    }

    /// CSV with columns `n,measured,bound`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,measured,bound\n");
        for ((n, m), b) in self.n_values.iter().zip(&self.measured).zip(&self.bound) {
            let _ = writeln!(out, "{n},{m:e},{b:e}");
        }
        out
    }
}

fn normalizer(p: &BrownianShiftParams) -> f64 {
    1.0 / (1.0 + p.sigma() * p.sigma()).sqrt()
}

/// `‖B̃ⁿ u‖` for `n = 1..=n_max` against `√((‖u‖² + n|c₀|²σ²)/(1+σ²)ⁿ)`,
/// where `c₀` is the scalar part of `u`.
pub fn c00_forward_decay(p: &BrownianShiftParams, u: &BrownianVector, n_max: usize) -> Result<DecayReport> {
    let order = u.order();
    let reach = match (u.analytic.degree(), u.scalar.norm_sqr() > 0.0) {
        (Some(d), _) => d + n_max,
        (None, _) => n_max.saturating_sub(1),
    };
    if reach >= order {
        return Err(LabError::dim(format!(
            "orbit reaches degree {reach}, outside truncation {order}"
        )));
    }
    let s2 = p.sigma() * p.sigma();
    let (u2, c2) = (u.norm_sqr(), u.scalar.norm_sqr());
    let scale = Complex64::new(normalizer(p), 0.0);
    let mut v = u.clone();
    let mut measured = Vec::with_capacity(n_max);
    let mut bound = Vec::with_capacity(n_max);
    let mut fin = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        v = apply(p, &v).scale(scale);
        let nf = n as f64;
        measured.push(v.norm());
        bound.push(((u2 + nf * c2 * s2) / (1.0 + s2).powi(n as i32)).sqrt());
        fin.push((n >= 2).then(|| (2.0 / (s2 * s2) * (u2 / (nf * (nf - 1.0)) + s2 * c2 / (nf - 1.0))).sqrt()));
    }
    Ok(DecayReport::new((1..=n_max).collect(), measured, bound, fin))
}

/// `‖B̃*ⁿ u‖` for `n = 1..=n_max` against `√(‖u‖²(2 + nσ²)/(1+σ²)ⁿ)`. The
/// backward shift never leaves the truncation, so any `u` is allowed.
pub fn c00_adjoint_decay(p: &BrownianShiftParams, u: &BrownianVector, n_max: usize) -> Result<DecayReport> {
    let s2 = p.sigma() * p.sigma();
    let u2 = u.norm_sqr();
    let scale = Complex64::new(normalizer(p), 0.0);
    let mut v = u.clone();
    let mut measured = Vec::with_capacity(n_max);
    let mut bound = Vec::with_capacity(n_max);
    let mut fin = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        v = apply_adjoint(p, &v).scale(scale);
        let nf = n as f64;
        measured.push(v.norm());
        bound.push((u2 * (2.0 + nf * s2) / (1.0 + s2).powi(n as i32)).sqrt());
        fin.push((n >= 2).then(|| (2.0 * u2 / (s2 * s2) * (2.0 / (nf * (nf - 1.0)) + s2 / (nf - 1.0))).sqrt()));
    }
    Ok(DecayReport::new((1..=n_max).collect(), measured, bound, fin))
}

/// Basis vectors with closed-form adjoint orbits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitStart {
    /// `(0, 1)`.
    Slot,
    /// `(z^k, 0)`.
    Monomial(usize),
}

impl OrbitStart {
    pub fn vector(self, order: usize) -> BrownianVector {
        match self {
            OrbitStart::Slot => BrownianVector::slot(order),
            OrbitStart::Monomial(k) => BrownianVector::monomial(k, order),
        }
    }
}

/// `B̃*ⁿ` applied to a basis vector, in closed form:
/// `(0,1) ↦ e^{-inθ} s (0,1)`, `(z^k,0) ↦ σ e^{-i(n-k-1)θ} s (0,1)` for
/// `k < n`, and `(z^k,0) ↦ s (z^{k-n}, 0)` for `k ≥ n`, where
/// `s = (1+σ²)^{-n/2}`.
pub fn adjoint_power_closed_form(
    p: &BrownianShiftParams,
    start: OrbitStart,
    n: usize,
    order: usize,
) -> BrownianVector {
    let s = normalizer(p).powi(n as i32);
    let phase = |m: f64| Complex64::from_polar(s, -m * p.theta());
    match start {
        OrbitStart::Slot => BrownianVector::slot(order).scale(phase(n as f64)),
        OrbitStart::Monomial(k) if k < n => {
            BrownianVector::slot(order).scale(phase((n - k - 1) as f64) * p.sigma())
        }
        OrbitStart::Monomial(k) => BrownianVector::monomial(k - n, order).scale(Complex64::new(s, 0.0)),
    }
}

/// Smallest `n` at which all normalized forward and adjoint orbits of a
/// finite basis have dropped below `eps`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SotCertificate {
    pub sigma: f64,
    pub theta: f64,
    pub basis_size: usize,
    pub eps: f64,
    pub n_max: usize,
    /// Certified `n`, or `None` if the orbits were still above `eps` at `n_max`.
    pub certified_n: Option<usize>,
    /// Largest forward and adjoint orbit norms at the certified (or last) `n`.
    pub forward_max: f64,
    pub adjoint_max: f64,
    /// Smallest `n` at which the norm bound itself falls below `eps` for unit
    /// vectors: the `O(1/n)` bound, or the raw bound when `σ < 0.05`.
    pub bound_n: Option<usize>,
    pub raw_bound_only: bool,
}

/// Below this covariance the `O(1/n)` bound is too loose to report.
pub const RAW_BOUND_SIGMA: f64 = 0.05;

/// `sot_convergence_certificate` over the basis `(0,1), (z^0,0), …,
/// (z^{basis_size-2},0)`.
pub fn sot_convergence_certificate(
    p: &BrownianShiftParams,
    basis_size: usize,
    n_max: usize,
    eps: f64,
    order: usize,
) -> Result<SotCertificate> {
    if basis_size == 0 || basis_size + n_max >= order {
        return Err(LabError::dim(format!(
            "basis {basis_size} plus {n_max} steps does not fit truncation {order}"
        )));
    }
    let scale = Complex64::new(normalizer(p), 0.0);
    let starts: Vec<BrownianVector> = std::iter::once(OrbitStart::Slot)
        .chain((0..basis_size - 1).map(OrbitStart::Monomial))
        .map(|s| s.vector(order))
        .collect();
    let mut fwd = starts.clone();
    let mut adj = starts;
    let mut certified_n = None;
    let (mut fmax, mut amax) = (f64::INFINITY, f64::INFINITY);
    for n in 1..=n_max {
        fwd = fwd.iter().map(|v| apply(p, v).scale(scale)).collect();
        adj = adj.iter().map(|v| apply_adjoint(p, v).scale(scale)).collect();
        fmax = fwd.iter().map(BrownianVector::norm).fold(0.0, f64::max);
        amax = adj.iter().map(BrownianVector::norm).fold(0.0, f64::max);
        if fmax < eps && amax < eps {
            certified_n = Some(n);
            break;
        }
    }
    let s2 = p.sigma() * p.sigma();
    let raw_bound_only = p.sigma() < RAW_BOUND_SIGMA;
    let bound_at = |n: usize| -> f64 {
        let nf = n as f64;
        let sq = if raw_bound_only || n < 2 {
            // forward with |c₀| = ‖u‖ = 1 and adjoint, raw form
            ((1.0 + nf * s2).max(2.0 + nf * s2)) / (1.0 + s2).powf(nf)
        } else {
            let f = 2.0 / (s2 * s2) * (1.0 / (nf * (nf - 1.0)) + s2 / (nf - 1.0));
            let a = 2.0 / (s2 * s2) * (2.0 / (nf * (nf - 1.0)) + s2 / (nf - 1.0));
            f.max(a)
        };
        sq.sqrt()
    };
    let bound_n = (1..=n_max).find(|&n| bound_at(n) < eps);
    Ok(SotCertificate {
        sigma: p.sigma(),
        theta: p.theta(),
        basis_size,
        eps,
        n_max,
        certified_n,
        forward_max: fmax,
        adjoint_max: amax,
        bound_n,
        raw_bound_only,
    })
}
