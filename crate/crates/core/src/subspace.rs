//! Invariant subspaces of the Brownian shift and unitary equivalence of the
//! restrictions.
//!
//! A Type I subspace is `φH² ⊕ {0}`; a Type II subspace is
//! `ℂ[g; 1] ⊕ (φH² ⊕ {0})` with `g = σ(μφ - 1)/(z - e^{iθ})`. Restrictions
//! are represented in the canonical vectors `[g; 1], [μφ z^k; 0]` (Type II) or
//! `[φ z^k; 0]` (Type I), with the Gram matrix and the compression of `B`
//! computed either from truncated coefficients or, when `φ` has boundary
//! atoms and its coefficients converge too slowly, from boundary values.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::brownian::{truncated_matrix, BrownianShiftParams, BrownianVector};
use crate::error::{LabError, Result};
use crate::hardy::inner::angle_distance;
use crate::hardy::model::{g_from_taylor, has_converged, GBoundary, NormRoute};
use crate::hardy::quadrature::{circle_means, circle_norm_squared, FnIntegrand, QuadratureMethod};
use crate::hardy::{taylor_coefficients, HardyVector, InnerFunction};

pub const DEFAULT_ORDER: usize = 256;
pub const DEFAULT_TOL_THETA: f64 = 1e-9;
pub const DEFAULT_TOL_RATIO: f64 = 1e-6;
/// Largest invariance residual accepted as "invariant" by the classifier.
pub const INVARIANCE_TOLERANCE: f64 = 1e-6;
/// Canonical vectors used by the boundary-value backend.
pub const BOUNDARY_BASIS: usize = 8;
/// Guard coefficients between the basis and the truncation edge.
const GUARD: usize = 8;
const QUAD_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubspaceKind {
    #[serde(rename = "type1")]
    TypeI,
    #[serde(rename = "type2")]
    TypeII,
}

/// JSON form of a subspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubspaceDescriptor {
    pub kind: SubspaceKind,
    pub phi: InnerFunction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

/// Derived data of a Type II subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeIIData {
    pub theta: f64,
    pub sigma: f64,
    pub g: HardyVector,
    pub mu: Complex64,
    /// Value used by the classifier: Parseval when the coefficients of `g`
    /// have converged, boundary quadrature otherwise.
    pub g_norm_sq: f64,
    pub route: NormRoute,
    pub parseval_norm_sq: f64,
    pub quadrature_norm_sq: f64,
}

/// An invariant subspace with its derived data computed at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceSpec {
    descriptor: SubspaceDescriptor,
    order: usize,
    taylor: HardyVector,
    effective_degree: usize,
    type2: Option<TypeIIData>,
}

impl Serialize for SubspaceSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.descriptor.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SubspaceSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let desc = SubspaceDescriptor::deserialize(d)?;
        SubspaceSpec::build(desc, DEFAULT_ORDER).map_err(serde::de::Error::custom)
    }
}

/// Index past which the coefficients of `φ` carry less than `1e-20` of
/// energy, capped at half the truncation.
fn effective_degree(taylor: &HardyVector) -> usize {
    let n = taylor.order();
    let mut tail = 0.0;
    let mut idx = n;
    for (k, c) in taylor.coeffs().iter().enumerate().rev() {
        tail += c.norm_sqr();
        if tail >= 1e-20 {
            idx = k + 1;
            break;
        }
        idx = k;
    }
    idx.min(n / 2)
}

impl SubspaceSpec {
    pub fn type1(phi: InnerFunction, order: usize) -> Result<Self> {
        Self::build(
            SubspaceDescriptor {
                kind: SubspaceKind::TypeI,
                phi,
                theta: None,
                sigma: None,
            },
            order,
        )
    }

    pub fn type2(phi: InnerFunction, theta: f64, sigma: f64, order: usize) -> Result<Self> {
        Self::build(
            SubspaceDescriptor {
                kind: SubspaceKind::TypeII,
                phi,
                theta: Some(theta),
                sigma: Some(sigma),
            },
            order,
        )
    }

    pub fn build(desc: SubspaceDescriptor, order: usize) -> Result<Self> {
        desc.phi.validate()?;
        if order < 2 * GUARD + 2 {
            return Err(LabError::dim(format!("truncation {order} too small for a subspace basis")));
        }
        let taylor = taylor_coefficients(&desc.phi, order)?;
        let effective_degree = effective_degree(&taylor);
        let type2 = match desc.kind {
            SubspaceKind::TypeI => {
                if desc.theta.is_some() || desc.sigma.is_some() {
                    return Err(LabError::Schema("type1 subspaces take no theta or sigma".into()));
                }
                None
            }
            SubspaceKind::TypeII => {
                let (Some(theta), Some(sigma)) = (desc.theta, desc.sigma) else {
                    return Err(LabError::Schema("type2 subspaces need theta and sigma".into()));
                };
                let p = BrownianShiftParams::new(sigma, theta)?;
                let boundary = GBoundary::new(&desc.phi, p.theta(), sigma)?;
                let g = g_from_taylor(&taylor, boundary.mu(), p.theta(), sigma);
                let parseval = g.norm_sqr();
                let method = QuadratureMethod::for_inner(&desc.phi, &[p.theta()]);
                let quad = circle_norm_squared(|t| boundary.eval(t), &method, QUAD_TOL)?;
                let (g_norm_sq, route) = if has_converged(&g) {
                    (parseval, NormRoute::Parseval)
                } else {
                    (quad, NormRoute::Quadrature)
                };
                Some(TypeIIData {
                    theta: p.theta(),
                    sigma,
                    mu: boundary.mu(),
                    g,
                    g_norm_sq,
                    route,
                    parseval_norm_sq: parseval,
                    quadrature_norm_sq: quad,
                })
            }
        };
        if order < effective_degree + GUARD + 2 {
            return Err(LabError::dim("truncation leaves no room for the basis"));
        }
        Ok(Self {
            descriptor: desc,
            order,
            taylor,
            effective_degree,
            type2,
        })
    }

    /// Same subspace at another truncation order.
    pub fn with_order(&self, order: usize) -> Result<Self> {
        Self::build(self.descriptor.clone(), order)
    }

    pub fn kind(&self) -> SubspaceKind {
        self.descriptor.kind
    }

    pub fn phi(&self) -> &InnerFunction {
        &self.descriptor.phi
    }

    pub fn descriptor(&self) -> &SubspaceDescriptor {
        &self.descriptor
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn type2_data(&self) -> Option<&TypeIIData> {
        self.type2.as_ref()
    }

    /// `‖g‖²` for Type II, `None` for Type I.
    pub fn g_norm_sq(&self) -> Option<f64> {
        self.type2.as_ref().map(|d| d.g_norm_sq)
    }

    /// The operator this subspace was built for (Type II only).
    pub fn native_params(&self) -> Option<BrownianShiftParams> {
        self.type2
            .as_ref()
            .map(|d| BrownianShiftParams::new(d.sigma, d.theta).expect("validated at construction"))
    }

    /// Whether restrictions are computed from boundary values.
    pub fn uses_boundary_backend(&self) -> bool {
        !self.phi().atoms().is_empty()
    }

    /// Number of `φ z^k` vectors in the coefficient basis.
    fn phi_block(&self) -> usize {
        self.order - self.effective_degree - GUARD
    }

    fn canonical_len(&self) -> usize {
        let extra = usize::from(self.kind() == SubspaceKind::TypeII);
        if self.uses_boundary_backend() {
            BOUNDARY_BASIS
        } else {
            self.phi_block() + extra
        }
    }

    /// Canonical (unnormalized) vectors in coefficient form.
    fn canonical_vectors(&self, count: usize) -> Vec<BrownianVector> {
        let zero = Complex64::new(0.0, 0.0);
        let mut out = Vec::with_capacity(count);
        let mu = match &self.type2 {
            Some(d) => {
                out.push(BrownianVector::new(d.g.clone(), Complex64::new(1.0, 0.0)));
                d.mu
            }
            None => Complex64::new(1.0, 0.0),
        };
        let phi = self.taylor.scale(mu);
        let mut k = 0;
        while out.len() < count {
            out.push(BrownianVector::new(phi.shift_by(k), zero));
            k += 1;
        }
        out
    }
}

/// `basis`: orthonormal (up to truncation) vectors spanning the subspace:
/// `[g; 1]/√(1 + ‖g‖²)` for Type II, then `[φ z^k; 0]`.
pub fn basis(spec: &SubspaceSpec) -> Vec<BrownianVector> {
    let zero = Complex64::new(0.0, 0.0);
    let mut out = Vec::new();
    if let Some(d) = &spec.type2 {
        let v = BrownianVector::new(d.g.clone(), Complex64::new(1.0, 0.0));
        let n = v.norm();
        out.push(v.scale(Complex64::new(1.0 / n, 0.0)));
    }
    for k in 0..spec.phi_block() {
        out.push(BrownianVector::new(spec.taylor.shift_by(k), zero));
    }
    out
}

fn columns(vs: &[BrownianVector]) -> DMatrix<Complex64> {
    let rows = vs[0].order() + 1;
    let mut m = DMatrix::zeros(rows, vs.len());
    for (j, v) in vs.iter().enumerate() {
        m.set_column(j, &v.to_column());
    }
    m
}

/// Frobenius distance of the Gram matrix of `vs` from the identity.
pub fn gram_residual(vs: &[BrownianVector]) -> f64 {
    let v = columns(vs);
    let g = v.adjoint() * &v;
    (g - DMatrix::identity(vs.len(), vs.len())).norm()
}

/// Largest relative distance of `B b` from the span of the basis, over all
/// basis vectors except the last (whose image leaves the finite basis).
pub fn invariance_residual(spec: &SubspaceSpec, p: &BrownianShiftParams) -> Result<f64> {
    let vs = basis(spec);
    let v = columns(&vs);
    let images = apply_columns(p, &v);
    // projection through the (near-identity) Gram matrix of the basis
    let gram = adjoint_mul(&v, &v);
    let chol = gram
        .cholesky()
        .ok_or_else(|| LabError::ContractViolation("basis Gram matrix is not positive definite".into()))?;
    let coeffs = chol.solve(&adjoint_mul(&v, &images));
    let proj = mul(&v, &coeffs);
    let mut worst: f64 = 0.0;
    for j in 0..vs.len() - 1 {
        let r = (images.column(j) - proj.column(j)).norm() / v.column(j).norm();
        worst = worst.max(r);
    }
    Ok(worst)
}

/// `B` applied to every column of `v` (columns in the layout of
/// [`BrownianVector::to_column`]), using the shift structure instead of a
/// dense product.
fn apply_columns(p: &BrownianShiftParams, v: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = v.nrows() - 1;
    let mut out = DMatrix::zeros(n + 1, v.ncols());
    for j in 0..v.ncols() {
        let slot = v[(n, j)];
        out[(0, j)] = slot * p.sigma();
        for k in 1..n {
            out[(k, j)] = v[(k - 1, j)];
        }
        out[(n, j)] = p.rotation() * slot;
    }
    out
}

fn split(a: &DMatrix<Complex64>) -> (DMatrix<f64>, DMatrix<f64>) {
    (a.map(|z| z.re), a.map(|z| z.im))
}

fn join(re: DMatrix<f64>, im: &DMatrix<f64>) -> DMatrix<Complex64> {
    re.zip_map(im, Complex64::new)
}

/// `a b`, through real products (which take nalgebra's fast GEMM path).
fn mul(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    join(&ar * &br - &ai * &bi, &(&ar * &bi + &ai * &br))
}

/// `aᴴ b`.
fn adjoint_mul(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (ar, ai) = split(a);
    let (ar, ai) = (ar.transpose(), ai.transpose());
    let (br, bi) = split(b);
    join(&ar * &br + &ai * &bi, &(&ar * &bi - &ai * &br))
}

/// How a restriction matrix was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GramBackend {
    Coefficients,
    Boundary,
}

/// Compression of `B` to the span of the canonical vectors `v_0 … v_{K-1}`.
#[derive(Debug, Clone)]
pub struct Restriction {
    /// `G_{ij} = ⟨v_j, v_i⟩`.
    pub gram: DMatrix<Complex64>,
    /// `M_{ij} = ⟨B v_j, v_i⟩`.
    pub compressed: DMatrix<Complex64>,
    /// Lower Cholesky factor of `G`.
    pub chol: DMatrix<Complex64>,
    /// `L⁻¹ M L⁻ᴴ`, the compression in orthonormal coordinates.
    pub matrix: DMatrix<Complex64>,
    pub backend: GramBackend,
}

impl Restriction {
    pub fn size(&self) -> usize {
        self.gram.nrows()
    }

    pub fn singular_values(&self) -> Vec<f64> {
        let mut sv: Vec<f64> = self.matrix.clone().singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }
}

fn boundary_system(
    spec: &SubspaceSpec,
    p: &BrownianShiftParams,
    k: usize,
) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    let phi = spec.phi().clone();
    let type2 = spec.type2.clone();
    let gb = match &type2 {
        Some(d) => Some(GBoundary::new(&phi, d.theta, d.sigma)?),
        None => None,
    };
    let offset = usize::from(gb.is_some());
    let mu = type2.as_ref().map_or(Complex64::new(1.0, 0.0), |d| d.mu);
    let scalars: Vec<Complex64> = (0..k)
        .map(|j| if j < offset { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
        .collect();
    let (sigma_p, rot_p) = (p.sigma(), p.rotation());
    let upper: Vec<(usize, usize)> = (0..k).flat_map(|i| (i..k).map(move |j| (i, j))).collect();
    let n_gram = upper.len();
    let integrand = FnIntegrand {
        dim: n_gram + k * k,
        f: |t: f64, out: &mut [Complex64]| {
            let z = Complex64::from_polar(1.0, t);
            let pv = phi.boundary_eval(t).unwrap_or(Complex64::new(0.0, 0.0));
            let mut f = Vec::with_capacity(k);
            if let Some(g) = &gb {
                f.push(g.eval(t));
            }
            let mut zk = mu * pv;
            while f.len() < k {
                f.push(zk);
                zk *= z;
            }
            for (slot, &(i, j)) in out.iter_mut().zip(&upper) {
                *slot = f[j] * f[i].conj();
            }
            for j in 0..k {
                let bf = z * f[j] + sigma_p * scalars[j];
                for i in 0..k {
                    out[n_gram + j * k + i] = bf * f[i].conj();
                }
            }
        },
    };
    let breaks: Vec<f64> = type2.iter().map(|d| d.theta).collect();
    let method = QuadratureMethod::for_inner(spec.phi(), &breaks);
    let means = circle_means(&integrand, &method, QUAD_TOL)?;
    let mut gram = DMatrix::zeros(k, k);
    for (idx, &(i, j)) in upper.iter().enumerate() {
        let v = means.values[idx] + scalars[j] * scalars[i].conj();
        gram[(i, j)] = v;
        gram[(j, i)] = v.conj();
    }
    for i in 0..k {
        gram[(i, i)] = Complex64::new(gram[(i, i)].re, 0.0);
    }
    let mut m = DMatrix::zeros(k, k);
    for j in 0..k {
        for i in 0..k {
            m[(i, j)] = means.values[n_gram + j * k + i] + rot_p * scalars[j] * scalars[i].conj();
        }
    }
    Ok((gram, m))
}

/// Canonical-vector count used by [`restriction`] when no size is requested.
pub fn default_restriction_size(spec: &SubspaceSpec) -> usize {
    spec.canonical_len()
}

/// Compression of `B_p` to the first `size` canonical vectors of `spec`.
pub fn restriction(spec: &SubspaceSpec, p: &BrownianShiftParams, size: Option<usize>) -> Result<Restriction> {
    let max = spec.canonical_len();
    let k = size.unwrap_or(max);
    if k < 2 || k > max {
        return Err(LabError::dim(format!("restriction size {k} outside 2..={max}")));
    }
    let (gram, compressed, backend) = if spec.uses_boundary_backend() {
        let (g, m) = boundary_system(spec, p, k)?;
        (g, m, GramBackend::Boundary)
    } else {
        let v = columns(&spec.canonical_vectors(k));
        let g = adjoint_mul(&v, &v);
        let m = adjoint_mul(&v, &apply_columns(p, &v));
        (g, m, GramBackend::Coefficients)
    };
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| LabError::ContractViolation("canonical Gram matrix is not positive definite".into()))?
        .l();
    let left = chol
        .solve_lower_triangular(&compressed)
        .ok_or_else(|| LabError::dim("singular Cholesky factor"))?;
    let matrix = chol
        .solve_lower_triangular(&left.adjoint())
        .ok_or_else(|| LabError::dim("singular Cholesky factor"))?
        .adjoint();
    Ok(Restriction {
        gram,
        compressed,
        chol,
        matrix,
        backend,
    })
}

/// Why two restrictions are or are not unitarily equivalent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquivalenceReason {
    #[serde(rename = "both_type_I")]
    BothTypeI,
    #[serde(rename = "type_mismatch")]
    TypeMismatch,
    #[serde(rename = "angle_mismatch")]
    AngleMismatch,
    #[serde(rename = "ratio_mismatch")]
    RatioMismatch,
    #[serde(rename = "type_II_match")]
    TypeIIMatch,
}

impl EquivalenceReason {
    pub fn is_equivalent(self) -> bool {
        matches!(self, EquivalenceReason::BothTypeI | EquivalenceReason::TypeIIMatch)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EquivalenceReason::BothTypeI => "both_type_I",
            EquivalenceReason::TypeMismatch => "type_mismatch",
            EquivalenceReason::AngleMismatch => "angle_mismatch",
            EquivalenceReason::RatioMismatch => "ratio_mismatch",
            EquivalenceReason::TypeIIMatch => "type_II_match",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceVerdict {
    pub equivalent: bool,
    pub reason: EquivalenceReason,
    /// `|σ₂²(1+‖g₁‖²) − σ₁²(1+‖g₂‖²)|` over the larger of the two terms; only
    /// for pairs of Type II subspaces.
    pub ratio_residual: Option<f64>,
}

/// A subspace together with the operator it is invariant under.
pub type Pairing<'a> = (&'a SubspaceSpec, &'a BrownianShiftParams);

fn require_invariant(spec: &SubspaceSpec, p: &BrownianShiftParams) -> Result<()> {
    let r = invariance_residual(spec, p)?;
    if r > INVARIANCE_TOLERANCE {
        return Err(LabError::ContractViolation(format!(
            "subspace is not invariant under (sigma={}, theta={}): residual {r:e}",
            p.sigma(),
            p.theta()
        )));
    }
    Ok(())
}

/// Relative mismatch of `σ₂²(1+‖g₁‖²)` and `σ₁²(1+‖g₂‖²)`.
pub fn ratio_residual(a: &TypeIIData, b: &TypeIIData) -> f64 {
    let lhs = b.sigma * b.sigma * (1.0 + a.g_norm_sq);
    let rhs = a.sigma * a.sigma * (1.0 + b.g_norm_sq);
    (lhs - rhs).abs() / lhs.max(rhs)
}

/// The covariance `σ₂` for which the Type II subspace of `phi` at the angle
/// of `a` satisfies the ratio identity against `a`, if one exists. Uses that
/// `‖g‖²` scales with `σ²`.
pub fn matching_sigma(a: &SubspaceSpec, phi: &InnerFunction) -> Result<Option<f64>> {
    let d = a
        .type2_data()
        .ok_or_else(|| LabError::ContractViolation("matching needs a Type II subspace".into()))?;
    let unit = SubspaceSpec::type2(phi.clone(), d.theta, 1.0, a.order())?;
    let k = unit.g_norm_sq().unwrap_or(0.0);
    let den = 1.0 + d.g_norm_sq - d.sigma * d.sigma * k;
    Ok((den > 0.0).then(|| d.sigma / den.sqrt()))
}

pub fn classify_equivalence(a: Pairing, b: Pairing, tol_theta: f64, tol_ratio: f64) -> Result<EquivalenceVerdict> {
    require_invariant(a.0, a.1)?;
    require_invariant(b.0, b.1)?;
    let verdict = |reason: EquivalenceReason, ratio| EquivalenceVerdict {
        equivalent: reason.is_equivalent(),
        reason,
        ratio_residual: ratio,
    };
    Ok(match (a.0.type2_data(), b.0.type2_data()) {
        (None, None) => verdict(EquivalenceReason::BothTypeI, None),
        (Some(_), None) | (None, Some(_)) => verdict(EquivalenceReason::TypeMismatch, None),
        (Some(da), Some(db)) => {
            let ratio = ratio_residual(da, db);
            let reason = if angle_distance(da.theta, db.theta) >= tol_theta {
                EquivalenceReason::AngleMismatch
            } else if ratio > tol_ratio {
                EquivalenceReason::RatioMismatch
            } else {
                EquivalenceReason::TypeIIMatch
            };
            verdict(reason, Some(ratio))
        }
    })
}

/// [`classify_equivalence`] with the default tolerances.
pub fn classify(a: Pairing, b: Pairing) -> Result<EquivalenceVerdict> {
    classify_equivalence(a, b, DEFAULT_TOL_THETA, DEFAULT_TOL_RATIO)
}

/// Unitary `U: 𝓜₁ → 𝓜₂` with `U B|𝓜₁ = B|𝓜₂ U`, in orthonormal coordinates
/// of the two truncated canonical bases.
#[derive(Debug, Clone)]
pub struct Intertwiner {
    pub matrix: DMatrix<Complex64>,
    pub domain: SubspaceSpec,
    pub codomain: SubspaceSpec,
    /// Diagonal of `U` in canonical coordinates.
    pub canonical_scale: Vec<Complex64>,
    /// `‖Uᴴ U − I‖_F`.
    pub isometry_residual: f64,
    /// `‖U A₁ − A₂ U‖_F` over all columns but the last.
    pub intertwining_residual: f64,
    pub backends: (GramBackend, GramBackend),
}

/// Common size of the canonical bases used for a pair.
fn pair_size(a: &SubspaceSpec, b: &SubspaceSpec) -> usize {
    a.canonical_len().min(b.canonical_len())
}

pub fn build_intertwiner(a: Pairing, b: Pairing, size: Option<usize>) -> Result<Intertwiner> {
    let verdict = classify(a, b)?;
    if !verdict.equivalent {
        return Err(LabError::ContractViolation(format!(
            "restrictions are not unitarily equivalent ({})",
            verdict.reason.as_str()
        )));
    }
    let k = size.unwrap_or_else(|| pair_size(a.0, b.0));
    let ra = restriction(a.0, a.1, Some(k))?;
    let rb = restriction(b.0, b.1, Some(k))?;
    let mut scale = vec![Complex64::new(1.0, 0.0); k];
    if let (Some(da), Some(db)) = (a.0.type2_data(), b.0.type2_data()) {
        // U[g₁; 1] = (σ₁/σ₂)[g₂; 1]
        scale[0] = Complex64::new(da.sigma / db.sigma, 0.0);
    }
    let d = DMatrix::from_diagonal(&DVector::from_vec(scale.clone()));
    // U = L₂ᴴ D L₁⁻ᴴ
    let right = ra
        .chol
        .solve_lower_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| LabError::dim("singular Cholesky factor"))?
        .adjoint();
    let u = rb.chol.adjoint() * d * right;
    let isometry_residual = (u.adjoint() * &u - DMatrix::identity(k, k)).norm();
    let diff = &u * &ra.matrix - &rb.matrix * &u;
    let intertwining_residual = diff.columns(0, k - 1).norm();
    Ok(Intertwiner {
        matrix: u,
        domain: a.0.clone(),
        codomain: b.0.clone(),
        canonical_scale: scale,
        isometry_residual,
        intertwining_residual,
        backends: (ra.backend, rb.backend),
    })
}

/// `reduce_restriction`: `B|𝓜 ≅ B_{σ/√(1+‖g‖²), e^{iθ}}`.
pub fn reduce_restriction(spec: &SubspaceSpec, p: &BrownianShiftParams) -> Result<BrownianShiftParams> {
    let d = spec
        .type2_data()
        .ok_or_else(|| LabError::ContractViolation("reduction applies to Type II subspaces".into()))?;
    require_invariant(spec, p)?;
    BrownianShiftParams::new(d.sigma / (1.0 + d.g_norm_sq).sqrt(), d.theta)
}

/// Singular values of the restriction next to those of the reduced operator.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumComparison {
    pub reduced: BrownianShiftParams,
    pub restricted: Vec<f64>,
    pub reference: Vec<f64>,
    pub max_gap: f64,
}

pub fn compare_reduced_spectrum(
    spec: &SubspaceSpec,
    p: &BrownianShiftParams,
    size: Option<usize>,
) -> Result<SpectrumComparison> {
    let reduced = reduce_restriction(spec, p)?;
    let r = restriction(spec, p, size)?;
    let k = r.size();
    let restricted = r.singular_values();
    // the reduced operator on a k-dimensional truncation: k - 1 coefficients
    // plus the slot
    let mut reference: Vec<f64> = truncated_matrix(&reduced, k - 1)?
        .matrix()
        .clone()
        .singular_values()
        .iter()
        .copied()
        .collect();
    reference.sort_by(|a, b| b.total_cmp(a));
    let max_gap = restricted
        .iter()
        .zip(&reference)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(SpectrumComparison {
        reduced,
        restricted,
        reference,
        max_gap,
    })
}

/// Unitary invariants that separate non-equivalent restrictions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObstructionWitness {
    /// Restricted norms from the truncated compressions.
    pub computed_norms: (f64, f64),
    /// `1` for Type I, `√(1 + σ²/(1+‖g‖²))` for Type II.
    pub expected_norms: (f64, f64),
    pub norm_gap: f64,
    /// `|norm_gap − expected gap|`.
    pub gap_error: f64,
    /// `|⟨A x, x⟩₁ − ⟨A x, x⟩₂|` for the norm-attaining unit vectors, when
    /// both restrictions have a simple top singular value.
    pub phase_gap: Option<f64>,
}

fn expected_norm(spec: &SubspaceSpec) -> f64 {
    match spec.type2_data() {
        None => 1.0,
        Some(d) => (1.0 + d.sigma * d.sigma / (1.0 + d.g_norm_sq)).sqrt(),
    }
}

/// `⟨A x, x⟩` for the top right singular vector of `A`, or `None` when the top
/// singular value is not separated from the next.
fn top_phase(a: &DMatrix<Complex64>) -> Option<Complex64> {
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t?;
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    if idx.len() > 1 && svd.singular_values[idx[0]] - svd.singular_values[idx[1]] < 1e-8 {
        return None;
    }
    let x: DVector<Complex64> = v_t.row(idx[0]).adjoint();
    Some(x.dotc(&(a * &x)))
}

pub fn obstruction_witness(a: Pairing, b: Pairing) -> Result<ObstructionWitness> {
    let ra = restriction(a.0, a.1, None)?;
    let rb = restriction(b.0, b.1, None)?;
    let na = ra.singular_values()[0];
    let nb = rb.singular_values()[0];
    let expected = (expected_norm(a.0), expected_norm(b.0));
    let phase_gap = match (top_phase(&ra.matrix), top_phase(&rb.matrix)) {
        (Some(x), Some(y)) => Some((x - y).norm()),
        _ => None,
    };
    Ok(ObstructionWitness {
        computed_norms: (na, nb),
        expected_norms: expected,
        norm_gap: (na - nb).abs(),
        gap_error: ((na - nb).abs() - (expected.0 - expected.1).abs()).abs(),
        phase_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn params(sigma: f64, theta: f64) -> BrownianShiftParams {
        BrownianShiftParams::new(sigma, theta).unwrap()
    }

    #[test]
    fn type1_basis_for_identity_is_shifted_monomials() {
        let spec = SubspaceSpec::type1(InnerFunction::blaschke_factor(c(0.0, 0.0)), 64).unwrap();
        let b = basis(&spec);
        for (k, v) in b.iter().take(5).enumerate() {
            assert!(v.max_abs_diff(&BrownianVector::monomial(k + 1, 64)) < 1e-12);
        }
    }

    #[test]
    fn trivial_type2_starts_with_the_slot() {
        let spec = SubspaceSpec::type2(InnerFunction::one(), 1.0, 0.5, 64).unwrap();
        assert_eq!(spec.g_norm_sq(), Some(0.0));
        assert!(basis(&spec)[0].max_abs_diff(&BrownianVector::slot(64)) < 1e-14);
    }

    #[test]
    fn type2_gram_is_identity() {
        let spec = SubspaceSpec::type2(InnerFunction::blaschke_factor(c(0.5, 0.0)), 0.0, 1.0, 256).unwrap();
        assert!(gram_residual(&basis(&spec)) < 1e-8);
        let d = spec.type2_data().unwrap();
        assert!((d.g_norm_sq - 3.0).abs() < 1e-10);
        assert!((d.parseval_norm_sq - d.quadrature_norm_sq).abs() < 1e-9);
    }

    #[test]
    fn invariance_examples() {
        let spec = SubspaceSpec::type2(InnerFunction::blaschke_factor(c(0.5, 0.0)), 0.0, 1.0, 128).unwrap();
        assert!(invariance_residual(&spec, &params(1.0, 0.0)).unwrap() < 1e-8);
        assert!(invariance_residual(&spec, &params(1.0, PI / 2.0)).unwrap() > 0.1);
        let t1 = SubspaceSpec::type1(InnerFunction::atomic(0.0, 1.0), 128).unwrap();
        assert!(invariance_residual(&t1, &params(3.0, 2.0)).unwrap() < 1e-10);
    }

    #[test]
    fn undefined_boundary_value_blocks_type2() {
        assert!(matches!(
            SubspaceSpec::type2(InnerFunction::atomic(0.0, 1.0), 0.0, 1.0, 64),
            Err(LabError::UndefinedBoundaryValue { .. })
        ));
    }

    #[test]
    fn classifier_examples() {
        let t1a = SubspaceSpec::type1(InnerFunction::blaschke_factor(c(0.3, 0.0)), 64).unwrap();
        let t1b = SubspaceSpec::type1(InnerFunction::atomic(0.0, 1.0), 64).unwrap();
        let (pa, pb) = (params(1.0, 0.0), params(5.0, PI));
        let v = classify((&t1a, &pa), (&t1b, &pb)).unwrap();
        assert_eq!(v.reason, EquivalenceReason::BothTypeI);
        assert!(v.equivalent);

        let t2 = SubspaceSpec::type2(InnerFunction::blaschke_factor(c(0.2, 0.0)), 0.0, 1.0, 64).unwrap();
        let v = classify((&t1a, &pa), (&t2, &pa)).unwrap();
        assert_eq!(v.reason, EquivalenceReason::TypeMismatch);
        assert_eq!(v.ratio_residual, None);
    }

    #[test]
    fn blaschke_pair_is_equivalent() {
        // 1/σ₁² − 1/σ₂² = 2(α₂ − α₁)/((1 − α₁)(1 − α₂)) with σ₁ = 1
        let (a1, a2) = (0.2, 0.4);
        let rhs = 2.0 * (a2 - a1) / ((1.0 - a1) * (1.0 - a2));
        let s2 = 1.0 / (1.0f64 - rhs).sqrt();
        let m1 = SubspaceSpec::type2(InnerFunction::blaschke_factor(c(a1, 0.0)), 0.0, 1.0, 128).unwrap();
        let m2 = SubspaceSpec::type2(InnerFunction::blaschke_factor(c(a2, 0.0)), 0.0, s2, 128).unwrap();
        let (p1, p2) = (params(1.0, 0.0), params(s2, 0.0));
        let v = classify((&m1, &p1), (&m2, &p2)).unwrap();
        assert_eq!(v.reason, EquivalenceReason::TypeIIMatch, "{v:?}");
        let u = build_intertwiner((&m1, &p1), (&m2, &p2), None).unwrap();
        assert!(u.isometry_residual < 1e-8, "{}", u.isometry_residual);
        assert!(u.intertwining_residual < 1e-7, "{}", u.intertwining_residual);
        // swapping the pair gives the inverse map
        let w = build_intertwiner((&m2, &p2), (&m1, &p1), None).unwrap();
        let k = u.matrix.nrows();
        assert!((&w.matrix * &u.matrix - DMatrix::identity(k, k)).norm() < 1e-8);
    }

    #[test]
    fn identical_specs_give_identity() {
        let m = SubspaceSpec::type2(InnerFunction::blaschke(&[c(0.1, 0.3)], 0.4), 1.0, 0.8, 64).unwrap();
        let p = params(0.8, 1.0);
        let u = build_intertwiner((&m, &p), (&m, &p), None).unwrap();
        let k = u.matrix.nrows();
        assert!((&u.matrix - DMatrix::<Complex64>::identity(k, k)).norm() < 1e-10);
    }

    #[test]
    fn type1_intertwiner_maps_phi_to_psi() {
        let a = SubspaceSpec::type1(InnerFunction::blaschke_factor(c(0.3, 0.1)), 64).unwrap();
        let b = SubspaceSpec::type1(InnerFunction::blaschke(&[c(0.0, 0.5), c(-0.2, 0.0)], 1.0), 64).unwrap();
        let (pa, pb) = (params(1.0, 0.0), params(2.0, 1.0));
        let u = build_intertwiner((&a, &pa), (&b, &pb), None).unwrap();
        assert!(u.isometry_residual < 1e-8 && u.intertwining_residual < 1e-7);
        // coordinates of [φ; 0] are L₁ᴴ e₀, of [ψ; 0] are L₂ᴴ e₀
        let ra = restriction(&a, &pa, Some(u.matrix.nrows())).unwrap();
        let rb = restriction(&b, &pb, Some(u.matrix.nrows())).unwrap();
        let image = &u.matrix * ra.chol.adjoint().column(0);
        assert!((image - rb.chol.adjoint().column(0)).norm() < 1e-10);
    }

    #[test]
    fn non_equivalent_pair_is_refused() {
        let t1 = SubspaceSpec::type1(InnerFunction::one(), 32).unwrap();
        let t2 = SubspaceSpec::type2(InnerFunction::one(), 0.0, 1.0, 32).unwrap();
        let p = params(1.0, 0.0);
        assert!(matches!(
            build_intertwiner((&t1, &p), (&t2, &p), None),
            Err(LabError::ContractViolation(_))
        ));
        let w = obstruction_witness((&t1, &p), (&t2, &p)).unwrap();
        assert!((w.norm_gap - (2f64.sqrt() - 1.0)).abs() < 1e-6);
    }

    #[test]
    fn reduction_of_identity_inner_function() {
        let sigma = 1.3;
        let spec = SubspaceSpec::type2(InnerFunction::blaschke_factor(c(0.0, 0.0)), 0.5, sigma, 64).unwrap();
        let p = params(sigma, 0.5);
        let r = reduce_restriction(&spec, &p).unwrap();
        assert!((r.sigma() - sigma / (1.0 + sigma * sigma).sqrt()).abs() < 1e-12);
        let cmp = compare_reduced_spectrum(&spec, &p, None).unwrap();
        assert!(cmp.max_gap < 1e-6, "{}", cmp.max_gap);
    }

    #[test]
    fn atomic_reduction_uses_boundary_values() {
        let sigma = 1.0;
        let spec = SubspaceSpec::type2(InnerFunction::atomic(0.0, 1.0), PI, sigma, 256).unwrap();
        let d = spec.type2_data().unwrap();
        assert_eq!(d.route, NormRoute::Quadrature);
        assert!((d.g_norm_sq - 0.5).abs() < 1e-8);
        let cmp = compare_reduced_spectrum(&spec, &params(sigma, PI), None).unwrap();
        assert!(cmp.max_gap < 1e-6, "{:?}", cmp);
        assert!((cmp.reduced.sigma() - (1.0f64 / 1.5).sqrt()).abs() < 1e-8);
    }

    #[test]
    fn unimodular_constant_does_not_change_g() {
        let a = SubspaceSpec::type2(InnerFunction::blaschke(&[c(0.3, 0.0)], 0.0), 0.4, 1.0, 64).unwrap();
        let b = SubspaceSpec::type2(InnerFunction::blaschke(&[c(0.3, 0.0)], 2.1), 0.4, 1.0, 64).unwrap();
        assert!(a.type2_data().unwrap().g.max_abs_diff(&b.type2_data().unwrap().g) < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"kind":"type2","phi":{"kind":"blaschke","zeros":[{"re":0.5,"im":0.0}]},"theta":0.0,"sigma":1.0}"#;
        let spec: SubspaceSpec = serde_json::from_str(text).unwrap();
        assert_eq!(spec.kind(), SubspaceKind::TypeII);
        let back = serde_json::to_string(&spec).unwrap();
        let again: SubspaceSpec = serde_json::from_str(&back).unwrap();
        assert_eq!(again.descriptor(), spec.descriptor());
        assert!(serde_json::from_str::<SubspaceSpec>(r#"{"kind":"type2","phi":{"kind":"atomic","atom_angle":0,"mass":1}}"#).is_err());
    }
}
