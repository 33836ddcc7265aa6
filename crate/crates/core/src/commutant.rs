//! Irreducibility evidence on the truncation: joint orbits under `{B, B*}`
//! and the dimension of their joint commutant.
//!
//! Neither computation proves anything about the infinite-dimensional
//! operator — the compression of `B` is not `B` — but a full orbit from every
//! tested start and a one-dimensional commutant are what irreducibility
//! predicts.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::brownian::{rank_one_decomposition, truncated_matrix, BrownianShiftParams, BrownianVector};
use crate::error::{LabError, Result};

type C = Complex64;

/// Relative rank tolerance for orbit growth and null-space counting.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Largest truncation accepted by the commutant solvers.
pub const MAX_COMMUTANT_ORDER: usize = 128;

/// Largest truncation accepted by the dense Sylvester route.
pub const MAX_DENSE_ORDER: usize = 16;

pub const TRUNCATION_CAVEAT: &str =
    "finite truncation: evidence of irreducibility, not a proof";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Generator {
    B,
    #[serde(rename = "B*")]
    BAdjoint,
}

/// One accepted orbit direction: `generator` applied to basis vector `from`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OrbitStep {
    pub generator: Generator,
    pub from: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitCertificate {
    pub sigma: f64,
    pub theta: f64,
    #[serde(rename = "N")]
    pub order: usize,
    #[serde(rename = "start")]
    pub start_vector: BrownianVector,
    #[serde(skip)]
    pub steps: Vec<OrbitStep>,
    #[serde(rename = "reached")]
    pub reached_dimension: usize,
    pub full: bool,
    pub note: &'static str,
}

impl OrbitCertificate {
    /// Dimension of the truncated space, `N + 1`.
    pub fn ambient_dimension(&self) -> usize {
        self.order + 1
    }
}

/// Orthogonalizes `v` against `basis` (two Gram–Schmidt passes) and returns
/// the normalized remainder if it is not numerically zero.
fn extend(basis: &[DVector<C>], mut v: DVector<C>) -> Option<DVector<C>> {
    let scale = v.norm();
    if scale == 0.0 {
        return None;
    }
    for _ in 0..2 {
        for q in basis {
            let c = q.dotc(&v);
            v.axpy(-c, q, C::new(1.0, 0.0));
        }
    }
    let r = v.norm();
    (r > RANK_TOLERANCE * scale).then(|| v.unscale(r))
}

/// `joint_orbit_span`: breadth-first closure of `span{v}` under the truncated
/// `B` and `B*`.
pub fn joint_orbit_span(p: &BrownianShiftParams, v: &BrownianVector, order: usize) -> Result<OrbitCertificate> {
    if v.order() != order {
        return Err(LabError::dim(format!("start vector of order {} at truncation {order}", v.order())));
    }
    if v.norm_sqr() == 0.0 {
        return Err(LabError::domain("orbit of the zero vector"));
    }
    let t = truncated_matrix(p, order)?;
    let t = t.matrix();
    let th = t.adjoint();
    let start = v.to_column();
    let mut basis = vec![start.unscale(start.norm())];
    let mut steps = Vec::new();
    let dim = order + 1;
    let mut head = 0;
    while head < basis.len() && basis.len() < dim {
        for (generator, m) in [(Generator::B, t), (Generator::BAdjoint, &th)] {
            if let Some(q) = extend(&basis, m * &basis[head]) {
                basis.push(q);
                steps.push(OrbitStep { generator, from: head });
            }
        }
        head += 1;
    }
    let reached = basis.len();
    Ok(OrbitCertificate {
        sigma: p.sigma(),
        theta: p.theta(),
        order,
        start_vector: v.clone(),
        steps,
        reached_dimension: reached,
        full: reached == dim,
        note: TRUNCATION_CAVEAT,
    })
}

/// Numerical null-space dimension of a tall matrix.
fn null_dimension(a: &DMatrix<C>) -> usize {
    let sv = a.singular_values();
    let top = sv.max();
    if top == 0.0 {
        return a.ncols();
    }
    let rank = sv.iter().filter(|s| **s > RANK_TOLERANCE * top).count();
    a.ncols() - rank
}

/// Rows of `X ↦ XH − HX` restricted to the unknowns `(i, j)` in `support`,
/// appended to `rows` starting at `offset`.
fn sylvester_rows(h: &DMatrix<C>, support: &[(usize, usize)], rows: &mut DMatrix<C>, offset: usize) {
    let n = h.nrows();
    for (u, &(i, j)) in support.iter().enumerate() {
        // coefficient of X_ij in (XH − HX)_ab: H_jb when a = i, −H_ai when b = j
        for b in 0..n {
            rows[(offset + i * n + b, u)] += h[(j, b)];
        }
        for a in 0..n {
            rows[(offset + a * n + j, u)] -= h[(a, i)];
        }
    }
}

/// Joint commutant of `{T, T*}` via the eigenbasis of `T + T*`. In that
/// basis a commuting `X` is block diagonal over eigenvalue clusters, which
/// cuts the unknowns from `n²` to roughly `n`. The full Sylvester equations
/// for both Hermitian parts are still imposed, so a cluster tolerance that
/// merges distinct eigenvalues only adds unknowns, never solutions.
fn reduced_commutant_dimension(t: &DMatrix<C>) -> usize {
    let n = t.nrows();
    let th = t.adjoint();
    let h1 = t + &th;
    let h2 = (t - &th) * C::new(0.0, 1.0);
    let eig = SymmetricEigen::new(h1);
    let q = &eig.eigenvectors;
    let lambda = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| C::new(x, 0.0)));
    let h2q = q.adjoint() * h2 * q;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let spread = eig.eigenvalues.amax().max(1.0);
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for &k in &order {
        let x = eig.eigenvalues[k];
        match clusters.last_mut() {
            Some(c) if x - last <= 1e-6 * spread => c.push(k),
            _ => clusters.push(vec![k]),
        }
        last = x;
    }
    let support: Vec<(usize, usize)> = clusters
        .iter()
        .flat_map(|c| c.iter().flat_map(move |&i| c.iter().map(move |&j| (i, j))))
        .collect();
    let mut rows = DMatrix::zeros(2 * n * n, support.len());
    sylvester_rows(&lambda, &support, &mut rows, 0);
    sylvester_rows(&h2q, &support, &mut rows, n * n);
    null_dimension(&rows)
}

/// Joint commutant of `{T, T*}` from the full `2n² × n²` Sylvester system.
fn dense_commutant_dimension(t: &DMatrix<C>) -> usize {
    let n = t.nrows();
    let support: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let mut rows = DMatrix::zeros(2 * n * n, n * n);
    sylvester_rows(t, &support, &mut rows, 0);
    sylvester_rows(&t.adjoint(), &support, &mut rows, n * n);
    null_dimension(&rows)
}

fn check_commutant_order(order: usize, max: usize) -> Result<()> {
    if !(2..=max).contains(&order) {
        return Err(LabError::dim(format!("commutant truncation {order} outside 2..={max}")));
    }
    Ok(())
}

/// `commutant_dimension`: dimension of `{X : XB = BX, XB* = B*X}` on the
/// truncation of order `order` (matrices of size `order + 1`).
pub fn commutant_dimension(p: &BrownianShiftParams, order: usize) -> Result<usize> {
    check_commutant_order(order, MAX_COMMUTANT_ORDER)?;
    Ok(reduced_commutant_dimension(truncated_matrix(p, order)?.matrix()))
}

/// Same quantity from the dense Sylvester system; a cross-check for small
/// truncations.
pub fn commutant_dimension_dense(p: &BrownianShiftParams, order: usize) -> Result<usize> {
    check_commutant_order(order, MAX_DENSE_ORDER)?;
    Ok(dense_commutant_dimension(truncated_matrix(p, order)?.matrix()))
}

/// Commutant dimension of the reducible control `B_s = S ⊕ 1`, i.e. `B`
/// with the rank-one coupling removed.
pub fn shift_control_commutant_dimension(order: usize) -> Result<usize> {
    check_commutant_order(order, MAX_COMMUTANT_ORDER)?;
    let p = BrownianShiftParams::new(1.0, 0.0)?;
    let (bs, _) = rank_one_decomposition(&p, order)?;
    Ok(reduced_commutant_dimension(bs.matrix()))
}
