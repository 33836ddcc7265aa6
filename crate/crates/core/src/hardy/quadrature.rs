//! Circle quadrature for boundary functions on 𝕋.
//!
//! Two rules are provided. The uniform rule is the periodic trapezoid rule on
//! a half-step offset grid, spectrally accurate for smooth integrands. The
//! adaptive rule is a global Gauss–Kronrod (7/15) scheme; around boundary
//! atoms it switches to the variable `y = ½ cot((θ - α)/2)`, in which the
//! infinitely oscillating factor `exp(-i s cot((θ - α)/2))` becomes
//! `exp(-2 i s y)` and the measure becomes `4 dy / (1 + 4 y²)`. Far out in
//! `y` the integrand is replaced by its local mean `a + b/y + c/y²`.
//!
//! Every routine integrates a vector of functions at once: the integrand
//! writes `dim` values into a buffer, so many inner products can share one
//! set of boundary evaluations.

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{PI, TAU};

use nalgebra::Matrix3;
use num_complex::Complex64;

use super::inner::{normalize_angle, Atom, InnerFunction};
use crate::error::{LabError, Result};

/// Start of the asymptotic range in the substitution variable, for unit mass.
pub const DEFAULT_TAIL_START: f64 = 1500.0;

const MAX_PANELS: usize = 400_000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Vector-valued integrand: writes its `dim` values at `x` into the buffer.
pub trait Integrand {
    fn dim(&self) -> usize;
    fn eval(&self, x: f64, out: &mut [Complex64]);
}

/// Adapter for closures.
pub struct FnIntegrand<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(f64, &mut [Complex64])> Integrand for FnIntegrand<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: f64, out: &mut [Complex64]) {
        (self.f)(x, out)
    }
}

/// One 15-point Kronrod panel. The error is the QUADPACK estimate per
/// component, scaled by `weights` and maximized over components.
fn gk15<I: Integrand + ?Sized>(f: &I, a: f64, b: f64, weights: &[f64]) -> (Vec<Complex64>, f64) {
    let dim = f.dim();
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut samples = vec![ZERO; 15 * dim];
    f.eval(center, &mut samples[7 * dim..8 * dim]);
    for j in 0..7 {
        let dx = half * XGK[j];
        f.eval(center - dx, &mut samples[j * dim..(j + 1) * dim]);
        f.eval(center + dx, &mut samples[(14 - j) * dim..(15 - j) * dim]);
    }
    let at = |j: usize, i: usize| samples[j * dim + i];
    let mut value = vec![ZERO; dim];
    let mut err: f64 = 0.0;
    for i in 0..dim {
        let mut kron = at(7, i) * WGK[7];
        let mut gauss = at(7, i) * WG[3];
        for j in 0..7 {
            let s = at(j, i) + at(14 - j, i);
            kron += s * WGK[j];
            if j % 2 == 1 {
                gauss += s * WG[j / 2];
            }
        }
        let mean = kron * 0.5;
        let mut asc = WGK[7] * (at(7, i) - mean).norm();
        let mut abs = WGK[7] * at(7, i).norm();
        for j in 0..7 {
            asc += WGK[j] * ((at(j, i) - mean).norm() + (at(14 - j, i) - mean).norm());
            abs += WGK[j] * (at(j, i).norm() + at(14 - j, i).norm());
        }
        let (asc, abs) = (asc * half.abs(), abs * half.abs());
        let mut e = ((kron - gauss) * half).norm();
        if asc != 0.0 && e != 0.0 {
            e = asc * (200.0 * e / asc).powf(1.5).min(1.0);
        }
        e = e.max(50.0 * f64::EPSILON * abs);
        err = err.max(weights[i] * e);
        value[i] = kron * half;
    }
    (value, err)
}

struct Panel {
    a: f64,
    b: f64,
    value: Vec<Complex64>,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone)]
pub struct Integral {
    pub value: Vec<Complex64>,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Global adaptive Gauss–Kronrod over the consecutive panels given by
/// `edges`: bisects the worst panel until the summed error estimate falls
/// below `abs_tol`. Component `i` has its error scaled by `weights[i]`.
pub fn adaptive_panels<I: Integrand + ?Sized>(
    f: &I,
    edges: &[f64],
    abs_tol: f64,
    weights: &[f64],
) -> Result<Integral> {
    let dim = f.dim();
    if weights.len() != dim {
        return Err(LabError::dim("one error weight per component"));
    }
    let mut heap = BinaryHeap::new();
    let mut total_err = 0.0;
    let mut evals = 0usize;
    for w in edges.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (value, err) = gk15(f, w[0], w[1], weights);
        evals += 15;
        total_err += err;
        heap.push(Panel { a: w[0], b: w[1], value, err });
    }
    while total_err > abs_tol && heap.len() < MAX_PANELS {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // exhausted at machine resolution
            total_err -= worst.err;
            heap.push(Panel { err: 0.0, ..worst });
            continue;
        }
        let (lv, le) = gk15(f, worst.a, mid, weights);
        let (rv, re) = gk15(f, mid, worst.b, weights);
        evals += 30;
        total_err += le + re - worst.err;
        heap.push(Panel { a: worst.a, b: mid, value: lv, err: le });
        heap.push(Panel { a: mid, b: worst.b, value: rv, err: re });
    }
    // recompute from scratch to shed cancellation in the running total
    let mut value = vec![ZERO; dim];
    let mut err = 0.0;
    for p in heap.iter() {
        for (v, pv) in value.iter_mut().zip(&p.value) {
            *v += pv;
        }
        err += p.err;
    }
    if err > abs_tol {
        return Err(LabError::Precision {
            what: "adaptive Gauss-Kronrod".into(),
            achieved: err,
            wanted: abs_tol,
        });
    }
    Ok(Integral {
        value,
        error_estimate: err,
        evaluations: evals,
    })
}

/// Scalar adaptive integral of `f` over `[a, b]`, split into `pieces` initial
/// panels.
pub fn adaptive_integrate<F>(f: F, a: f64, b: f64, pieces: usize, abs_tol: f64) -> Result<(Complex64, f64)>
where
    F: Fn(f64) -> Complex64,
{
    let pieces = pieces.max(1);
    let edges: Vec<f64> = (0..=pieces)
        .map(|i| a + (b - a) * i as f64 / pieces as f64)
        .collect();
    let r = adaptive_panels(
        &FnIntegrand { dim: 1, f: |x: f64, out: &mut [Complex64]| out[0] = f(x) },
        &edges,
        abs_tol,
        &[1.0],
    )?;
    Ok((r.value[0], r.error_estimate))
}

/// How a circle integral is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum QuadratureMethod {
    /// Offset periodic trapezoid rule with grid doubling.
    Uniform,
    /// Adaptive Gauss–Kronrod; `atoms` are points where the integrand
    /// oscillates without limit, `breakpoints` are angles where it is only
    /// removably defined (never sampled exactly).
    Adaptive {
        atoms: Vec<Atom>,
        breakpoints: Vec<f64>,
    },
}

impl QuadratureMethod {
    /// Uniform for functions without atoms, adaptive around the atoms of `phi`
    /// otherwise.
    pub fn for_inner(phi: &InnerFunction, breakpoints: &[f64]) -> Self {
        Self::for_atoms(phi.atoms(), breakpoints)
    }

    pub fn for_atoms(atoms: Vec<Atom>, breakpoints: &[f64]) -> Self {
        if atoms.is_empty() {
            QuadratureMethod::Uniform
        } else {
            QuadratureMethod::Adaptive {
                atoms,
                breakpoints: breakpoints.to_vec(),
            }
        }
    }
}

/// Normalized circle means `(1/2π) ∫₀^{2π} f_i(θ) dθ`.
#[derive(Debug, Clone)]
pub struct CircleMeans {
    pub values: Vec<Complex64>,
    pub error_estimate: f64,
    /// Contribution of the asymptotic ranges near atoms (already included).
    pub atom_tail: Vec<Complex64>,
    pub evaluations: usize,
}

/// Scalar circle mean.
#[derive(Debug, Clone, Copy)]
pub struct CircleMean {
    pub value: Complex64,
    pub error_estimate: f64,
    pub atom_tail: Complex64,
    pub evaluations: usize,
}

/// `(1/2π) ∫ f_i dθ` for every component, each to absolute tolerance `tol`.
pub fn circle_means<I: Integrand + ?Sized>(f: &I, method: &QuadratureMethod, tol: f64) -> Result<CircleMeans> {
    match method {
        QuadratureMethod::Uniform => uniform_means(f, tol),
        QuadratureMethod::Adaptive { atoms, breakpoints } => {
            // merge atoms sitting at the same point
            let mut sorted: Vec<Atom> = atoms
                .iter()
                .filter(|a| a.mass > 0.0)
                .map(|a| Atom {
                    angle: normalize_angle(a.angle),
                    mass: a.mass,
                })
                .collect();
            sorted.sort_by(|a, b| a.angle.total_cmp(&b.angle));
            let mut merged: Vec<Atom> = Vec::new();
            for a in sorted {
                match merged.last_mut() {
                    Some(last) if last.angle == a.angle => last.mass += a.mass,
                    _ => merged.push(a),
                }
            }
            let mut breaks: Vec<f64> = breakpoints.iter().map(|&b| normalize_angle(b)).collect();
            breaks.sort_by(f64::total_cmp);
            if merged.is_empty() {
                adaptive_theta_means(f, &breaks, tol)
            } else {
                atom_means(f, &merged, &breaks, tol, DEFAULT_TAIL_START)
            }
        }
    }
}

/// `(1/2π) ∫ f dθ` to absolute tolerance `tol`.
pub fn circle_mean<F>(f: F, method: &QuadratureMethod, tol: f64) -> Result<CircleMean>
where
    F: Fn(f64) -> Complex64,
{
    let m = circle_means(
        &FnIntegrand { dim: 1, f: |t: f64, out: &mut [Complex64]| out[0] = f(t) },
        method,
        tol,
    )?;
    Ok(CircleMean {
        value: m.values[0],
        error_estimate: m.error_estimate,
        atom_tail: m.atom_tail[0],
        evaluations: m.evaluations,
    })
}

/// `circle_norm_squared`: `(1/2π) ∫ |f(θ)|² dθ`.
pub fn circle_norm_squared<F>(sampler: F, method: &QuadratureMethod, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Complex64,
{
    circle_mean(|t| Complex64::new(sampler(t).norm_sqr(), 0.0), method, tol).map(|m| m.value.re)
}

fn uniform_means<I: Integrand + ?Sized>(f: &I, tol: f64) -> Result<CircleMeans> {
    let dim = f.dim();
    let mut buf = vec![ZERO; dim];
    // sums over the odd nodes of the grid with `m` points
    let mut rule = |m: usize, offset: f64| -> Vec<Complex64> {
        let h = TAU / m as f64;
        let mut acc = vec![ZERO; dim];
        for j in 0..m {
            f.eval(h * (j as f64 + offset), &mut buf);
            for (a, b) in acc.iter_mut().zip(&buf) {
                *a += b;
            }
        }
        acc
    };
    // half-offset nodes at level m are the two quarter-offset grids of the
    // next level, so every level reuses the previous sums
    let mut m = 64;
    let mut sum = rule(m, 0.5);
    let mut evals = m;
    let mut gap = f64::INFINITY;
    while m < (1 << 22) {
        let lo = rule(m, 0.25);
        let hi = rule(m, 0.75);
        evals += 2 * m;
        let prev: Vec<Complex64> = sum.iter().map(|s| s / m as f64).collect();
        // the new grid: m' = 2m points at offsets (j + 1/2) / m'
        let next: Vec<Complex64> = lo.iter().zip(&hi).map(|(a, b)| a + b).collect();
        let cur: Vec<Complex64> = next.iter().map(|s| s / (2 * m) as f64).collect();
        gap = prev
            .iter()
            .zip(&cur)
            .map(|(a, b)| (a - b).norm() / tol.max(f64::EPSILON * b.norm()))
            .fold(0.0, f64::max);
        m *= 2;
        sum = next;
        if gap <= 1.0 {
            return Ok(CircleMeans {
                values: cur,
                error_estimate: gap * tol,
                atom_tail: vec![ZERO; dim],
                evaluations: evals,
            });
        }
    }
    Err(LabError::Precision {
        what: "uniform circle quadrature".into(),
        achieved: gap * tol,
        wanted: tol,
    })
}

fn adaptive_theta_means<I: Integrand + ?Sized>(f: &I, breaks: &[f64], tol: f64) -> Result<CircleMeans> {
    let mut edges: Vec<f64> = (0..=32).map(|i| TAU * i as f64 / 32.0).collect();
    edges.extend_from_slice(breaks);
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let r = adaptive_panels(f, &edges, 0.5 * tol * TAU, &vec![1.0; f.dim()])?;
    Ok(CircleMeans {
        values: r.value.iter().map(|v| v / TAU).collect(),
        error_estimate: r.error_estimate / TAU,
        atom_tail: vec![ZERO; f.dim()],
        evaluations: r.evaluations,
    })
}

/// One side of an atom: `θ = α + dir · 2 atan(1/(2y))`, `y ∈ [y0, ∞)`.
struct AtomSide {
    alpha: f64,
    dir: f64,
    mass: f64,
    y0: f64,
    splits: Vec<f64>,
}

impl AtomSide {
    fn theta(&self, y: f64) -> f64 {
        self.alpha + self.dir * 2.0 * 1.0f64.atan2(2.0 * y)
    }
}

/// `sin⁴` bump on `(lo, hi)`; three continuous derivatives, so its means of an
/// oscillating function decay like the fifth power of the window length.
fn bump(y: f64, (lo, hi): (f64, f64)) -> f64 {
    if y <= lo || y >= hi {
        0.0
    } else {
        let s = (PI * (y - lo) / (hi - lo)).sin();
        (s * s) * (s * s)
    }
}

/// Smooth step from 0 at `lo` to 1 at `hi` with three continuous derivatives.
fn taper(y: f64, lo: f64, hi: f64) -> f64 {
    let s = ((y - lo) / (hi - lo)).clamp(0.0, 1.0);
    s.powi(4) * (35.0 - 84.0 * s + 70.0 * s * s - 20.0 * s.powi(3))
}

fn atom_sides(atoms: &[Atom], breaks: &[f64]) -> Vec<AtomSide> {
    let m = atoms.len();
    let mut sides = Vec::with_capacity(2 * m);
    for (j, atom) in atoms.iter().enumerate() {
        let (right_gap, left_gap) = if m == 1 {
            (TAU, TAU)
        } else {
            let next = atoms[(j + 1) % m].angle;
            let prev = atoms[(j + m - 1) % m].angle;
            (normalize_angle(next - atom.angle), normalize_angle(atom.angle - prev))
        };
        for (dir, gap) in [(1.0, right_gap), (-1.0, left_gap)] {
            let reach = 0.5 * gap;
            let y0 = if reach >= PI { 0.0 } else { 0.5 / (0.5 * reach).tan() };
            sides.push(AtomSide {
                alpha: atom.angle,
                dir,
                mass: atom.mass,
                y0: y0.max(0.0),
                splits: Vec::new(),
            });
        }
    }
    // assign removable points to the side that owns them
    for &b in breaks {
        for side in sides.iter_mut() {
            let u = if side.dir > 0.0 {
                normalize_angle(b - side.alpha)
            } else {
                normalize_angle(side.alpha - b)
            };
            if u <= 0.0 || u > PI {
                continue;
            }
            let y = 0.5 / (0.5 * u).tan();
            if y > side.y0 {
                side.splits.push(y);
                break;
            }
        }
    }
    sides
}

/// Integrand on one side of an atom: the weighted values with a smooth
/// cut-off, followed by the three bump-window moments of every component.
struct SideIntegrand<'a, I: ?Sized> {
    f: &'a I,
    side: &'a AtomSide,
    cut: f64,
    big_y: f64,
    windows: [(f64, f64); 3],
    count: Cell<usize>,
}

impl<I: Integrand + ?Sized> Integrand for SideIntegrand<'_, I> {
    fn dim(&self) -> usize {
        4 * self.f.dim()
    }

    fn eval(&self, y: f64, out: &mut [Complex64]) {
        self.count.set(self.count.get() + 1);
        let d = self.f.dim();
        let (head, rest) = out.split_at_mut(d);
        self.f.eval(self.side.theta(y), head);
        let w = 4.0 / (1.0 + 4.0 * y * y) * (1.0 - taper(y, self.cut, self.big_y));
        for (k, win) in self.windows.iter().enumerate() {
            let h = bump(y, *win);
            for i in 0..d {
                rest[k * d + i] = head[i] * h;
            }
        }
        for v in head.iter_mut() {
            *v *= w;
        }
    }
}

/// Integral over one side. `[y0, Y]` is integrated directly with a smooth
/// cut-off over `[Y/2, Y]`; beyond the cut-off each component is replaced by
/// its local mean `a + b/y + c/y²`, fitted from three bump windows, and
/// integrated in closed form.
fn side_integral<I: Integrand + ?Sized>(
    f: &I,
    side: &AtomSide,
    tol: f64,
    tail_start: f64,
) -> Result<(Vec<Complex64>, Vec<Complex64>, f64, usize)> {
    let d = f.dim();
    // the phase advances by 2 s per unit of y
    let scale = (1.0 / side.mass).max(1.0);
    let big_y = (tail_start * scale).min(1e6).max(16.0 * (side.y0 + 1.0));
    let integrand = SideIntegrand {
        f,
        side,
        cut: 0.5 * big_y,
        big_y,
        windows: [
            (0.125 * big_y, 0.25 * big_y),
            (0.25 * big_y, 0.5 * big_y),
            (0.5 * big_y, big_y),
        ],
        count: Cell::new(0),
    };
    let step = (1.0 / side.mass).clamp(0.05, 1.0);
    let mut edges = vec![side.y0];
    let mut y = (side.y0 / step).floor() * step + step;
    while y < big_y {
        edges.push(y);
        y += step;
    }
    edges.push(big_y);
    edges.extend(side.splits.iter().copied().filter(|&s| s < big_y));
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    // a window integral enters the tail divided by its length and multiplied
    // by a tail mass of order 1/Y
    let wy = 1.0 / (big_y * big_y);
    let mut weights = vec![1.0; d];
    for factor in [80.0, 40.0, 20.0] {
        weights.extend(std::iter::repeat_n(factor * wy, d));
    }
    let r = adaptive_panels(&integrand, &edges, tol, &weights)?;
    let evals = integrand.count.get();

    let mut design = Matrix3::<f64>::zeros();
    let mut masses_win = [0.0; 3];
    for (k, &win) in integrand.windows.iter().enumerate() {
        let moments = adaptive_panels(
            &FnIntegrand {
                dim: 3,
                f: |y: f64, out: &mut [Complex64]| {
                    let h = bump(y, win);
                    out[0] = Complex64::new(h, 0.0);
                    out[1] = Complex64::new(h / y, 0.0);
                    out[2] = Complex64::new(h / (y * y), 0.0);
                },
            },
            &[win.0, 0.5 * (win.0 + win.1), win.1],
            1e-12 * (win.1 - win.0),
            &[1.0; 3],
        )?;
        let mass = moments.value[0].re;
        masses_win[k] = mass;
        design[(k, 0)] = 1.0;
        design[(k, 1)] = moments.value[1].re / mass;
        design[(k, 2)] = moments.value[2].re / mass;
    }
    let inv = design
        .try_inverse()
        .ok_or_else(|| LabError::dim("degenerate tail windows"))?;

    // ∫ y^{-k} w T over the cut-off, plus ∫_Y^∞ y^{-k} w in closed form
    let (cut, by) = (integrand.cut, big_y);
    let ramp = adaptive_panels(
        &FnIntegrand {
            dim: 3,
            f: |y: f64, out: &mut [Complex64]| {
                let wt = 4.0 / (1.0 + 4.0 * y * y) * taper(y, cut, by);
                out[0] = Complex64::new(wt, 0.0);
                out[1] = Complex64::new(wt / y, 0.0);
                out[2] = Complex64::new(wt / (y * y), 0.0);
            },
        },
        &[cut, 0.75 * big_y, big_y],
        1e-15,
        &[1.0; 3],
    )?;
    let x = 0.5 / big_y;
    let closed = [
        2.0 * x.atan(),
        2.0 * (x * x).ln_1p(),
        8.0 * (x.powi(3) / 3.0 - x.powi(5) / 5.0 + x.powi(7) / 7.0 - x.powi(9) / 9.0),
    ];
    let tail_mass: [f64; 3] = std::array::from_fn(|k| closed[k] + ramp.value[k].re);

    let mut values = Vec::with_capacity(d);
    let mut tails = Vec::with_capacity(d);
    let mut err = r.error_estimate;
    for i in 0..d {
        let means: [Complex64; 3] = std::array::from_fn(|k| r.value[(k + 1) * d + i] / masses_win[k]);
        let coef: [Complex64; 3] =
            std::array::from_fn(|a| (0..3).map(|b| means[b] * inv[(a, b)]).sum());
        let tail: Complex64 = (0..3).map(|k| coef[k] * tail_mass[k]).sum();
        err = err.max(r.error_estimate + (coef[2] * tail_mass[2]).norm());
        values.push(r.value[i] + tail);
        tails.push(tail);
    }
    Ok((values, tails, err, evals))
}

fn atom_means<I: Integrand + ?Sized>(
    f: &I,
    atoms: &[Atom],
    breaks: &[f64],
    tol: f64,
    tail_start: f64,
) -> Result<CircleMeans> {
    let d = f.dim();
    let sides = atom_sides(atoms, breaks);
    let side_tol = 0.5 * tol * TAU / sides.len() as f64;
    let mut out = CircleMeans {
        values: vec![ZERO; d],
        error_estimate: 0.0,
        atom_tail: vec![ZERO; d],
        evaluations: 0,
    };
    for side in &sides {
        let (v, tail, err, evals) = side_integral(f, side, side_tol, tail_start)?;
        for i in 0..d {
            out.values[i] += v[i] / TAU;
            out.atom_tail[i] += tail[i] / TAU;
        }
        out.error_estimate += err / TAU;
        out.evaluations += evals;
    }
    Ok(out)
}
