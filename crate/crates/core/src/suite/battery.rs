//! The full verification battery: every checkable identity, run as
//! independent groups and reported in name order.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::closed_forms::{
    blaschke_g_norm_formula, example1_condition, example1_solve_sigma2, example2_condition, example2_integral,
    example2_solve_sigma2, unit_atom, CheckResult,
};
use crate::asymptotics::{
    adjoint_power_closed_form, c00_adjoint_decay, c00_forward_decay, power_norm_growth, sot_convergence_certificate,
    OrbitStart,
};
use crate::brownian::{apply, norm_diagnostic, operator_norm, BrownianShiftParams, BrownianVector};
use crate::commutant::{commutant_dimension, joint_orbit_span, shift_control_commutant_dimension};
use crate::error::{LabError, Result};
use crate::hardy::{make_g, HardyVector, InnerFunction};
use crate::subspace::{
    build_intertwiner, classify, compare_reduced_spectrum, invariance_residual, matching_sigma, obstruction_witness,
    EquivalenceReason, SubspaceSpec,
};

pub const REPORT_VERSION: u32 = 1;
pub const DEFAULT_SEED: u64 = 0xB705;
/// Smallest truncation at which every group fits.
pub const MIN_BATTERY_ORDER: usize = 64;

/// Blaschke pair at angle 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Example1Config {
    pub alpha1: f64,
    pub alpha2: f64,
    pub sigma1: f64,
    /// Solved from the equivalence condition when omitted.
    pub sigma2: Option<f64>,
}

impl Default for Example1Config {
    fn default() -> Self {
        Self {
            alpha1: 0.2,
            alpha2: 0.4,
            sigma1: 1.0,
            sigma2: None,
        }
    }
}

/// Blaschke factor against the unit atom, both at angle π.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Example2Config {
    pub alpha: f64,
    pub sigma1: f64,
    pub sigma2: Option<f64>,
}

impl Default for Example2Config {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            sigma1: 1.0,
            sigma2: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatteryConfig {
    pub seed: Option<u64>,
    pub trunc: Option<usize>,
    pub example1: Example1Config,
    pub example2: Example2Config,
    /// Random start vectors per truncation in the orbit group.
    pub orbit_starts: usize,
    /// Random vectors per covariance in the decay group.
    pub decay_samples: usize,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        Self {
            seed: None,
            trunc: None,
            example1: Example1Config::default(),
            example2: Example2Config::default(),
            orbit_starts: 10,
            decay_samples: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryReport {
    pub report_version: u32,
    pub seed: u64,
    pub trunc: usize,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}

impl BatteryReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// Fixed-width table, one row per check.
    pub fn to_text(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(4).max(4);
        let mut out = format!(
            "{:<width$}  {:>14}  {:>14}  {:>9}  result\n",
            "check", "expected", "computed", "tolerance"
        );
        for c in &self.checks {
            out += &format!(
                "{:<width$}  {:>14.8e}  {:>14.8e}  {:>9.1e}  {}{}\n",
                c.name,
                c.expected,
                c.computed,
                c.tolerance,
                if c.pass { "pass" } else { "FAIL" },
                c.detail.as_deref().map(|d| format!("  ({d})")).unwrap_or_default(),
            );
        }
        let failed = self.failures().count();
        out += &format!(
            "{} checks, {} failed, seed {:#x}, trunc {}: {}\n",
            self.checks.len(),
            failed,
            self.seed,
            self.trunc,
            if self.pass { "PASS" } else { "FAIL" }
        );
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,expected,computed,tolerance,pass\n");
        for c in &self.checks {
            out += &format!("{},{:e},{:e},{:e},{}\n", c.name, c.expected, c.computed, c.tolerance, c.pass);
        }
        out
    }
}

struct Ctx<'a> {
    config: &'a BatteryConfig,
    seed: u64,
    trunc: usize,
}

impl Ctx<'_> {
    /// Independent stream per group, so results do not depend on scheduling.
    fn rng(&self, group: &str) -> ChaCha8Rng {
        // FNV-1a
        let h = group
            .bytes()
            .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3));
        ChaCha8Rng::seed_from_u64(self.seed ^ h)
    }
}

type Group = fn(&Ctx) -> Vec<CheckResult>;

const GROUPS: &[(&str, Group)] = &[
    ("norm", norm_group),
    ("power_growth", power_growth_group),
    ("decay", decay_group),
    ("g_norm", g_norm_group),
    ("integral", integral_group),
    ("invariance", invariance_group),
    ("examples", examples_group),
    ("intertwiner", intertwiner_group),
    ("reduction", reduction_group),
    ("obstruction", obstruction_group),
    ("orbit", orbit_group),
];

/// Runs every group and assembles the report sorted by check name.
pub fn run_battery(config: &BatteryConfig, seed: u64, trunc: usize) -> Result<BatteryReport> {
    if trunc < MIN_BATTERY_ORDER {
        return Err(LabError::dim(format!(
            "battery needs truncation >= {MIN_BATTERY_ORDER}, got {trunc}"
        )));
    }
    let ctx = Ctx { config, seed, trunc };
    let mut checks: Vec<CheckResult> = GROUPS
        .par_iter()
        .map(|(_, group)| group(&ctx))
        .flatten()
        .collect();
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    let pass = checks.iter().all(|c| c.pass);
    Ok(BatteryReport {
        report_version: REPORT_VERSION,
        seed,
        trunc,
        checks,
        pass,
    })
}

fn params(sigma: f64, theta: f64) -> BrownianShiftParams {
    BrownianShiftParams::new(sigma, theta).expect("fixed battery parameters are valid")
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Random `(f, α)` with `deg f ≤ max_degree`.
pub fn random_vector(rng: &mut ChaCha8Rng, max_degree: usize, order: usize) -> BrownianVector {
    let d = rng.random_range(0..=max_degree);
    let coeffs: Vec<Complex64> = (0..=d).map(|_| gaussian(rng)).collect();
    BrownianVector::new(HardyVector::from_coeffs(&coeffs, order), gaussian(rng))
}

/// Collapses a fallible group of checks into a single failed check on error.
fn guard(name: &str, f: impl FnOnce() -> Result<Vec<CheckResult>>) -> Vec<CheckResult> {
    f().unwrap_or_else(|e| vec![CheckResult::failed(name, &e)])
}

fn norm_group(ctx: &Ctx) -> Vec<CheckResult> {
    let order = ctx.trunc.min(128);
    let mut out = Vec::new();
    for sigma in [0.25, 1.0, 2.0, 5.0] {
        let p = params(sigma, 0.0);
        out.extend(guard(&format!("norm_truncated_sigma_{sigma}"), || {
            let d = norm_diagnostic(&p, order, ctx.seed)?;
            Ok(vec![CheckResult::absolute(
                format!("norm_truncated_sigma_{sigma}"),
                d.exact,
                d.truncated.value,
                1e-6,
            )])
        }));
        let slot = apply(&p, &BrownianVector::slot(order)).norm();
        out.push(CheckResult::absolute(
            format!("norm_slot_sigma_{sigma}"),
            operator_norm(&p),
            slot,
            1e-12,
        ));
    }
    out
}

fn power_growth_group(ctx: &Ctx) -> Vec<CheckResult> {
    let m_max = 200.min(ctx.trunc - 1);
    [0.5, 1.0, 2.0]
        .into_iter()
        .flat_map(|sigma| {
            let name = format!("power_growth_sigma_{sigma}");
            guard(&name.clone(), || {
                let g = power_norm_growth(&params(sigma, 0.7), m_max, ctx.trunc)?;
                let worst = g
                    .iter()
                    .enumerate()
                    .map(|(i, v)| {
                        let e = 1.0 + (i + 1) as f64 * sigma * sigma;
                        (v - e).abs() / e
                    })
                    .fold(0.0, f64::max);
                Ok(vec![CheckResult::absolute(name, 0.0, worst, 1e-12)])
            })
        })
        .collect()
}

/// Largest `measured − bound` over a report (0 when all bounds hold).
fn excess(measured: &[f64], bound: impl Iterator<Item = Option<f64>>) -> f64 {
    measured
        .iter()
        .zip(bound)
        .filter_map(|(m, b)| b.map(|b| m - b))
        .fold(0.0, f64::max)
}

fn decay_group(ctx: &Ctx) -> Vec<CheckResult> {
    let n_max = 60;
    let max_degree = 30.min(ctx.trunc - n_max - 2);
    let mut rng = ctx.rng("decay");
    let mut out = Vec::new();
    for sigma in [0.25, 1.0, 4.0] {
        let p = params(sigma, 1.1);
        let mut fwd = 0.0f64;
        let mut adj = 0.0f64;
        let mut fin = 0.0f64;
        let mut rise = 0.0f64;
        let monotone_from = (1.0 / (sigma * sigma) + 1.0).floor() as usize + 1;
        let result: Result<()> = (|| {
            for _ in 0..ctx.config.decay_samples {
                let u = random_vector(&mut rng, max_degree, ctx.trunc);
                let f = c00_forward_decay(&p, &u, n_max)?;
                let a = c00_adjoint_decay(&p, &u, n_max)?;
                // bounds are on norms; compare relative to the start norm
                let scale = u.norm();
                fwd = fwd.max(excess(&f.measured, f.bound.iter().map(|b| Some(*b))) / scale);
                adj = adj.max(excess(&a.measured, a.bound.iter().map(|b| Some(*b))) / scale);
                fin = fin.max(excess(&f.measured, f.final_bound.iter().copied()) / scale);
                fin = fin.max(excess(&a.measured, a.final_bound.iter().copied()) / scale);
                for seq in [&f.measured, &a.measured] {
                    for w in seq.windows(2).skip(monotone_from.saturating_sub(1)) {
                        rise = rise.max((w[1] - w[0]) / scale);
                    }
                }
            }
            Ok(())
        })();
        if let Err(e) = result {
            out.push(CheckResult::failed(format!("decay_sigma_{sigma}"), &e));
            continue;
        }
        out.push(CheckResult::absolute(format!("decay_forward_bound_sigma_{sigma}"), 0.0, fwd, 1e-12));
        out.push(CheckResult::absolute(format!("decay_adjoint_bound_sigma_{sigma}"), 0.0, adj, 1e-12));
        out.push(CheckResult::absolute(format!("decay_final_bound_sigma_{sigma}"), 0.0, fin, 1e-12));
        out.push(CheckResult::absolute(format!("decay_eventually_decreasing_sigma_{sigma}"), 0.0, rise, 1e-12));

        // closed forms of the adjoint orbits of basis vectors
        let s = 1.0 / (1.0 + sigma * sigma).sqrt();
        let mut worst = 0.0f64;
        for start in [OrbitStart::Slot, OrbitStart::Monomial(0), OrbitStart::Monomial(7), OrbitStart::Monomial(40)] {
            let mut v = start.vector(ctx.trunc);
            for n in 1..=n_max {
                v = crate::brownian::apply_adjoint(&p, &v).scale(c(s, 0.0));
                let expect = adjoint_power_closed_form(&p, start, n, ctx.trunc);
                let norm = match start {
                    OrbitStart::Monomial(k) if k < n => sigma * s.powi(n as i32),
                    _ => s.powi(n as i32),
                };
                worst = worst.max(v.max_abs_diff(&expect)).max((v.norm() - norm).abs());
            }
        }
        out.push(CheckResult::absolute(format!("decay_adjoint_closed_forms_sigma_{sigma}"), 0.0, worst, 1e-12));
    }
    out.extend(guard("decay_sot_certificate", || {
        let cert = sot_convergence_certificate(&params(1.0, 0.0), 8, 40, 1e-3, ctx.trunc)?;
        Ok(vec![CheckResult::flag(
            "decay_sot_certificate",
            cert.certified_n.is_some_and(|n| n <= 30),
        )
        .with_detail(format!("certified n = {:?}", cert.certified_n))])
    }));
    out
}

fn g_norm_group(ctx: &Ctx) -> Vec<CheckResult> {
    let mut out = guard("g_norm_blaschke_grid", || {
        let sigma = 1.3;
        let mut worst = 0.0f64;
        for i in 0..10 {
            let alpha = 0.05 + 0.08 * i as f64;
            for j in 0..10 {
                let theta = 2.0 * PI * j as f64 / 10.0;
                let g = make_g(&InnerFunction::blaschke_factor(c(alpha, 0.0)), theta, sigma, ctx.trunc)?;
                let e = blaschke_g_norm_formula(alpha, theta, sigma);
                worst = worst.max((g.norm_sqr() - e).abs() / e);
            }
        }
        Ok(vec![CheckResult::absolute("g_norm_blaschke_grid", 0.0, worst, 1e-8)])
    });
    out.extend(guard("g_norm_atomic", || {
        let sigma = 1.0;
        let spec = SubspaceSpec::type2(unit_atom(), PI, sigma, ctx.trunc)?;
        let v = spec.g_norm_sq().unwrap_or(f64::NAN);
        Ok(vec![CheckResult::absolute("g_norm_atomic", sigma * sigma / 2.0, v, 1e-6)])
    }));
    out
}

fn integral_group(_: &Ctx) -> Vec<CheckResult> {
    guard("example2_integral", || Ok(example2_integral(1e-6)?.checks))
}

/// Inner functions used for invariance sweeps, none with an atom at the
/// angles of [`sweep_params`].
pub fn sweep_inner_functions() -> Vec<InnerFunction> {
    vec![
        InnerFunction::blaschke_factor(c(0.3, 0.0)),
        InnerFunction::blaschke_factor(c(0.0, 0.5)),
        InnerFunction::blaschke(&[c(0.3, 0.2), c(-0.4, 0.1)], 0.3),
        InnerFunction::atomic(0.3, 0.5),
        InnerFunction::product(vec![
            InnerFunction::blaschke_factor(c(0.2, -0.1)),
            InnerFunction::atomic(2.0, 0.3),
        ]),
    ]
}

pub fn sweep_params() -> Vec<(f64, f64)> {
    vec![(1.0, 0.0), (0.5, 1.0), (2.0, FRAC_PI_2), (0.25, PI), (4.0, 5.0)]
}

fn invariance_group(ctx: &Ctx) -> Vec<CheckResult> {
    let mut out = guard("invariance_type1", || {
        let mut worst = 0.0f64;
        for phi in sweep_inner_functions() {
            let spec = SubspaceSpec::type1(phi, ctx.trunc)?;
            for (s, t) in sweep_params() {
                worst = worst.max(invariance_residual(&spec, &params(s, t))?);
            }
        }
        Ok(vec![CheckResult::absolute("invariance_type1", 0.0, worst, 1e-10)])
    });
    out.extend(guard("invariance_type2_matched", || {
        let mut worst = 0.0f64;
        for (phi, (s, t)) in sweep_inner_functions().into_iter().zip(sweep_params()) {
            let spec = SubspaceSpec::type2(phi, t, s, ctx.trunc)?;
            worst = worst.max(invariance_residual(&spec, &params(s, t))?);
        }
        Ok(vec![CheckResult::absolute("invariance_type2_matched", 0.0, worst, 1e-8)])
    }));
    out.extend(guard("invariance_type2_mismatched_angle", || {
        let mut least = f64::INFINITY;
        for alpha in [0.2, 0.4, 0.6] {
            let spec = SubspaceSpec::type2(InnerFunction::blaschke_factor(c(alpha, 0.0)), 0.0, 1.0, ctx.trunc)?;
            least = least.min(invariance_residual(&spec, &params(1.0, 0.5))?);
        }
        Ok(vec![CheckResult::flag("invariance_type2_mismatched_angle", least > 1e-2)
            .with_detail(format!("smallest residual {least:.3e}"))])
    }));
    out
}

/// Type II pair for the Blaschke example at angle 0.
fn example1_pair(cfg: &Example1Config, order: usize) -> Result<(SubspaceSpec, SubspaceSpec, f64)> {
    let sigma2 = match cfg.sigma2 {
        Some(s) => s,
        None => example1_solve_sigma2(cfg.alpha1, cfg.alpha2, cfg.sigma1)
            .ok_or_else(|| LabError::domain("no equivalent covariance for these zeros"))?,
    };
    let a = SubspaceSpec::type2(InnerFunction::blaschke_factor(c(cfg.alpha1, 0.0)), 0.0, cfg.sigma1, order)?;
    let b = SubspaceSpec::type2(InnerFunction::blaschke_factor(c(cfg.alpha2, 0.0)), 0.0, sigma2, order)?;
    Ok((a, b, sigma2))
}

/// Type II pair for the Blaschke factor against the unit atom at angle π.
fn example2_pair(cfg: &Example2Config, order: usize) -> Result<(SubspaceSpec, SubspaceSpec, f64)> {
    let sigma2 = match cfg.sigma2 {
        Some(s) => s,
        None => example2_solve_sigma2(cfg.alpha, cfg.sigma1)
            .ok_or_else(|| LabError::domain("no equivalent covariance for this zero"))?,
    };
    let a = SubspaceSpec::type2(InnerFunction::blaschke_factor(c(cfg.alpha, 0.0)), PI, cfg.sigma1, order)?;
    let b = SubspaceSpec::type2(unit_atom(), PI, sigma2, order)?;
    Ok((a, b, sigma2))
}

fn native(spec: &SubspaceSpec) -> BrownianShiftParams {
    spec.native_params().expect("Type II subspaces carry parameters")
}

fn examples_group(ctx: &Ctx) -> Vec<CheckResult> {
    let e1 = &ctx.config.example1;
    let mut out = guard("example1", || {
        let (a, b, sigma2) = example1_pair(e1, ctx.trunc)?;
        let cond = example1_condition(e1.alpha1, e1.alpha2, e1.sigma1, sigma2, 1e-9);
        let verdict = classify((&a, &native(&a)), (&b, &native(&b)))?;
        let agree = CheckResult::flag("example1_classifier_agrees", cond.pass == verdict.equivalent)
            .with_detail(verdict.reason.as_str());
        // the same zeros at equal covariance differ in the ratio
        let b_same = SubspaceSpec::type2(InnerFunction::blaschke_factor(c(e1.alpha2, 0.0)), 0.0, e1.sigma1, ctx.trunc)?;
        let same = classify((&a, &native(&a)), (&b_same, &native(&b_same)))?;
        let expect_same = if e1.alpha1 == e1.alpha2 {
            EquivalenceReason::TypeIIMatch
        } else {
            EquivalenceReason::RatioMismatch
        };
        let g1 = a.g_norm_sq().unwrap_or(f64::NAN);
        Ok(vec![
            cond,
            agree,
            CheckResult::flag("example1_equal_covariance_reason", same.reason == expect_same)
                .with_detail(same.reason.as_str()),
            CheckResult::new(
                "example1_g_norm",
                e1.sigma1 * e1.sigma1 * (1.0 + e1.alpha1) / (1.0 - e1.alpha1),
                g1,
                1e-8,
            ),
        ])
    });
    let e2 = &ctx.config.example2;
    out.extend(guard("example2", || {
        let (a, b, sigma2) = example2_pair(e2, ctx.trunc)?;
        let cond = example2_condition(e2.alpha, e2.sigma1, sigma2, 1e-9);
        let verdict = classify((&a, &native(&a)), (&b, &native(&b)))?;
        let g1 = a.g_norm_sq().unwrap_or(f64::NAN);
        let g2 = b.g_norm_sq().unwrap_or(f64::NAN);
        Ok(vec![
            cond.clone(),
            CheckResult::flag("example2_classifier_agrees", cond.pass == verdict.equivalent)
                .with_detail(verdict.reason.as_str()),
            CheckResult::new(
                "example2_g1_norm",
                e2.sigma1 * e2.sigma1 * (1.0 - e2.alpha) / (1.0 + e2.alpha),
                g1,
                1e-8,
            ),
            CheckResult::absolute("example2_g2_norm", sigma2 * sigma2 / 2.0, g2, 1e-6),
        ])
    }));
    out
}

fn intertwiner_checks(name: &str, a: &SubspaceSpec, b: &SubspaceSpec) -> Result<Vec<CheckResult>> {
    let u = build_intertwiner((a, &native(a)), (b, &native(b)), None)?;
    let back = build_intertwiner((b, &native(b)), (a, &native(a)), None)?;
    let k = u.matrix.nrows();
    let inverse = (&back.matrix * &u.matrix - nalgebra::DMatrix::<Complex64>::identity(k, k)).norm();
    Ok(vec![
        CheckResult::absolute(format!("intertwiner_{name}_isometry"), 0.0, u.isometry_residual, 1e-8),
        CheckResult::absolute(format!("intertwiner_{name}_intertwining"), 0.0, u.intertwining_residual, 1e-7),
        CheckResult::absolute(format!("intertwiner_{name}_reverse_is_inverse"), 0.0, inverse, 1e-7),
    ])
}

fn intertwiner_group(ctx: &Ctx) -> Vec<CheckResult> {
    let mut out = guard("intertwiner_example1", || {
        let (a, b, _) = example1_pair(&ctx.config.example1, ctx.trunc)?;
        intertwiner_checks("example1", &a, &b)
    });
    out.extend(guard("intertwiner_example2", || {
        let (a, b, _) = example2_pair(&ctx.config.example2, ctx.trunc)?;
        intertwiner_checks("example2", &a, &b)
    }));
    out.extend(guard("intertwiner_two_zeros", || {
        let a = SubspaceSpec::type2(InnerFunction::blaschke_factor(c(0.3, 0.1)), 1.0, 0.5, ctx.trunc)?;
        let phi = InnerFunction::blaschke(&[c(0.2, 0.0), c(-0.1, 0.4)], 0.0);
        let s2 = matching_sigma(&a, &phi)?.ok_or_else(|| LabError::domain("no matching covariance"))?;
        let b = SubspaceSpec::type2(phi, 1.0, s2, ctx.trunc)?;
        intertwiner_checks("two_zeros", &a, &b)
    }));
    out
}

/// Type II subspaces for the reduction sweep; the last has an atom.
pub fn reduction_specs(order: usize) -> Result<Vec<SubspaceSpec>> {
    Ok(vec![
        SubspaceSpec::type2(InnerFunction::blaschke_factor(c(0.5, 0.0)), 0.0, 1.0, order)?,
        SubspaceSpec::type2(InnerFunction::blaschke(&[c(0.3, 0.2), c(-0.4, 0.1)], 0.3), 2.0, 0.7, order)?,
        SubspaceSpec::type2(InnerFunction::blaschke_factor(c(0.0, 0.3)), PI, 2.0, order)?,
        SubspaceSpec::type2(InnerFunction::blaschke_factor(c(-0.6, 0.0)), 4.0, 0.3, order)?,
        SubspaceSpec::type2(unit_atom(), PI, 1.0, order)?,
    ])
}

fn reduction_group(ctx: &Ctx) -> Vec<CheckResult> {
    guard("reduction", || {
        reduction_specs(ctx.trunc)?
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                let cmp = compare_reduced_spectrum(spec, &native(spec), None)?;
                Ok(CheckResult::absolute(format!("reduction_spectrum_{i}"), 0.0, cmp.max_gap, 1e-6)
                    .with_detail(format!("reduced sigma {:.6}", cmp.reduced.sigma())))
            })
            .collect()
    })
}

fn obstruction_group(ctx: &Ctx) -> Vec<CheckResult> {
    let mut out = guard("obstruction_type_mismatch", || {
        let phi = InnerFunction::blaschke_factor(c(0.5, 0.0));
        let p = params(1.0, 0.0);
        let a = SubspaceSpec::type1(phi.clone(), ctx.trunc)?;
        let b = SubspaceSpec::type2(phi, 0.0, 1.0, ctx.trunc)?;
        let verdict = classify((&a, &p), (&b, &p))?;
        let w = obstruction_witness((&a, &p), (&b, &p))?;
        Ok(vec![
            CheckResult::flag("obstruction_type_mismatch_reason", verdict.reason == EquivalenceReason::TypeMismatch)
                .with_detail(verdict.reason.as_str()),
            CheckResult::flag("obstruction_type_mismatch_norm_gap", w.norm_gap > 1e-6)
                .with_detail(format!("gap {:.6e}", w.norm_gap)),
        ])
    });
    out.extend(guard("obstruction_angle_mismatch", || {
        let phi = InnerFunction::blaschke_factor(c(0.4, 0.0));
        let a = SubspaceSpec::type2(phi.clone(), 0.0, 1.0, ctx.trunc)?;
        let b = SubspaceSpec::type2(phi, FRAC_PI_2, 1.0, ctx.trunc)?;
        let verdict = classify((&a, &native(&a)), (&b, &native(&b)))?;
        let w = obstruction_witness((&a, &native(&a)), (&b, &native(&b)))?;
        let witnessed = w.norm_gap > 1e-6 || w.phase_gap.is_some_and(|g| g > 1e-6);
        Ok(vec![
            CheckResult::flag(
                "obstruction_angle_mismatch_reason",
                verdict.reason == EquivalenceReason::AngleMismatch,
            )
            .with_detail(verdict.reason.as_str()),
            CheckResult::flag("obstruction_angle_mismatch_witness", witnessed)
                .with_detail(format!("norm gap {:.3e}, phase gap {:?}", w.norm_gap, w.phase_gap)),
        ])
    }));
    out
}

fn orbit_group(ctx: &Ctx) -> Vec<CheckResult> {
    let mut rng = ctx.rng("orbit");
    let p = params(1.0, FRAC_PI_4);
    let mut out = Vec::new();
    for order in [32, 64] {
        let name = format!("orbit_full_n{order}");
        let mut starts = vec![BrownianVector::slot(order), BrownianVector::monomial(0, order)];
        starts.extend((0..ctx.config.orbit_starts).map(|_| random_vector(&mut rng, order - 1, order)));
        let mut full = 0;
        let mut err = None;
        for v in &starts {
            match joint_orbit_span(&p, v, order) {
                Ok(cert) => full += cert.full as usize,
                Err(e) => err = Some(e),
            }
        }
        out.push(match err {
            Some(e) => CheckResult::failed(name, &e),
            None => CheckResult::new(name, starts.len() as f64, full as f64, 0.0),
        });
    }
    for (s, t) in [(1.0, 0.0), (0.5, FRAC_PI_2), (2.0, 1.0), (0.25, 3.0)] {
        let name = format!("commutant_dimension_sigma_{s}_theta_{t}");
        out.push(match commutant_dimension(&params(s, t), 32) {
            Ok(d) => CheckResult::new(name, 1.0, d as f64, 0.0),
            Err(e) => CheckResult::failed(name, &e),
        });
    }
    out.push(match shift_control_commutant_dimension(32) {
        Ok(d) => CheckResult::flag("commutant_shift_control_reducible", d >= 2).with_detail(format!("dimension {d}")),
        Err(e) => CheckResult::failed("commutant_shift_control_reducible", &e),
    });
    out
}
