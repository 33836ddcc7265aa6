//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::f64::consts::{FRAC_PI_4, PI};
use std::process::Command;
use std::time::{Duration, Instant};

use brownian_lab::asymptotics::{adjoint_power_closed_form, c00_adjoint_decay, c00_forward_decay, power_norm_growth, OrbitStart};
use brownian_lab::brownian::{apply, apply_adjoint, norm_diagnostic, operator_norm, BrownianShiftParams, BrownianVector};
use brownian_lab::commutant::{commutant_dimension, joint_orbit_span, shift_control_commutant_dimension};
use brownian_lab::hardy::{make_g, InnerFunction};
use brownian_lab::subspace::{
    build_intertwiner, classify, compare_reduced_spectrum, invariance_residual, matching_sigma, obstruction_witness,
    EquivalenceReason, SubspaceSpec,
};
use brownian_lab::suite::battery::{random_vector, reduction_specs, sweep_inner_functions, sweep_params, DEFAULT_SEED};
use brownian_lab::suite::closed_forms::{blaschke_g_norm_formula, example2_integral, unit_atom};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn params(s: f64, t: f64) -> BrownianShiftParams {
    BrownianShiftParams::new(s, t).unwrap()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lab<T>(r: brownian_lab::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn norm_formula() -> Outcome {
    let mut worst = 0.0f64;
    for sigma in [0.25, 1.0, 2.0, 5.0] {
        let p = params(sigma, 0.0);
        let d = lab(norm_diagnostic(&p, 128, DEFAULT_SEED))?;
        ensure(d.gap <= 1e-6, || format!("sigma {sigma}: truncated gap {:e}", d.gap))?;
        let slot = apply(&p, &BrownianVector::slot(128)).norm();
        ensure((slot - operator_norm(&p)).abs() <= 1e-12, || format!("sigma {sigma}: ‖B(0,1)‖ = {slot}"))?;
        worst = worst.max(d.gap);
    }
    Ok(format!("largest truncated gap {worst:.2e}"))
}

fn power_growth() -> Outcome {
    let mut worst = 0.0f64;
    for sigma in [0.5, 1.0, 2.0] {
        let g = lab(power_norm_growth(&params(sigma, 0.3), 200, 256))?;
        for (i, v) in g.iter().enumerate() {
            let e = 1.0 + (i + 1) as f64 * sigma * sigma;
            worst = worst.max((v - e).abs() / e);
        }
    }
    ensure(worst <= 1e-12, || format!("relative error {worst:e}"))?;
    Ok(format!("max relative error {worst:.2e}"))
}

fn decay() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let n_max = 60;
    let order = 128;
    let mut closed = 0.0f64;
    for sigma in [0.25, 1.0, 4.0] {
        let p = params(sigma, rng.random_range(0.0..2.0 * PI));
        for i in 0..200 {
            let u = random_vector(&mut rng, 40, order);
            let f = lab(c00_forward_decay(&p, &u, n_max))?;
            let a = lab(c00_adjoint_decay(&p, &u, n_max))?;
            ensure(f.satisfied, || format!("forward bound violated, sigma {sigma}, sample {i}"))?;
            ensure(a.satisfied, || format!("adjoint bound violated, sigma {sigma}, sample {i}"))?;
        }
        let s = 1.0 / (1.0 + sigma * sigma).sqrt();
        for start in [OrbitStart::Slot, OrbitStart::Monomial(0), OrbitStart::Monomial(5), OrbitStart::Monomial(70)] {
            let mut v = start.vector(order);
            for n in 1..=n_max {
                v = apply_adjoint(&p, &v).scale(c(s, 0.0));
                let expect = match start {
                    OrbitStart::Monomial(k) if k < n => sigma * s.powi(n as i32),
                    _ => s.powi(n as i32),
                };
                closed = closed
                    .max((v.norm() - expect).abs())
                    .max(v.max_abs_diff(&adjoint_power_closed_form(&p, start, n, order)));
            }
        }
    }
    ensure(closed <= 1e-12, || format!("closed-form error {closed:e}"))?;
    Ok(format!("600 orbits within bounds, closed-form error {closed:.2e}"))
}

fn g_norms() -> Outcome {
    let sigma = 1.0;
    let mut worst = 0.0f64;
    for i in 0..10 {
        let alpha = 0.05 + 0.09 * i as f64;
        for j in 0..10 {
            let theta = 2.0 * PI * j as f64 / 10.0;
            let g = lab(make_g(&InnerFunction::blaschke_factor(c(alpha, 0.0)), theta, sigma, 256))?;
            worst = worst.max((g.norm_sqr() - blaschke_g_norm_formula(alpha, theta, sigma)).abs());
        }
    }
    ensure(worst <= 1e-8, || format!("grid error {worst:e}"))?;
    let mut atomic = 0.0f64;
    for sigma in [0.5, 1.0, 2.0] {
        let spec = lab(SubspaceSpec::type2(unit_atom(), PI, sigma, 256))?;
        atomic = atomic.max((spec.g_norm_sq().unwrap() - sigma * sigma / 2.0).abs());
    }
    ensure(atomic <= 1e-6, || format!("atomic error {atomic:e}"))?;
    Ok(format!("grid error {worst:.2e}, atomic error {atomic:.2e}"))
}

fn integral() -> Outcome {
    let r = lab(example2_integral(1e-6))?;
    let (x, t) = (r.x_path, r.theta_path);
    ensure((x - PI).abs() <= 1e-6, || format!("x path {x}"))?;
    ensure((t - PI).abs() <= 1e-6, || format!("theta path {t}"))?;
    ensure((x - t).abs() <= 2e-6, || format!("paths differ by {:e}", (x - t).abs()))?;
    Ok(format!("x path {:.2e} off, θ path {:.2e} off", (x - PI).abs(), (t - PI).abs()))
}

fn invariance() -> Outcome {
    let (mut t1, mut t2, mut mis) = (0.0f64, 0.0f64, f64::INFINITY);
    for phi in sweep_inner_functions() {
        let spec1 = lab(SubspaceSpec::type1(phi.clone(), 256))?;
        for (s, t) in sweep_params() {
            let p = params(s, t);
            t1 = t1.max(lab(invariance_residual(&spec1, &p))?);
            let spec2 = lab(SubspaceSpec::type2(phi.clone(), t, s, 256))?;
            t2 = t2.max(lab(invariance_residual(&spec2, &p))?);
        }
    }
    for alpha in [0.2, 0.4] {
        let spec = lab(SubspaceSpec::type2(InnerFunction::blaschke_factor(c(alpha, 0.0)), 0.0, 1.0, 256))?;
        for theta in [0.5, PI, 4.0] {
            mis = mis.min(lab(invariance_residual(&spec, &params(1.0, theta)))?);
        }
    }
    ensure(t1 < 1e-10, || format!("Type I residual {t1:e}"))?;
    ensure(t2 < 1e-8, || format!("Type II residual {t2:e}"))?;
    ensure(mis > 1e-2, || format!("mismatched residual {mis:e}"))?;
    Ok(format!("Type I {t1:.1e}, Type II {t2:.1e}, mismatched ≥ {mis:.2}"))
}

fn random_blaschke(rng: &mut ChaCha8Rng) -> InnerFunction {
    let k = rng.random_range(1..=2);
    let zeros: Vec<Complex64> = (0..k)
        .map(|_| Complex64::from_polar(rng.random_range(0.0..0.6), rng.random_range(0.0..2.0 * PI)))
        .collect();
    InnerFunction::blaschke(&zeros, rng.random_range(0.0..2.0 * PI))
}

fn native(s: &SubspaceSpec) -> BrownianShiftParams {
    s.native_params().unwrap()
}

fn intertwiners() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED ^ 7);
    let (mut iso, mut int) = (0.0f64, 0.0f64);
    let mut made = 0;
    while made < 20 {
        let theta = rng.random_range(0.0..2.0 * PI);
        let a = lab(SubspaceSpec::type2(random_blaschke(&mut rng), theta, rng.random_range(0.1..0.5), 256))?;
        let phi2 = random_blaschke(&mut rng);
        let Some(s2) = lab(matching_sigma(&a, &phi2))? else { continue };
        let b = lab(SubspaceSpec::type2(phi2, theta, s2, 256))?;
        let u = lab(build_intertwiner((&a, &native(&a)), (&b, &native(&b)), None))?;
        iso = iso.max(u.isometry_residual);
        int = int.max(u.intertwining_residual);
        made += 1;
    }
    ensure(iso < 1e-8, || format!("isometry residual {iso:e}"))?;
    ensure(int < 1e-7, || format!("intertwining residual {int:e}"))?;

    let mut least_gap = f64::INFINITY;
    for i in 0..20 {
        let theta = rng.random_range(0.0..2.0 * PI);
        let sigma = rng.random_range(0.3..2.0);
        let phi = random_blaschke(&mut rng);
        let a = lab(SubspaceSpec::type2(phi.clone(), theta, sigma, 256))?;
        let pa = native(&a);
        let (b, pb, want) = match i % 3 {
            0 => (lab(SubspaceSpec::type1(phi, 256))?, pa, EquivalenceReason::TypeMismatch),
            1 => {
                let t2 = theta + rng.random_range(0.2..PI);
                let b = lab(SubspaceSpec::type2(phi, t2, sigma, 256))?;
                let pb = native(&b);
                (b, pb, EquivalenceReason::AngleMismatch)
            }
            _ => {
                let b = lab(SubspaceSpec::type2(random_blaschke(&mut rng), theta, sigma * 1.5, 256))?;
                let pb = native(&b);
                (b, pb, EquivalenceReason::RatioMismatch)
            }
        };
        let v = lab(classify((&a, &pa), (&b, &pb)))?;
        ensure(v.reason == want, || format!("pair {i}: reason {} instead of {}", v.reason.as_str(), want.as_str()))?;
        let w = lab(obstruction_witness((&a, &pa), (&b, &pb)))?;
        let gap = w.norm_gap.max(w.phase_gap.unwrap_or(0.0));
        if want == EquivalenceReason::TypeMismatch {
            let expected = w.expected_norms.0 - 1.0;
            ensure(expected > 1e-6, || format!("pair {i}: expected gap {expected:e}"))?;
            ensure(w.gap_error < 1e-6, || format!("pair {i}: gap error {:e}", w.gap_error))?;
        }
        ensure(gap > 1e-6, || format!("pair {i}: no witness (gap {gap:e})"))?;
        least_gap = least_gap.min(gap);
    }
    Ok(format!("isometry {iso:.1e}, intertwining {int:.1e}; smallest obstruction {least_gap:.2e}"))
}

fn reduction() -> Outcome {
    let mut worst = 0.0f64;
    for spec in lab(reduction_specs(256))? {
        worst = worst.max(lab(compare_reduced_spectrum(&spec, &native(&spec), None))?.max_gap);
    }
    ensure(worst < 1e-6, || format!("spectrum gap {worst:e}"))?;
    Ok(format!("largest spectrum gap {worst:.2e}"))
}

fn irreducibility() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED ^ 9);
    let p = params(1.0, FRAC_PI_4);
    for order in [32, 64] {
        for i in 0..50 {
            let v = random_vector(&mut rng, order - 1, order);
            let cert = lab(joint_orbit_span(&p, &v, order))?;
            ensure(cert.full, || format!("N={order} start {i}: reached {}", cert.reached_dimension))?;
        }
    }
    for (s, t) in [(1.0, 0.0), (0.5, PI / 2.0), (2.0, 1.0), (0.25, 3.0)] {
        let d = lab(commutant_dimension(&params(s, t), 32))?;
        ensure(d == 1, || format!("commutant dimension {d} at sigma {s}, theta {t}"))?;
    }
    let control = lab(shift_control_commutant_dimension(32))?;
    ensure(control >= 2, || format!("control dimension {control}"))?;
    Ok(format!("100 full orbits, commutant 1 for 4 pairs, control {control}"))
}

fn battery() -> Outcome {
    let out = Command::new(env!("CARGO_BIN_EXE_bsl"))
        .args(["verify-paper", "--format", "text"])
        .env_remove("BSL_TRUNC")
        .output()
        .map_err(|e| e.to_string())?;
    let text = String::from_utf8_lossy(&out.stdout);
    let summary = text.lines().last().unwrap_or("").to_string();
    ensure(out.status.success(), || format!("exit {:?}: {summary}", out.status.code()))?;
    Ok(summary)
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 10] = [
        ("norm formula", Duration::from_secs(5), norm_formula),
        ("power growth", Duration::from_secs(1), power_growth),
        ("C00 decay", Duration::from_secs(10), decay),
        ("g-norm closed forms", Duration::from_secs(20), g_norms),
        ("integral identity", Duration::from_secs(10), integral),
        ("invariance", Duration::from_secs(10), invariance),
        ("constructive equivalence", Duration::from_secs(30), intertwiners),
        ("restriction reduction", Duration::from_secs(20), reduction),
        ("irreducibility evidence", Duration::from_secs(60), irreducibility),
        ("verify-paper battery", Duration::from_secs(180), battery),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= *budget => (true, d),
            Ok(d) => (false, format!("{d}; over budget {budget:?}")),
            Err(e) => (false, e),
        };
        failed += usize::from(!ok);
        println!(
            "criterion {:>2} {} {name} ({:.2}s): {detail}",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
