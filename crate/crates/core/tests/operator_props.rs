mod common;

use brownian_lab::asymptotics::{c00_adjoint_decay, c00_forward_decay, power_norm_growth};
use brownian_lab::brownian::{
    apply, apply_adjoint, operator_norm, power_apply, power_closed_form, rank_one_decomposition, truncated_matrix,
    BrownianShiftParams, BrownianVector,
};
use common::*;
use num_complex::Complex64;
use proptest::prelude::*;

const N: usize = 48;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn adjoint_pairing(p in params(), v in brownian(N, N - 1), w in brownian(N, N)) {
        let lhs = apply(&p, &v).inner(&w).unwrap();
        let rhs = v.inner(&apply_adjoint(&p, &w)).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-12 * v.norm().max(1.0) * w.norm().max(1.0) * operator_norm(&p));
    }

    #[test]
    fn norm_is_never_exceeded(p in params(), v in brownian(N, N)) {
        let unit = v.scale(Complex64::new(1.0 / v.norm(), 0.0));
        prop_assert!(apply(&p, &unit).norm() <= operator_norm(&p) + 1e-12);
    }

    #[test]
    fn slot_attains_the_norm(p in params()) {
        let image = apply(&p, &BrownianVector::slot(N)).norm();
        prop_assert!((image - operator_norm(&p)).abs() <= 1e-15 * operator_norm(&p));
    }

    #[test]
    fn powers_match_closed_form(p in params(), m in 0usize..N) {
        let direct = power_apply(&p, m, &BrownianVector::slot(N)).unwrap();
        let closed = power_closed_form(&p, m, N).unwrap();
        prop_assert!(direct.max_abs_diff(&closed) < 1e-12 * (1.0 + m as f64 * p.sigma()));
    }

    #[test]
    fn decomposition_is_exact(p in params(), n in 2usize..40) {
        let (bs, r) = rank_one_decomposition(&p, n).unwrap();
        let t = truncated_matrix(&p, n).unwrap();
        prop_assert_eq!(t.matrix(), &(bs.matrix() + r.matrix()));
    }

    #[test]
    fn normalized_operator_is_a_contraction(p in params(), v in brownian(N, N)) {
        let s = Complex64::new(1.0 / operator_norm(&p), 0.0);
        prop_assert!(apply(&p, &v).scale(s).norm() <= v.norm() * (1.0 + 1e-14));
        prop_assert!(apply_adjoint(&p, &v).scale(s).norm() <= v.norm() * (1.0 + 1e-14));
    }

    #[test]
    fn growth_is_exact_and_increasing(sigma in 0.05f64..5.0, t in angle()) {
        let p = BrownianShiftParams::new(sigma, t).unwrap();
        let g = power_norm_growth(&p, 200, 256).unwrap();
        for (i, v) in g.iter().enumerate() {
            let e = 1.0 + (i + 1) as f64 * sigma * sigma;
            prop_assert!((v - e).abs() <= 1e-12 * e);
        }
        prop_assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn decay_bounds_dominate(
        sigma in prop::sample::select(vec![0.25, 1.0, 4.0]),
        t in angle(),
        u in brownian(128, 40),
    ) {
        let p = BrownianShiftParams::new(sigma, t).unwrap();
        let f = c00_forward_decay(&p, &u, 60).unwrap();
        let a = c00_adjoint_decay(&p, &u, 60).unwrap();
        prop_assert!(f.satisfied && a.satisfied);
        prop_assert!(f.final_bound_satisfied() && a.final_bound_satisfied());
        // eventually decreasing, from where the bound is
        let from = (1.0 / (sigma * sigma) + 1.0).floor() as usize;
        for seq in [&f.measured, &a.measured] {
            for w in seq.windows(2).skip(from) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-14));
            }
        }
    }
}
