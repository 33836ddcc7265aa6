#![allow(dead_code)]

use brownian_lab::brownian::{BrownianShiftParams, BrownianVector};
use brownian_lab::hardy::{HardyVector, InnerFunction};
use num_complex::Complex64;
use proptest::prelude::*;

pub fn complex(scale: f64) -> impl Strategy<Value = Complex64> {
    (-scale..scale, -scale..scale).prop_map(|(re, im)| Complex64::new(re, im))
}

/// A point with modulus at most `r`.
pub fn disc_point(r: f64) -> impl Strategy<Value = Complex64> {
    (0.0..r, 0.0..std::f64::consts::TAU).prop_map(|(m, a)| Complex64::from_polar(m, a))
}

pub fn angle() -> impl Strategy<Value = f64> {
    0.0..std::f64::consts::TAU
}

pub fn params() -> impl Strategy<Value = BrownianShiftParams> {
    (0.05f64..5.0, angle()).prop_map(|(s, t)| BrownianShiftParams::new(s, t).unwrap())
}

/// Truncated series of order `order` whose degree is below `max_len`.
pub fn hardy(order: usize, max_len: usize) -> impl Strategy<Value = HardyVector> {
    prop::collection::vec(complex(1.0), 1..=max_len).prop_map(move |c| HardyVector::from_coeffs(&c, order))
}

pub fn brownian(order: usize, max_len: usize) -> impl Strategy<Value = BrownianVector> {
    (hardy(order, max_len), complex(1.0)).prop_map(|(f, a)| BrownianVector::new(f, a))
}

pub fn blaschke(max_zeros: usize, r: f64) -> impl Strategy<Value = InnerFunction> {
    (prop::collection::vec(disc_point(r), 1..=max_zeros), angle())
        .prop_map(|(z, a)| InnerFunction::blaschke(&z, a))
}

pub fn atomic() -> impl Strategy<Value = InnerFunction> {
    (angle(), 0.1f64..2.0).prop_map(|(a, m)| InnerFunction::atomic(a, m))
}

/// Blaschke products, single atoms and their products.
pub fn inner() -> impl Strategy<Value = InnerFunction> {
    prop_oneof![
        blaschke(3, 0.9),
        atomic(),
        (blaschke(2, 0.8), atomic()).prop_map(|(b, s)| InnerFunction::product(vec![b, s])),
    ]
}
