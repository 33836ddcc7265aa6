//! Inner functions: finite Blaschke products, single-atom singular inner
//! functions `exp(s (z + ζ)/(z - ζ))`, and finite products of these.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Slack allowed on `|z| <= 1` before a point counts as outside the disc.
const DISC_SLACK: f64 = 1e-12;

/// Reduces an angle to `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Distance between two angles on the circle, in `[0, π]`.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = normalize_angle(a - b);
    d.min(TAU - d)
}

/// A complex number in the `{"re": .., "im": ..}` JSON shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexJson {
    fn from(c: Complex64) -> Self {
        Self { re: c.re, im: c.im }
    }
}

impl From<ComplexJson> for Complex64 {
    fn from(c: ComplexJson) -> Self {
        Complex64::new(c.re, c.im)
    }
}

/// A boundary atom `ζ = e^{i angle}` carrying point mass `mass`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub angle: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InnerFunction {
    /// `e^{i const_angle} Π (z - α_j)/(1 - conj(α_j) z)`.
    Blaschke {
        zeros: Vec<ComplexJson>,
        #[serde(default)]
        const_angle: f64,
    },
    /// `exp(mass (z + ζ)/(z - ζ))` with `ζ = e^{i atom_angle}`.
    Atomic { atom_angle: f64, mass: f64 },
    Product { factors: Vec<InnerFunction> },
}

/// Radial boundary value of an inner function at `e^{iθ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryValue {
    Defined(Complex64),
    /// `e^{iθ}` is an atom of a singular factor.
    Undefined,
}

impl BoundaryValue {
    pub fn defined(&self) -> bool {
        matches!(self, BoundaryValue::Defined(_))
    }

    pub fn value(&self) -> Option<Complex64> {
        match self {
            BoundaryValue::Defined(v) => Some(*v),
            BoundaryValue::Undefined => None,
        }
    }
}

impl InnerFunction {
    /// The constant function 1 (empty Blaschke product).
    pub fn one() -> Self {
        InnerFunction::Blaschke {
            zeros: Vec::new(),
            const_angle: 0.0,
        }
    }

    /// Single Blaschke factor `b_α(z) = (z - α)/(1 - conj(α) z)`.
    pub fn blaschke_factor(alpha: Complex64) -> Self {
        InnerFunction::Blaschke {
            zeros: vec![alpha.into()],
            const_angle: 0.0,
        }
    }

    pub fn blaschke(zeros: &[Complex64], const_angle: f64) -> Self {
        InnerFunction::Blaschke {
            zeros: zeros.iter().map(|&z| z.into()).collect(),
            const_angle,
        }
    }

    pub fn atomic(atom_angle: f64, mass: f64) -> Self {
        InnerFunction::Atomic { atom_angle, mass }
    }

    pub fn product(factors: Vec<InnerFunction>) -> Self {
        InnerFunction::Product { factors }
    }

    /// Checks descriptor ranges: zeros strictly inside the disc, positive finite
    /// masses, finite angles, nonempty-or-valid product lists.
    pub fn validate(&self) -> Result<()> {
        match self {
            InnerFunction::Blaschke { zeros, const_angle } => {
                if !const_angle.is_finite() {
                    return Err(LabError::Schema("const_angle must be finite".into()));
                }
                for z in zeros {
                    let c = Complex64::from(*z);
                    if !(c.re.is_finite() && c.im.is_finite()) || c.norm() >= 1.0 {
                        return Err(LabError::Schema(format!(
                            "Blaschke zero {c} must lie in the open unit disc"
                        )));
                    }
                }
                Ok(())
            }
            InnerFunction::Atomic { atom_angle, mass } => {
                if !atom_angle.is_finite() {
                    return Err(LabError::Schema("atom_angle must be finite".into()));
                }
                if !(mass.is_finite() && *mass > 0.0) {
                    return Err(LabError::Schema(format!("atom mass {mass} must be > 0")));
                }
                Ok(())
            }
            InnerFunction::Product { factors } => factors.iter().try_for_each(|f| f.validate()),
        }
    }

    /// All atoms of singular factors, in factor order.
    pub fn atoms(&self) -> Vec<Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut Vec<Atom>) {
        match self {
            InnerFunction::Blaschke { .. } => {}
            InnerFunction::Atomic { atom_angle, mass } => out.push(Atom {
                angle: normalize_angle(*atom_angle),
                mass: *mass,
            }),
            InnerFunction::Product { factors } => {
                factors.iter().for_each(|f| f.collect_atoms(out))
            }
        }
    }

    /// All Blaschke zeros, in factor order.
    pub fn zeros(&self) -> Vec<Complex64> {
        match self {
            InnerFunction::Blaschke { zeros, .. } => zeros.iter().map(|&z| z.into()).collect(),
            InnerFunction::Atomic { .. } => Vec::new(),
            InnerFunction::Product { factors } => factors.iter().flat_map(|f| f.zeros()).collect(),
        }
    }

    /// True for unimodular constants (no zeros, no atoms).
    pub fn is_constant(&self) -> bool {
        self.zeros().is_empty() && self.atoms().is_empty()
    }

    /// Analytic value at `z`, `|z| <= 1`.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        if !(z.re.is_finite() && z.im.is_finite()) || z.norm() > 1.0 + DISC_SLACK {
            return Err(LabError::domain(format!("|z| = {} > 1", z.norm())));
        }
        self.eval_unchecked(z)
    }

    fn eval_unchecked(&self, z: Complex64) -> Result<Complex64> {
        match self {
            InnerFunction::Blaschke { zeros, const_angle } => {
                let mut acc = Complex64::from_polar(1.0, *const_angle);
                for a in zeros {
                    let a = Complex64::from(*a);
                    acc *= (z - a) / (1.0 - a.conj() * z);
                }
                Ok(acc)
            }
            InnerFunction::Atomic { atom_angle, mass } => {
                let zeta = Complex64::from_polar(1.0, *atom_angle);
                let d = z - zeta;
                if d.norm() <= 4.0 * f64::EPSILON {
                    return Err(LabError::UndefinedBoundaryValue {
                        angle: normalize_angle(*atom_angle),
                    });
                }
                Ok((*mass * (z + zeta) / d).exp())
            }
            InnerFunction::Product { factors } => factors
                .iter()
                .try_fold(Complex64::new(1.0, 0.0), |acc, f| Ok(acc * f.eval_unchecked(z)?)),
        }
    }

    /// Boundary value at `e^{iθ}`. Atoms are recognised by exact match of the
    /// normalized stored angle; off the atoms the value is computed from the
    /// closed boundary formula of each factor.
    pub fn boundary_value(&self, theta: f64) -> BoundaryValue {
        match self.boundary_eval(theta) {
            Some(v) => BoundaryValue::Defined(v),
            None => BoundaryValue::Undefined,
        }
    }

    /// `None` exactly at atoms.
    pub fn boundary_eval(&self, theta: f64) -> Option<Complex64> {
        match self {
            InnerFunction::Blaschke { zeros, const_angle } => {
                let z = Complex64::from_polar(1.0, theta);
                let mut acc = Complex64::from_polar(1.0, *const_angle);
                for a in zeros {
                    let a = Complex64::from(*a);
                    acc *= (z - a) / (1.0 - a.conj() * z);
                }
                Some(acc)
            }
            InnerFunction::Atomic { atom_angle, mass } => {
                let t = normalize_angle(theta);
                let alpha = normalize_angle(*atom_angle);
                if t == alpha {
                    return None;
                }
                // (e^{iθ} + ζ)/(e^{iθ} - ζ) = -i cot((θ - α)/2) on the circle
                let cot = 1.0 / ((t - alpha) / 2.0).tan();
                Some(Complex64::from_polar(1.0, -mass * cot))
            }
            InnerFunction::Product { factors } => factors
                .iter()
                .try_fold(Complex64::new(1.0, 0.0), |acc, f| Some(acc * f.boundary_eval(theta)?)),
        }
    }
}

/// `inner_eval`: analytic value of `φ` at `z` in the closed disc.
pub fn inner_eval(phi: &InnerFunction, z: Complex64) -> Result<Complex64> {
    phi.eval(z)
}

/// `boundary_value`: radial limit at `e^{iθ}`, undefined at atoms.
pub fn boundary_value(phi: &InnerFunction, theta: f64) -> BoundaryValue {
    phi.boundary_value(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn blaschke_examples() {
        let b0 = InnerFunction::blaschke_factor(c(0.0, 0.0));
        assert!((b0.eval(c(0.5, 0.0)).unwrap() - c(0.5, 0.0)).norm() < 1e-15);
        let bh = InnerFunction::blaschke_factor(c(0.5, 0.0));
        assert!((bh.eval(c(0.0, 0.0)).unwrap() - c(-0.5, 0.0)).norm() < 1e-15);
        let bv = bh.boundary_value(0.0).value().unwrap();
        assert!((bv - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn atomic_examples() {
        let phi = InnerFunction::atomic(0.0, 1.0);
        let v = phi.eval(c(0.0, 0.0)).unwrap();
        assert!((v - c((-1.0f64).exp(), 0.0)).norm() < 1e-15);
        assert_eq!(phi.boundary_value(0.0), BoundaryValue::Undefined);
        assert_eq!(phi.boundary_value(TAU), BoundaryValue::Undefined);
        let at_pi = phi.boundary_value(PI).value().unwrap();
        assert!((at_pi - c(1.0, 0.0)).norm() < 1e-15);
        // radial limit oracle
        let radial = phi.eval(Complex64::from_polar(1.0 - 1e-9, PI)).unwrap();
        assert!((radial - at_pi).norm() < 1e-8);
        assert!(matches!(
            phi.eval(c(1.0, 0.0)),
            Err(LabError::UndefinedBoundaryValue { .. })
        ));
    }

    #[test]
    fn outside_disc_is_a_domain_error() {
        let phi = InnerFunction::blaschke_factor(c(0.3, 0.1));
        assert!(matches!(phi.eval(c(1.1, 0.0)), Err(LabError::Domain(_))));
    }

    #[test]
    fn unimodular_on_the_circle() {
        let phi = InnerFunction::product(vec![
            InnerFunction::blaschke(&[c(0.3, 0.4), c(-0.7, 0.1)], 0.3),
            InnerFunction::atomic(1.0, 2.0),
        ]);
        for k in 0..500 {
            let t = 0.0123 + k as f64 * TAU / 500.0;
            let v = phi.boundary_eval(t).unwrap();
            assert!((v.norm() - 1.0).abs() < 1e-12, "|phi| = {} at {t}", v.norm());
            let direct = phi.eval(Complex64::from_polar(1.0, t)).unwrap();
            assert!((direct.norm() - 1.0).abs() < 1e-9);
        }
        assert!(phi.eval(c(0.2, 0.1)).unwrap().norm() < 1.0);
    }

    #[test]
    fn json_shapes() {
        let phi: InnerFunction = serde_json::from_str(
            r#"{"kind":"product","factors":[
                {"kind":"blaschke","zeros":[{"re":0.5,"im":0.0}],"const_angle":0.0},
                {"kind":"atomic","atom_angle":0.0,"mass":1.0}]}"#,
        )
        .unwrap();
        phi.validate().unwrap();
        assert_eq!(phi.atoms().len(), 1);
        assert_eq!(phi.zeros(), vec![c(0.5, 0.0)]);
        let back: InnerFunction =
            serde_json::from_str(&serde_json::to_string(&phi).unwrap()).unwrap();
        assert_eq!(back, phi);

        let bad: InnerFunction =
            serde_json::from_str(r#"{"kind":"blaschke","zeros":[{"re":1.5,"im":0.0}]}"#).unwrap();
        assert!(bad.validate().is_err());
        assert!(serde_json::from_str::<InnerFunction>(r#"{"kind":"atomic","mass":1.0}"#).is_err());
    }
}
