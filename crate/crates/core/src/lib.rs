//! Numerical laboratory for Brownian shifts of covariance `σ` and angle `θ`
//! acting on `H² ⊕ ℂ`.

pub mod asymptotics;
pub mod brownian;
pub mod commutant;
pub mod error;
pub mod hardy;
pub mod subspace;
pub mod suite;

pub use error::{LabError, Result};
