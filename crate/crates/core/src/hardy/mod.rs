//! Hardy-space plumbing: truncated power series, inner functions, boundary
//! quadrature and the model-space vector `g`.

pub mod inner;
pub mod model;
pub mod quadrature;
pub mod taylor;
pub mod vector;

pub use inner::{boundary_value, inner_eval, Atom, BoundaryValue, ComplexJson, InnerFunction};
pub use model::{
    divide_by_boundary_root, g_norm_squared, make_g, model_space_project, GBoundary, NormRoute,
};
pub use quadrature::{circle_mean, circle_norm_squared, QuadratureMethod};
pub use taylor::{taylor_coefficients, TaylorConfig};
pub use vector::{h2_inner_product, HardyVector};
