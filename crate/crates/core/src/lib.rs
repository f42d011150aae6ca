//! Fractional gradient and divergence calculus on uniform grids.
//!
//! Operators (∇^α, div^α, div^{−α}, fractional Laplacian, Riesz potential),
//! fractional perimeters and variation measures, closed-form references,
//! verification suites and blow-up experiments for sets of finite
//! fractional perimeter.

// `!(x > 0.0)` guards reject NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod blowup;
pub mod constants;
pub mod conv;
pub mod error;
pub mod fields;
pub mod measures;
pub mod operators;
pub mod oracles;
pub mod par;
pub mod quad;
pub mod shapes;
pub mod special;
pub mod suites;

pub use error::{FracError, Result};
pub use fields::{AnalyticFn, GridSpec, ScalarField, VectorField};
pub use operators::{Backend, BackendKind, ErrorBudget};
pub use shapes::{BoundedRegion, ShapeSet};
