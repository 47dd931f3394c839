//! Shaped triangulations, Faddeev's quantum dilogarithm and state integrals
//! of the Teichmüller TQFT.

pub mod linalg;
pub mod mesh;
pub mod scalar;

pub use scalar::{Real, Scalar};

/// Exact rational numbers.
pub type Rational = num_rational::BigRational;

pub mod angles;
pub mod lp;
pub mod pachner;
pub mod qdilog;
pub mod quad;
pub mod state;
pub mod wgz;

pub use angles::ShapeAssignment;

/// Floating point shapes.
pub type Shape = ShapeAssignment<f64>;
/// Exact shapes.
pub type ExactShape = ShapeAssignment<Rational>;
