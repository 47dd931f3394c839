//! Tetrahedral kernels, state integrals of closed shaped complexes, the
//! one-dimensional 4₁ and 5₂ functions and volume-rate fits.

mod assemble;
mod chi;
mod fit;
mod kernel;

use thiserror::Error;

use crate::qdilog::QDilogError;
use crate::quad::QuadError;

pub use assemble::{assemble, StateConfig, StateIntegral, StateValue};
pub use chi::{chi_41, chi_52, nu, z52_reduced, ChiConfig, ChiValue, Five2Reduction, LatticeConfig};
pub use fit::{fit_volume_rate, RateFit};
pub use kernel::{apply_level, phi_t, tet_kernel, TetKernel, DELTA_FORM};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("angles {angles:?} are not positive with sum 1")]
    NonPositiveAngles { angles: [f64; 3] },
    #[error("not balanced: {0}")]
    NotBalanced(String),
    #[error("not admissible: {0}")]
    NotAdmissible(String),
    #[error("the {constraints} delta constraints have rank {rank}")]
    DegenerateDeltaSystem { rank: usize, constraints: usize },
    #[error("the differences x₃ − x₂ are not independent coordinates on the constraint space")]
    SingularDecayMap,
    #[error("no contour shift gives decay along axis {axis} (best rate {rate:e})")]
    NoDecay { axis: usize, rate: f64 },
    #[error(transparent)]
    Dilog(#[from] QDilogError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("ill-conditioned fit: {0}")]
    IllConditionedFit(String),
}

pub(crate) fn ser_complex<S: serde::Serializer>(z: &num_complex::Complex64, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeStruct;
    let mut st = s.serialize_struct("Complex", 2)?;
    st.serialize_field("re", &z.re)?;
    st.serialize_field("im", &z.im)?;
    st.end()
}
