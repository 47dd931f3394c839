//! Shape structures, edge weights, angle-structure feasibility and volume.
//!
//! Angles are stored in units of π: a tetrahedron carries `[α₁, α₂, α₃]`
//! with α_j at the edge joining vertices 0 and j (and its opposite edge).

mod lobachevsky;
mod solve;
mod volume;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::mesh::{angle_slot, codec::TriFile, Triangulation};
use crate::scalar::Scalar;
use crate::Rational;

pub use lobachevsky::{lobachevsky, lobachevsky_derivative};
pub use solve::{
    balanced_space, default_targets, solve_shape, BalancedSpace, InfeasibilityCertificate, WeightTargets,
};
pub use volume::{maximize_volume, maximize_volume_with, volume, volume_gradient, VolumeOptions, VolumeResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AngleError {
    #[error("shape has {found} tetrahedra, triangulation has {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("angles of tetrahedron {tet} sum to {sum}, expected 1")]
    BadAngleSum { tet: usize, sum: f64 },
    #[error("no strictly positive angle structure with the requested weights")]
    Infeasible(InfeasibilityCertificate),
    #[error("the slack of the angle program is unbounded")]
    UnboundedSlack,
    #[error("the weight equations are inconsistent")]
    EmptyAffineSpace,
    #[error("edge {0} is not an edge class of the triangulation")]
    UnknownEdge(usize),
    #[error("volume maximization did not converge: kkt residual {residual:e} after {iterations} iterations")]
    NotConverged { residual: f64, iterations: usize },
}

/// Per-tetrahedron angle triples (units of π) and the level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShapeAssignment<S> {
    pub angles: Vec<[S; 3]>,
    pub level: S,
}

impl<S: Scalar> ShapeAssignment<S> {
    /// Checks that each triple sums to one.
    pub fn new(angles: Vec<[S; 3]>, level: S) -> Result<Self, AngleError> {
        for (tet, [a, b, c]) in angles.iter().enumerate() {
            let sum = a.clone() + b.clone() + c.clone();
            if !(sum.clone() - S::one()).is_negligible() {
                return Err(AngleError::BadAngleSum { tet, sum: sum.to_f64_lossy() });
            }
        }
        Ok(ShapeAssignment { angles, level })
    }

    pub fn uniform(n: usize, triple: [S; 3]) -> Result<Self, AngleError> {
        Self::new(vec![triple; n], S::zero())
    }

    pub fn num_tets(&self) -> usize {
        self.angles.len()
    }

    /// All angles strictly positive.
    pub fn is_positive(&self) -> bool {
        self.angles.iter().flatten().all(|a| *a > S::zero() && !a.is_negligible())
    }

    /// Angle at the local edge `ab` of tetrahedron `tet`.
    pub fn angle_at(&self, tet: usize, a: u8, b: u8) -> &S {
        &self.angles[tet][angle_slot(a, b)]
    }

    pub fn to_f64(&self) -> ShapeAssignment<f64> {
        ShapeAssignment {
            angles: self.angles.iter().map(|t| [t[0].to_f64_lossy(), t[1].to_f64_lossy(), t[2].to_f64_lossy()]).collect(),
            level: self.level.to_f64_lossy(),
        }
    }

    pub fn check_dims(&self, tri: &Triangulation) -> Result<(), AngleError> {
        if self.angles.len() != tri.num_tets() {
            return Err(AngleError::DimensionMismatch { expected: tri.num_tets(), found: self.angles.len() });
        }
        Ok(())
    }
}

impl ShapeAssignment<Rational> {
    /// The angle triples stored in a parsed file, if every tetrahedron has one.
    pub fn from_file(file: &TriFile) -> Option<Result<Self, AngleError>> {
        let n = file.triangulation.num_tets();
        if file.angles.len() != n || n == 0 {
            return None;
        }
        Some(Self::new(file.angles.values().cloned().collect(), Rational::from_ratio(0, 1)))
    }
}

/// Weight of each edge class: sum of incident angles with multiplicity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeWeightVector<S> {
    pub weights: Vec<S>,
}

impl<S: Scalar> EdgeWeightVector<S> {
    pub fn total(&self) -> S {
        self.weights.iter().fold(S::zero(), |acc, w| acc + w.clone())
    }
}

pub fn edge_weights<S: Scalar>(
    tri: &Triangulation,
    shape: &ShapeAssignment<S>,
) -> Result<EdgeWeightVector<S>, AngleError> {
    shape.check_dims(tri)?;
    let weights = tri
        .cells()
        .edges
        .iter()
        .map(|e| {
            e.members
                .iter()
                .fold(S::zero(), |acc, m| acc + shape.angle_at(m.tet, m.a, m.b).clone())
        })
        .collect();
    Ok(EdgeWeightVector { weights })
}

/// Integer coefficient rows of the edge weights in the coordinates
/// `(α₁, α₂, α₃)` of tetrahedra 0, 1, ...
pub fn weight_forms(tri: &Triangulation) -> Vec<Vec<i64>> {
    tri.cells()
        .edges
        .iter()
        .map(|e| {
            let mut row = vec![0; 3 * tri.num_tets()];
            for m in &e.members {
                row[3 * m.tet + angle_slot(m.a, m.b)] += 1;
            }
            row
        })
        .collect()
}

/// Edges whose weight differs from the target, with the observed weight.
pub fn unbalanced_edges<S: Scalar>(
    tri: &Triangulation,
    shape: &ShapeAssignment<S>,
    targets: &BTreeMap<usize, S>,
) -> Result<Vec<(usize, S)>, AngleError> {
    let w = edge_weights(tri, shape)?;
    Ok(targets
        .iter()
        .filter(|(e, t)| !(w.weights[**e].clone() - (*t).clone()).is_negligible())
        .map(|(e, _)| (*e, w.weights[*e].clone()))
        .collect())
}
