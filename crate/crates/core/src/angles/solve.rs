use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::{weight_forms, AngleError, ShapeAssignment};
use crate::linalg::Matrix;
use crate::lp::{self, LpOutcome};
use crate::mesh::Triangulation;
use crate::Rational;

/// Prescribed weights (units of π) on a set of edge classes.
pub type WeightTargets = BTreeMap<usize, Rational>;

/// Weight 2 on every internal edge outside Γ.
pub fn default_targets(tri: &Triangulation) -> WeightTargets {
    tri.balance_edges().into_iter().map(|e| (e, Rational::from_integer(2.into()))).collect()
}

/// Row multipliers proving that the angle program has no solution.
///
/// Rows are the per-tetrahedron sum equations followed by the target edges
/// in increasing order. When `boundary_only` is set, nonnegative solutions
/// exist but none is strictly positive and the multipliers are the optimal
/// duals of the slack maximization.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InfeasibilityCertificate {
    #[serde(serialize_with = "ser_rationals")]
    pub multipliers: Vec<Rational>,
    pub edges: Vec<usize>,
    pub boundary_only: bool,
}

fn ser_rationals<S: serde::Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(ToString::to_string))
}

fn check_targets(tri: &Triangulation, targets: &WeightTargets) -> Result<(), AngleError> {
    match targets.keys().find(|&&e| e >= tri.num_edges()) {
        Some(&e) => Err(AngleError::UnknownEdge(e)),
        None => Ok(()),
    }
}

/// Equality system over the angle coordinates: sum rows, then target rows.
fn angle_system(tri: &Triangulation, targets: &WeightTargets) -> (Vec<Vec<Rational>>, Vec<Rational>) {
    let n = tri.num_tets();
    let forms = weight_forms(tri);
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for t in 0..n {
        let mut row = vec![Rational::zero(); 3 * n];
        for j in 0..3 {
            row[3 * t + j] = Rational::one();
        }
        rows.push(row);
        rhs.push(Rational::one());
    }
    for (&e, w) in targets {
        rows.push(forms[e].iter().map(|&k| Rational::from_integer(k.into())).collect());
        rhs.push(w.clone());
    }
    (rows, rhs)
}

impl InfeasibilityCertificate {
    /// Checks the certificate against the system it was produced for.
    ///
    /// Plain certificates satisfy Farkas' conditions `zᵀA ≥ 0`, `zᵀb < 0`, so no
    /// nonnegative angles exist. Boundary-only certificates are dual optimal
    /// for the slack: `zᵀA ≥ 0`, the column sums total at least one and
    /// `zᵀb = 0`, so the minimal angle is at most zero.
    pub fn verify(&self, tri: &Triangulation, targets: &WeightTargets) -> bool {
        let (rows, rhs) = angle_system(tri, targets);
        if rows.len() != self.multipliers.len() {
            return false;
        }
        let cols = rows[0].len();
        let sums: Vec<Rational> = (0..cols)
            .map(|j| rows.iter().zip(&self.multipliers).fold(Rational::zero(), |acc, (r, z)| acc + &r[j] * z))
            .collect();
        let b_sum = rhs.iter().zip(&self.multipliers).fold(Rational::zero(), |acc, (b, z)| acc + b * z);
        let nonneg = sums.iter().all(|s| !s.is_negative());
        if self.boundary_only {
            let total = sums.iter().fold(Rational::zero(), |acc, s| acc + s);
            nonneg && total >= Rational::one() && b_sum.is_zero()
        } else {
            nonneg && b_sum.is_negative()
        }
    }
}

/// A strictly positive angle assignment meeting the targets, chosen to
/// maximize the smallest angle slack.
pub fn solve_shape(tri: &Triangulation, targets: &WeightTargets) -> Result<ShapeAssignment<Rational>, AngleError> {
    check_targets(tri, targets)?;
    let n = tri.num_tets();
    let (rows, rhs) = angle_system(tri, targets);
    // variables: y (3n) ≥ 0 and τ ≥ 0 with α = y + τ
    let lp_rows: Vec<Vec<Rational>> = rows
        .iter()
        .map(|r| {
            let mut row = r.clone();
            let s = r.iter().fold(Rational::zero(), |acc, v| acc + v);
            row.push(s);
            row
        })
        .collect();
    let mut cost = vec![Rational::zero(); 3 * n + 1];
    cost[3 * n] = Rational::one();
    let a = Matrix::from_rows(lp_rows);
    let edges: Vec<usize> = targets.keys().copied().collect();
    match lp::solve(&a, &rhs, &cost) {
        LpOutcome::Infeasible { farkas } => Err(AngleError::Infeasible(InfeasibilityCertificate {
            multipliers: farkas,
            edges,
            boundary_only: false,
        })),
        LpOutcome::Unbounded => Err(AngleError::UnboundedSlack),
        LpOutcome::Optimal { x, value, duals } => {
            if !value.is_positive() {
                return Err(AngleError::Infeasible(InfeasibilityCertificate {
                    multipliers: duals,
                    edges,
                    boundary_only: true,
                }));
            }
            let tau = &x[3 * n];
            let angles = (0..n)
                .map(|t| [&x[3 * t] + tau, &x[3 * t + 1] + tau, &x[3 * t + 2] + tau])
                .collect();
            ShapeAssignment::new(angles, Rational::zero())
        }
    }
}

/// Affine space of generalized shapes (any sign) with prescribed weights.
#[derive(Clone, Debug, PartialEq)]
pub struct BalancedSpace {
    pub basepoint: Vec<Rational>,
    pub basis: Vec<Vec<Rational>>,
}

impl BalancedSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// The point `basepoint + Σ cᵢ basisᵢ`.
    pub fn point(&self, coords: &[Rational]) -> Vec<Rational> {
        let mut p = self.basepoint.clone();
        for (c, v) in coords.iter().zip(&self.basis) {
            for (pi, vi) in p.iter_mut().zip(v) {
                *pi += c * vi;
            }
        }
        p
    }
}

pub fn balanced_space(tri: &Triangulation, targets: &WeightTargets) -> Result<BalancedSpace, AngleError> {
    check_targets(tri, targets)?;
    let (rows, rhs) = angle_system(tri, targets);
    let m = Matrix::from_rows(rows);
    let basepoint = m.solve(&rhs).ok_or(AngleError::EmptyAffineSpace)?;
    Ok(BalancedSpace { basepoint, basis: m.nullspace() })
}
