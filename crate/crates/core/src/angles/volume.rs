use std::f64::consts::PI;

use serde::Serialize;

use super::{balanced_space, default_targets, lobachevsky, lobachevsky_derivative, solve_shape};
use super::{AngleError, ShapeAssignment, WeightTargets};
use crate::linalg::Matrix;
use crate::mesh::Triangulation;

/// Σ over tetrahedra of Λ(πα₁) + Λ(πα₂) + Λ(πα₃).
pub fn volume(shape: &ShapeAssignment<f64>) -> f64 {
    shape.angles.iter().flatten().map(|&a| lobachevsky(PI * a)).sum()
}

/// Gradient of [`volume`] in the angle coordinates (units of π).
pub fn volume_gradient(shape: &ShapeAssignment<f64>) -> Vec<f64> {
    shape.angles.iter().flatten().map(|&a| PI * lobachevsky_derivative(PI * a)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct VolumeResult {
    pub volume: f64,
    pub argmax: ShapeAssignment<f64>,
    /// Norm of the gradient projected onto the weight fiber.
    pub kkt_residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct VolumeOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for VolumeOptions {
    fn default() -> Self {
        VolumeOptions { tolerance: 1e-10, max_iterations: 500 }
    }
}

/// Maximizes the volume over positive shapes balancing every internal edge.
pub fn maximize_volume(tri: &Triangulation) -> Result<VolumeResult, AngleError> {
    maximize_volume_with(tri, &default_targets(tri), VolumeOptions::default())
}

fn orthonormalize(vectors: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for mut v in vectors {
        for _ in 0..2 {
            for u in &out {
                let d: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= d * b);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            out.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    out
}

fn flat(shape: &ShapeAssignment<f64>) -> Vec<f64> {
    shape.angles.iter().flatten().copied().collect()
}

fn unflat(x: &[f64]) -> ShapeAssignment<f64> {
    ShapeAssignment { angles: x.chunks(3).map(|c| [c[0], c[1], c[2]]).collect(), level: 0.0 }
}

/// Ascent on the weight fiber through the slack-maximizing start point.
///
/// Each step takes the Newton direction of the fiber-restricted functional
/// when it is an ascent direction, the projected gradient otherwise, and
/// backtracks until the iterate stays positive and the Armijo test holds.
pub fn maximize_volume_with(
    tri: &Triangulation,
    targets: &WeightTargets,
    opts: VolumeOptions,
) -> Result<VolumeResult, AngleError> {
    let start = solve_shape(tri, targets)?.to_f64();
    let basis = orthonormalize(
        balanced_space(tri, targets)?
            .basis
            .iter()
            .map(|v| v.iter().map(|q| crate::Scalar::to_f64_lossy(q)).collect())
            .collect(),
    );
    let d = basis.len();
    let mut x = flat(&start);
    let mut v = volume(&unflat(&x));
    let project = |g: &[f64]| -> Vec<f64> {
        basis.iter().map(|u| u.iter().zip(g).map(|(a, b)| a * b).sum()).collect()
    };
    let mut iterations = 0;
    loop {
        let grad = volume_gradient(&unflat(&x));
        let g = project(&grad);
        let residual = g.iter().map(|a| a * a).sum::<f64>().sqrt();
        if residual <= opts.tolerance || d == 0 {
            return Ok(VolumeResult { volume: v, argmax: unflat(&x), kkt_residual: residual, iterations });
        }
        if iterations == opts.max_iterations {
            return Err(AngleError::NotConverged { residual, iterations });
        }
        iterations += 1;

        // curvature of Λ(πα) is −π² cot(πα)
        let curv: Vec<f64> = x.iter().map(|&a| -PI * PI / (PI * a).tan()).collect();
        let mut h = Matrix::<f64>::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let s: f64 = (0..x.len()).map(|k| basis[i][k] * curv[k] * basis[j][k]).sum();
                h.set(i, j, -s);
            }
        }
        let (step, newton) = match h.solve(&g) {
            Some(s) if s.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>() > 0.0 => (s, true),
            _ => (g.clone(), false),
        };
        let slope: f64 = step.iter().zip(&g).map(|(a, b)| a * b).sum();
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = (0..x.len())
                .map(|k| x[k] + t * (0..d).map(|i| step[i] * basis[i][k]).sum::<f64>())
                .collect();
            if trial.iter().all(|&a| a > 0.0 && a < 1.0) {
                let vt = volume(&unflat(&trial));
                // close to the optimum volume differences drown in rounding; trust Newton there
                if (newton && residual < 1e-6) || vt >= v + 1e-4 * t * slope {
                    x = trial;
                    v = vt;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-14 {
                break;
            }
        }
    }
}
