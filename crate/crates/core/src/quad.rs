//! Gauss–Legendre rules and tensor-product quadrature along shifted contours.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("integrand does not decay along axis {axis} (|f| ratio {ratio:e} at half-width {half_width})")]
    NoDecay { axis: usize, half_width: f64, ratio: f64 },
    #[error("tolerance {tolerance:e} not met: error estimate {estimate:e} after {panels} panels")]
    ToleranceNotMet { tolerance: f64, estimate: f64, panels: usize },
}

/// Nodes and weights of the n-point Gauss–Legendre rule on [−1, 1].
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut x = vec![T::zero(); n];
    let mut w = vec![T::zero(); n];
    let nf = T::c(n as f64);
    for i in 0..n.div_ceil(2) {
        let mut z = (T::PI() * (T::c(i as f64) + T::c(0.75)) / (nf + T::c(0.5))).cos();
        let mut dp = T::one();
        for _ in 0..100 {
            let (mut p0, mut p1) = (T::one(), z);
            for k in 2..=n {
                let kf = T::c(k as f64);
                let p2 = ((T::c(2.0) * kf - T::one()) * z * p1 - (kf - T::one()) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { T::one() } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { T::one() } else { p0 };
            dp = nf * (z * p - pm) / (z * z - T::one());
            let dz = p / dp;
            z = z - dz;
            if dz.abs() <= T::epsilon() * T::c(4.0) {
                break;
            }
        }
        let wi = T::c(2.0) / ((T::one() - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Composite rule: `panels` equal panels of an `order`-point rule on [a, b].
#[derive(Clone, Debug)]
pub struct CompositeRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CompositeRule {
    pub fn new(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let (x, w) = gauss_legendre::<f64>(order);
        Self::from_base(a, b, panels, &x, &w)
    }

    pub fn from_base(a: f64, b: f64, panels: usize, x: &[f64], w: &[f64]) -> Self {
        let h = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * x.len());
        let mut weights = Vec::with_capacity(panels * x.len());
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * h;
            for (xi, wi) in x.iter().zip(w) {
                nodes.push(mid + 0.5 * h * xi);
                weights.push(0.5 * h * wi);
            }
        }
        CompositeRule { nodes, weights }
    }

    /// Panels whose ends are the given breakpoints.
    pub fn on_breakpoints(breaks: &[f64], order: usize) -> Self {
        let (x, w) = gauss_legendre::<f64>(order);
        let mut rule = CompositeRule { nodes: vec![], weights: vec![] };
        for pair in breaks.windows(2) {
            let r = Self::from_base(pair[0], pair[1], 1, &x, &w);
            rule.nodes.extend(r.nodes);
            rule.weights.extend(r.weights);
        }
        rule
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadConfig {
    /// Gauss–Legendre points per panel.
    pub order: usize,
    /// Panels per axis at the first pass.
    pub panels: usize,
    /// Relative tolerance on successive panel doublings.
    pub rel_tol: f64,
    pub max_doublings: usize,
    /// Boundary magnitude relative to the peak that ends box growth.
    pub truncation: f64,
    /// Largest half-width tried before reporting missing decay.
    pub max_half_width: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { order: 16, panels: 8, rel_tol: 1e-10, max_doublings: 6, truncation: 1e-14, max_half_width: 400.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Quadrature {
    pub value: Complex64,
    pub error_estimate: f64,
    pub boxes: Vec<(f64, f64)>,
    pub points_per_axis: usize,
}

/// Grows `[−L, L]` on each axis until the integrand, sampled on the axis
/// line through the origin, falls below `truncation` times the peak seen.
pub fn probe_box<F>(f: &F, dim: usize, shifts: &[f64], cfg: &QuadConfig) -> Result<Vec<(f64, f64)>, QuadError>
where
    F: Fn(&[Complex64]) -> Complex64,
{
    let mut boxes = Vec::with_capacity(dim);
    for axis in 0..dim {
        let at = |t: f64| {
            let p: Vec<Complex64> =
                (0..dim).map(|k| Complex64::new(if k == axis { t } else { 0.0 }, shifts[k])).collect();
            f(&p).norm()
        };
        let mut peak = at(0.0);
        let mut side = [0.0; 2];
        for (s, dir) in [-1.0f64, 1.0].into_iter().enumerate() {
            let mut l = 1.0;
            let mut t = 0.0;
            // scan outward on a coarse grid so the peak tracks interior maxima
            loop {
                while t < l {
                    t += 0.125;
                    peak = peak.max(at(dir * t));
                }
                let edge = at(dir * l).max(at(dir * (l - 0.25)));
                if edge <= cfg.truncation * peak {
                    break;
                }
                if l >= cfg.max_half_width {
                    return Err(QuadError::NoDecay { axis, half_width: l, ratio: edge / peak });
                }
                l *= 1.25;
            }
            side[s] = dir * l;
        }
        boxes.push((side[0], side[1]));
    }
    Ok(boxes)
}

fn tensor_sum<F>(f: &F, rules: &[CompositeRule], shifts: &[f64]) -> Complex64
where
    F: Fn(&[Complex64]) -> Complex64 + Sync,
{
    let dim = rules.len();
    let outer = &rules[0];
    let partial: Vec<Complex64> = (0..outer.nodes.len())
        .into_par_iter()
        .map(|i0| {
            let mut idx = vec![0usize; dim];
            idx[0] = i0;
            let mut p: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); dim];
            let mut acc = Complex64::new(0.0, 0.0);
            loop {
                let mut w = 1.0;
                for k in 0..dim {
                    p[k] = Complex64::new(rules[k].nodes[idx[k]], shifts[k]);
                    w *= rules[k].weights[idx[k]];
                }
                acc += f(&p) * w;
                let mut k = dim - 1;
                loop {
                    if k == 0 {
                        return acc;
                    }
                    idx[k] += 1;
                    if idx[k] < rules[k].nodes.len() {
                        break;
                    }
                    idx[k] = 0;
                    k -= 1;
                }
            }
        })
        .collect();
    partial.into_iter().sum()
}

/// ∫ f over `ℝ^dim + i·shifts` by tensor Gauss–Legendre on truncated boxes.
///
/// Boxes come from [`probe_box`] unless given. The panel count doubles
/// until two successive values agree to `rel_tol`.
pub fn integrate_nd<F>(
    f: F,
    dim: usize,
    shifts: &[f64],
    boxes: Option<Vec<(f64, f64)>>,
    cfg: &QuadConfig,
) -> Result<Quadrature, QuadError>
where
    F: Fn(&[Complex64]) -> Complex64 + Sync,
{
    assert_eq!(shifts.len(), dim);
    let boxes = match boxes {
        Some(b) => b,
        None => probe_box(&f, dim, shifts, cfg)?,
    };
    let (x, w) = gauss_legendre::<f64>(cfg.order);
    let mut panels = cfg.panels;
    let rules_for = |panels: usize| -> Vec<CompositeRule> {
        boxes.iter().map(|&(a, b)| CompositeRule::from_base(a, b, panels, &x, &w)).collect()
    };
    let mut prev = tensor_sum(&f, &rules_for(panels), shifts);
    let mut estimate = f64::INFINITY;
    for _ in 0..cfg.max_doublings {
        panels *= 2;
        let next = tensor_sum(&f, &rules_for(panels), shifts);
        estimate = (next - prev).norm();
        prev = next;
        if estimate <= cfg.rel_tol * next.norm().max(1e-300) {
            return Ok(Quadrature { value: next, error_estimate: estimate, boxes, points_per_axis: panels * cfg.order });
        }
    }
    Err(QuadError::ToleranceNotMet { tolerance: cfg.rel_tol, estimate, panels })
}
