use std::f64::consts::PI;

use num_complex::Complex64;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use super::kernel::{tet_kernel, TetKernel, DELTA_FORM};
use super::StateError;
use crate::angles::{default_targets, edge_weights};
use crate::linalg::Matrix;
use crate::mesh::{homology_h2_truncated, Triangulation};
use crate::qdilog::{QDilog, QDilogParams};
use crate::quad::{gauss_legendre, CompositeRule, QuadError};
use crate::{Rational, Shape};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// The state integral of a closed shaped complex after delta elimination.
///
/// Face variables are indexed by the gluings of the triangulation. The
/// surviving variables are changed to the per-tetrahedron differences
/// s_T = x₃ − x₂, in which the integrand reads
/// `Π_T A_T(s_T) · exp(2πi sᵀ M s)` times the constant [`Self::jacobian`].
#[derive(Clone, Debug)]
pub struct StateIntegral {
    pub num_faces: usize,
    /// Face variable of face k of each tetrahedron.
    pub face_vars: Vec<[usize; 4]>,
    /// One row per tetrahedron over the face variables.
    pub deltas: Vec<Vec<Rational>>,
    /// Eliminated face variables in pivot order.
    pub pivots: Vec<usize>,
    pub free: Vec<usize>,
    /// Face variables as linear forms in the free ones.
    pub elimination: Vec<Vec<Rational>>,
    /// s = S·x_free.
    pub decay_map: Vec<Vec<Rational>>,
    pub decay_inverse: Vec<Vec<Rational>>,
    /// Symmetric matrix M of the quadratic phase in s.
    pub quadratic: Vec<Vec<Rational>>,
    /// 1 / (|det of the pivot block| · |det S|).
    pub jacobian: f64,
    pub kernels: Vec<TetKernel>,
    pub level: f64,
    pub params: QDilogParams,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateConfig {
    pub order: usize,
    /// Panel length of the first pass.
    pub panel_length: f64,
    pub rel_tol: f64,
    /// Each refinement multiplies the panel counts by 3/2.
    pub max_refinements: usize,
    /// Box ends and the pruning of the tensor sum, relative to the peak.
    pub truncation: f64,
    pub max_half_width: f64,
    /// Imaginary parts of the s-contours; probed when absent.
    pub shifts: Option<Vec<f64>>,
}

impl Default for StateConfig {
    fn default() -> Self {
        StateConfig {
            order: 16,
            panel_length: 1.0,
            rel_tol: 1e-8,
            max_refinements: 8,
            truncation: 1e-13,
            max_half_width: 80.0,
            shifts: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateValue {
    pub hbar: f64,
    #[serde(serialize_with = "super::ser_complex")]
    pub z: Complex64,
    pub error_estimate: f64,
    pub dimension: usize,
    pub shifts: Vec<f64>,
    pub boxes: Vec<(f64, f64)>,
    pub points_per_axis: Vec<usize>,
}

fn rat(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Gauss–Jordan on the delta rows with Markowitz pivoting. Returns the
/// (row, column) pivots and the reduced rows.
fn eliminate(deltas: &[Vec<Rational>], cols: usize) -> Result<(Vec<(usize, usize)>, Vec<Vec<Rational>>), StateError> {
    let n = deltas.len();
    let mut a = deltas.to_vec();
    let mut row_done = vec![false; n];
    let mut col_done = vec![false; cols];
    let mut pivots = Vec::with_capacity(n);
    for step in 0..n {
        let mut best: Option<(usize, usize, usize)> = None;
        for c in (0..cols).filter(|&c| !col_done[c]) {
            let rows: Vec<usize> = (0..n).filter(|&r| !row_done[r] && !a[r][c].is_zero()).collect();
            for &r in &rows {
                let in_row = (0..cols).filter(|&k| !col_done[k] && !a[r][k].is_zero()).count();
                let key = ((in_row - 1) * (rows.len() - 1), c, r);
                if best.map_or(true, |b| key < b) {
                    best = Some(key);
                }
            }
        }
        let Some((_, c, r)) = best else {
            return Err(StateError::DegenerateDeltaSystem { rank: step, constraints: n });
        };
        let p = a[r][c].clone();
        for v in a[r].iter_mut() {
            *v = v.clone() / p.clone();
        }
        let pivot_row = a[r].clone();
        for (r2, row) in a.iter_mut().enumerate() {
            if r2 != r && !row[c].is_zero() {
                let f = row[c].clone();
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v = v.clone() - f.clone() * pv.clone();
                }
            }
        }
        row_done[r] = true;
        col_done[c] = true;
        pivots.push((r, c));
    }
    Ok((pivots, a))
}

fn invert(m: &[Vec<Rational>]) -> Option<Vec<Vec<Rational>>> {
    let k = m.len();
    let mat = Matrix::from_rows(m.to_vec());
    if mat.det().is_zero() {
        return None;
    }
    let cols: Vec<Vec<Rational>> = (0..k)
        .map(|j| {
            let e: Vec<Rational> = (0..k).map(|i| if i == j { rat(1) } else { rat(0) }).collect();
            mat.solve(&e)
        })
        .collect::<Option<_>>()?;
    Some((0..k).map(|i| (0..k).map(|j| cols[j][i].clone()).collect()).collect())
}

/// Builds the state integral of a closed, consistently oriented complex
/// with a positive shape balanced on every internal edge outside Γ.
pub fn assemble(tri: &Triangulation, shape: &Shape, params: &QDilogParams) -> Result<StateIntegral, StateError> {
    if shape.num_tets() != tri.num_tets() {
        return Err(StateError::NotAdmissible(format!(
            "shape has {} tetrahedra, triangulation has {}",
            shape.num_tets(),
            tri.num_tets()
        )));
    }
    if !tri.is_closed() {
        return Err(StateError::NotAdmissible("the complex has boundary faces".into()));
    }
    if !tri.is_consistently_oriented() {
        return Err(StateError::NotAdmissible("a gluing joins faces of equal sign".into()));
    }
    if !shape.is_positive() {
        return Err(StateError::NotAdmissible("the shape is not strictly positive".into()));
    }
    let h2 = homology_h2_truncated(tri);
    if !h2.is_admissible_topology {
        return Err(StateError::NotAdmissible(format!("H2 has rank {} and torsion {:?}", h2.rank, h2.torsion)));
    }
    let weights = edge_weights(tri, shape).map_err(|e| StateError::NotAdmissible(e.to_string()))?;
    for e in default_targets(tri).into_keys() {
        let w = weights.weights[e];
        if (w - 2.0).abs() > 1e-9 {
            return Err(StateError::NotBalanced(format!("edge {e} has weight {w}")));
        }
    }

    let n = tri.num_tets();
    let m = tri.gluings().len();
    let mut face_vars = vec![[usize::MAX; 4]; n];
    for (v, &(a, b)) in tri.gluings().iter().enumerate() {
        face_vars[a.tet][a.face as usize] = v;
        face_vars[b.tet][b.face as usize] = v;
    }
    debug_assert!(face_vars.iter().flatten().all(|&v| v < m));

    let deltas: Vec<Vec<Rational>> = face_vars
        .iter()
        .map(|fv| {
            let mut row = vec![rat(0); m];
            for (k, &c) in DELTA_FORM.iter().enumerate() {
                row[fv[k]] += rat(c);
            }
            row
        })
        .collect();
    let (pivot_pairs, reduced) = eliminate(&deltas, m)?;
    let pivots: Vec<usize> = pivot_pairs.iter().map(|&(_, c)| c).collect();
    let free: Vec<usize> = (0..m).filter(|c| !pivots.contains(c)).collect();
    let k = free.len();
    if k != n {
        return Err(StateError::SingularDecayMap);
    }
    let mut elimination = vec![vec![rat(0); k]; m];
    for (j, &f) in free.iter().enumerate() {
        elimination[f][j] = rat(1);
    }
    for &(r, c) in &pivot_pairs {
        for (j, &f) in free.iter().enumerate() {
            elimination[c][j] = -reduced[r][f].clone();
        }
    }
    let pivot_block: Vec<Vec<Rational>> =
        deltas.iter().map(|row| pivots.iter().map(|&c| row[c].clone()).collect()).collect();
    let det_pivot = Matrix::from_rows(pivot_block).det().abs();

    let decay_map: Vec<Vec<Rational>> = face_vars
        .iter()
        .map(|fv| (0..k).map(|j| elimination[fv[3]][j].clone() - elimination[fv[2]][j].clone()).collect())
        .collect();
    let decay_inverse = invert(&decay_map).ok_or(StateError::SingularDecayMap)?;
    let det_decay = Matrix::from_rows(decay_map.clone()).det().abs();

    let half = Rational::new(1.into(), 2.into());
    let mut quadratic = vec![vec![rat(0); n]; n];
    for (t, fv) in face_vars.iter().enumerate() {
        let sign = rat(tri.tets()[t].sign.value() as i64);
        for j in 0..n {
            let x0_j: Rational =
                (0..k).fold(rat(0), |acc, i| acc + elimination[fv[0]][i].clone() * decay_inverse[i][j].clone());
            let c = sign.clone() * x0_j * half.clone();
            quadratic[t][j] += c.clone();
            quadratic[j][t] += c;
        }
    }

    let kernels = tri
        .tets()
        .iter()
        .zip(&shape.angles)
        .map(|(t, &a)| tet_kernel(t.sign, a, params))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(StateIntegral {
        num_faces: m,
        face_vars,
        deltas,
        pivots,
        free,
        elimination,
        decay_map,
        decay_inverse,
        quadratic,
        jacobian: 1.0 / (to_f64(&det_pivot) * to_f64(&det_decay)),
        kernels,
        level: shape.level,
        params: *params,
    })
}

/// Tensor sum of `Π_j diag_j · Π_{i<j} pair_ij`, where `pair[i][j]` holds
/// exp(4πi M_ij s_i s_j) row-major over the nodes of axes i and j.
///
/// A partial product is skipped once its magnitude times the L1 norms of
/// the remaining axes falls below `cut` times the L1 norm of the whole
/// tensor.
fn tensor_sum(diag: &[Vec<Complex64>], pair: &[Vec<Option<Vec<Complex64>>>], cut: f64) -> Complex64 {
    let n = diag.len();
    if n == 1 {
        return diag[0].iter().sum();
    }
    let l1: Vec<f64> = diag.iter().map(|d| d.iter().map(|v| v.norm()).sum()).collect();
    let pair_max: f64 = pair
        .iter()
        .flatten()
        .flatten()
        .map(|p| p.iter().map(|v| v.norm()).fold(0.0, f64::max))
        .product();
    // floor[d]: smallest |partial product| through axis d worth expanding
    let total: f64 = l1.iter().product::<f64>() * pair_max;
    let floor: Vec<f64> = (0..n).map(|d| cut * total / (l1[d + 1..].iter().product::<f64>() * pair_max)).collect();

    struct Ctx<'a> {
        pair: &'a [Vec<Option<Vec<Complex64>>>],
        floor: &'a [f64],
    }
    // levels[0] holds the multipliers of every axis at depth d
    fn rec(d: usize, levels: &mut [Vec<Vec<Complex64>>], base: Complex64, ctx: &Ctx) -> Complex64 {
        let n = levels[0].len();
        if d == n - 1 {
            return base * levels[0][d].iter().sum::<Complex64>();
        }
        let (lo, hi) = levels.split_at_mut(1);
        let cur = &lo[0];
        let mut acc = Complex64::zero();
        for (a, &f) in cur[d].iter().enumerate() {
            let f = base * f;
            if f.norm() < ctx.floor[d] {
                continue;
            }
            for j in d + 1..n {
                let nj = cur[j].len();
                let next = &mut hi[0][j];
                match &ctx.pair[d][j] {
                    Some(p) => {
                        let row = &p[a * nj..(a + 1) * nj];
                        for ((o, &x), &y) in next.iter_mut().zip(&cur[j]).zip(row) {
                            *o = x * y;
                        }
                    }
                    None => next.copy_from_slice(&cur[j]),
                }
            }
            acc += rec(d + 1, hi, f, ctx);
        }
        acc
    }
    let ctx = Ctx { pair, floor: &floor };
    let partial: Vec<Complex64> = (0..diag[0].len())
        .into_par_iter()
        .map(|a| {
            let f = diag[0][a];
            if f.norm() < floor[0] {
                return Complex64::zero();
            }
            let mut levels: Vec<Vec<Vec<Complex64>>> = (1..n)
                .map(|d| (0..n).map(|j| if j >= d { vec![Complex64::zero(); diag[j].len()] } else { Vec::new() }).collect())
                .collect();
            for j in 1..n {
                let nj = diag[j].len();
                for c in 0..nj {
                    levels[0][j][c] = match &pair[0][j] {
                        Some(p) => diag[j][c] * p[a * nj + c],
                        None => diag[j][c],
                    };
                }
            }
            rec(1, &mut levels, f, &ctx)
        })
        .collect();
    partial.into_iter().sum()
}

impl StateIntegral {
    /// Number of integration variables after elimination.
    pub fn dimension(&self) -> usize {
        self.free.len()
    }

    fn quadratic_f64(&self) -> Vec<Vec<f64>> {
        self.quadratic.iter().map(|r| r.iter().map(to_f64).collect()).collect()
    }

    /// Face variables at decay coordinates `s`.
    pub fn faces_from_decay(&self, s: &[Complex64]) -> Vec<Complex64> {
        let free: Vec<Complex64> =
            self.decay_inverse.iter().map(|row| row.iter().zip(s).map(|(a, x)| x * to_f64(a)).sum()).collect();
        self.elimination.iter().map(|row| row.iter().zip(&free).map(|(a, x)| x * to_f64(a)).sum()).collect()
    }

    /// Integrand in decay coordinates, without the Jacobian.
    pub fn reduced_integrand(&self, q: &QDilog, s: &[Complex64]) -> Result<Complex64, StateError> {
        let m = self.quadratic_f64();
        let mut log = Complex64::zero();
        for (t, k) in self.kernels.iter().enumerate() {
            log += k.log_amplitude(q, s[t])?;
            for (j, &sj) in s.iter().enumerate() {
                log += 2.0 * PI * I * m[t][j] * s[t] * sj;
            }
        }
        Ok(log.exp())
    }

    /// Product of the original kernels at face values `x`.
    pub fn kernel_product(&self, q: &QDilog, x: &[Complex64]) -> Result<Complex64, StateError> {
        let mut prod = Complex64::new(1.0, 0.0);
        for (k, fv) in self.kernels.iter().zip(&self.face_vars) {
            prod *= k.eval(q, [x[fv[0]], x[fv[1]], x[fv[2]], x[fv[3]]])?;
        }
        Ok(prod)
    }

    /// log|integrand| along axis `axis` through `i·shifts`.
    fn line_log_magnitude(&self, q: &QDilog, shifts: &[f64], tilt: &[f64], axis: usize, t: f64) -> Result<f64, StateError> {
        let s = Complex64::new(t, shifts[axis]);
        Ok(self.kernels[axis].log_amplitude(q, s)?.re - 4.0 * PI * t * tilt[axis])
    }

    fn tilt(&self, shifts: &[f64]) -> Vec<f64> {
        let m = self.quadratic_f64();
        m.iter().map(|row| row.iter().zip(shifts).map(|(a, s)| a * s).sum()).collect()
    }

    /// Smallest asymptotic decay exponent over all axes and both ends.
    fn min_decay(&self, q: &QDilog, shifts: &[f64]) -> Result<(usize, f64), StateError> {
        let tilt = self.tilt(shifts);
        let far = 8.0 + 2.0 * self.params.h;
        let mut worst = (0, f64::INFINITY);
        for axis in 0..self.dimension() {
            for dir in [-1.0, 1.0] {
                let g1 = self.line_log_magnitude(q, shifts, &tilt, axis, dir * far)?;
                let g0 = self.line_log_magnitude(q, shifts, &tilt, axis, dir * (far - 1.0))?;
                let rate = g0 - g1;
                if rate < worst.1 {
                    worst = (axis, rate);
                }
            }
        }
        Ok(worst)
    }

    /// Picks contour shifts among multiples of the centers of the
    /// per-tetrahedron analyticity strips, maximizing the slowest decay.
    pub fn probe_shifts(&self, q: &QDilog) -> Result<Vec<f64>, StateError> {
        let h = self.params.h;
        let center: Vec<f64> = self
            .kernels
            .iter()
            .map(|k| 0.5 * h * (k.angles[1] - k.angles[0]) * k.sign.value() as f64)
            .collect();
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut worst_axis = 0;
        for theta in [0.0, 0.25, 0.5, 0.75] {
            let shifts: Vec<f64> = center.iter().map(|c| theta * c).collect();
            let (axis, rate) = self.min_decay(q, &shifts)?;
            if best.as_ref().map_or(true, |b| rate > b.0) {
                best = Some((rate, shifts));
                worst_axis = axis;
            }
        }
        let (rate, shifts) = best.expect("candidates are nonempty");
        if !(rate > 0.0) {
            return Err(StateError::NoDecay { axis: worst_axis, rate });
        }
        Ok(shifts)
    }

    fn boxes(&self, q: &QDilog, shifts: &[f64], cfg: &StateConfig) -> Result<Vec<(f64, f64)>, StateError> {
        let tilt = self.tilt(shifts);
        let cut = cfg.truncation.ln();
        let mut boxes = Vec::new();
        for axis in 0..self.dimension() {
            let mut peak = self.line_log_magnitude(q, shifts, &tilt, axis, 0.0)?;
            let mut ends = [0.0; 2];
            for (e, dir) in [-1.0f64, 1.0].into_iter().enumerate() {
                let mut t = 0.0;
                loop {
                    t += 0.25;
                    let g = self.line_log_magnitude(q, shifts, &tilt, axis, dir * t)?;
                    peak = peak.max(g);
                    if t >= 1.0 && g < peak + cut {
                        break;
                    }
                    if t >= cfg.max_half_width {
                        return Err(QuadError::NoDecay { axis, half_width: t, ratio: (g - peak).exp() }.into());
                    }
                }
                ends[e] = dir * t;
            }
            boxes.push((ends[0], ends[1]));
        }
        Ok(boxes)
    }

    fn tensor_pass(
        &self,
        q: &QDilog,
        shifts: &[f64],
        rules: &[CompositeRule],
        cut: f64,
    ) -> Result<Complex64, StateError> {
        let m = self.quadratic_f64();
        let n = self.dimension();
        let nodes: Vec<Vec<Complex64>> = rules
            .iter()
            .zip(shifts)
            .map(|(r, &sig)| r.nodes.iter().map(|&t| Complex64::new(t, sig)).collect())
            .collect();
        let diag = (0..n)
            .map(|j| {
                nodes[j]
                    .par_iter()
                    .zip(&rules[j].weights)
                    .map(|(&s, &w)| {
                        let log = self.kernels[j].log_amplitude(q, s)? + 2.0 * PI * I * m[j][j] * s * s;
                        Ok(log.exp() * w)
                    })
                    .collect::<Result<Vec<_>, StateError>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let pair: Vec<Vec<Option<Vec<Complex64>>>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        (j > i && m[i][j] != 0.0).then(|| {
                            let c = 4.0 * PI * I * m[i][j];
                            nodes[i]
                                .iter()
                                .flat_map(|&a| nodes[j].iter().map(move |&b| (c * a * b).exp()))
                                .collect()
                        })
                    })
                    .collect()
            })
            .collect();
        Ok(tensor_sum(&diag, &pair, cut) * self.jacobian)
    }

    /// Z_ħ of the complex (the level factor is not applied).
    pub fn evaluate(&self, q: &QDilog, cfg: &StateConfig) -> Result<StateValue, StateError> {
        let shifts = match &cfg.shifts {
            Some(s) => {
                assert_eq!(s.len(), self.dimension(), "one shift per integration variable");
                let (axis, rate) = self.min_decay(q, s)?;
                if !(rate > 0.0) {
                    return Err(StateError::NoDecay { axis, rate });
                }
                s.clone()
            }
            None => self.probe_shifts(q)?,
        };
        let boxes = self.boxes(q, &shifts, cfg)?;
        let (x, w) = gauss_legendre::<f64>(cfg.order);
        let mut panels: Vec<usize> =
            boxes.iter().map(|&(a, b)| ((b - a) / cfg.panel_length).ceil().max(1.0) as usize).collect();
        let rules = |panels: &[usize]| -> Vec<CompositeRule> {
            boxes.iter().zip(panels).map(|(&(a, b), &p)| CompositeRule::from_base(a, b, p, &x, &w)).collect()
        };
        let mut prev = self.tensor_pass(q, &shifts, &rules(&panels), cfg.truncation)?;
        let mut estimate = f64::INFINITY;
        for _ in 0..cfg.max_refinements {
            panels.iter_mut().for_each(|p| *p = (*p * 3).div_ceil(2));
            let next = self.tensor_pass(q, &shifts, &rules(&panels), cfg.truncation)?;
            estimate = (next - prev).norm();
            prev = next;
            if estimate <= cfg.rel_tol * next.norm() {
                return Ok(StateValue {
                    hbar: self.params.hbar,
                    z: next,
                    error_estimate: estimate,
                    dimension: self.dimension(),
                    shifts,
                    boxes,
                    points_per_axis: panels.iter().map(|p| p * cfg.order).collect(),
                });
            }
        }
        Err(QuadError::ToleranceNotMet { tolerance: cfg.rel_tol, estimate, panels: panels[0] }.into())
    }
}
