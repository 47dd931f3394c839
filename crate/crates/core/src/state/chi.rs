use std::f64::consts::PI;
use std::collections::HashMap;
use std::sync::Mutex;

use num_complex::Complex64;
use serde::Serialize;

use super::StateError;
use crate::qdilog::{QDilog, QDilogError, QDilogParams};
use crate::quad::{integrate_nd, QuadConfig, QuadError};
use crate::Shape;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Clone, Debug, PartialEq)]
pub struct ChiConfig {
    pub quad: QuadConfig,
    /// Downward shift ε of the inner contour ℝ − iε; probed when absent.
    pub shift: Option<f64>,
}

impl Default for ChiConfig {
    fn default() -> Self {
        ChiConfig {
            quad: QuadConfig { order: 16, panels: 8, rel_tol: 1e-10, max_doublings: 7, truncation: 1e-16, max_half_width: 400.0 },
            shift: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiValue {
    #[serde(serialize_with = "super::ser_complex")]
    pub value: Complex64,
    pub shift: f64,
    pub error_estimate: f64,
    pub points_per_axis: usize,
}

/// Holds the first dilogarithm failure seen inside a quadrature callback.
struct Trap(Mutex<Option<QDilogError>>);

impl Trap {
    fn new() -> Self {
        Trap(Mutex::new(None))
    }

    fn catch(&self, r: Result<Complex64, QDilogError>) -> Complex64 {
        r.unwrap_or_else(|e| {
            self.0.lock().unwrap().get_or_insert(e);
            Complex64::new(0.0, 0.0)
        })
    }

    fn check(self) -> Result<(), StateError> {
        match self.0.into_inner().unwrap() {
            Some(e) => Err(e.into()),
            None => Ok(()),
        }
    }
}

/// Picks ε in (0, eps_max) minimizing the peak of |f(t − iε)| among
/// shifts whose samples decay at both ends of a probing window.
fn probe_shift<F>(f: F, eps_max: f64) -> Result<f64, StateError>
where
    F: Fn(Complex64) -> Result<Complex64, QDilogError>,
{
    let window = 16.0;
    let mut best: Option<(f64, f64)> = None;
    let mut worst_ratio: f64 = 0.0;
    for frac in [0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8] {
        let eps = frac * eps_max;
        let mut peak = 0.0f64;
        let mut ok = true;
        for k in -64..=64 {
            match f(Complex64::new(k as f64 * window / 64.0, -eps)) {
                Ok(v) => peak = peak.max(v.norm()),
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok || !(peak > 0.0) || !peak.is_finite() {
            continue;
        }
        let ends = f(Complex64::new(window, -eps))?.norm().max(f(Complex64::new(-window, -eps))?.norm());
        let ratio = ends / peak;
        worst_ratio = worst_ratio.max(ratio);
        if ratio > 1e-3 {
            continue;
        }
        if best.map_or(true, |b| peak < b.1) {
            best = Some((eps, peak));
        }
    }
    best.map(|b| b.0).ok_or(StateError::NoDecay { axis: 0, rate: -worst_ratio.ln() / window })
}

fn chi41_log_integrand(q: &QDilog, x: Complex64, y: Complex64) -> Result<Complex64, QDilogError> {
    Ok(q.log_phi(x - y)? - q.log_phi(y)? + 2.0 * PI * I * x * (2.0 * y - x))
}

/// χ₄₁(x) = ∫ Φ_b(x − y)/Φ_b(y) · e^{2πix(2y − x)} dy over ℝ − iε.
pub fn chi_41(q: &QDilog, x: f64, cfg: &ChiConfig) -> Result<ChiValue, StateError> {
    let x = Complex64::new(x, 0.0);
    let h = q.params().h;
    let shift = match cfg.shift {
        Some(e) => e,
        None => probe_shift(|y| chi41_log_integrand(q, x, y).map(|l| l.exp()), h)?,
    };
    let trap = Trap::new();
    let res = integrate_nd(|p| trap.catch(chi41_log_integrand(q, x, p[0]).map(|l| l.exp())), 1, &[-shift], None, &cfg.quad);
    trap.check()?;
    let res = res?;
    Ok(ChiValue { value: res.value, shift, error_estimate: res.error_estimate, points_per_axis: res.points_per_axis })
}

fn chi52_log_integrand(q: &QDilog, x: Complex64, z: Complex64) -> Result<Complex64, QDilogError> {
    Ok(I * PI * (z - x) * (z + x) - q.log_phi(z + x)? - q.log_phi(z - x)? - q.log_phi(z)? - I * PI / 3.0)
}

fn chi52_twist(params: &QDilogParams, x: Complex64, lambda: f64) -> Complex64 {
    4.0 * PI * I * params.c_b * x * lambda
}

/// χ₅₂(x, λ) = χ₅₂(x) e^{4πi c_b x λ}, with
/// χ₅₂(x) = e^{−iπ/3} ∫ e^{iπ(z−x)(z+x)} / (Φ_b(z+x) Φ_b(z−x) Φ_b(z)) dz over ℝ − iε.
pub fn chi_52(q: &QDilog, x: Complex64, lambda: f64, cfg: &ChiConfig) -> Result<ChiValue, StateError> {
    let h = q.params().h;
    let room = h - x.im.abs();
    if !(room > 0.0) {
        return Err(StateError::NoDecay { axis: 0, rate: room });
    }
    let shift = match cfg.shift {
        Some(e) => e,
        None => probe_shift(|z| chi52_log_integrand(q, x, z).map(|l| l.exp()), room)?,
    };
    let trap = Trap::new();
    let res = integrate_nd(|p| trap.catch(chi52_log_integrand(q, x, p[0]).map(|l| l.exp())), 1, &[-shift], None, &cfg.quad);
    trap.check()?;
    let res = res?;
    Ok(ChiValue {
        value: res.value * chi52_twist(q.params(), x, lambda).exp(),
        shift,
        error_estimate: res.error_estimate,
        points_per_axis: res.points_per_axis,
    })
}

/// ν_{a,b} = e^{4πi c_b² a(a+b)} e^{−πi c_b² (4(a−b)+1)/6}.
pub fn nu(a: f64, b: f64, params: &QDilogParams) -> Complex64 {
    let cb2 = -params.h * params.h;
    (I * 4.0 * PI * cb2 * a * (a + b) - I * PI * cb2 * (4.0 * (a - b) + 1.0) / 6.0).exp()
}

/// Half-angles of the three tetrahedra of the 5₂ complex:
/// `a[i] + b[i] + c[i] = 1/2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Five2Reduction {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub c: [f64; 3],
}

impl Five2Reduction {
    /// Reads (a, b, c) as halves of (α₁, α₂, α₃) of tetrahedra 0, 1, 2.
    pub fn from_shape(shape: &Shape) -> Result<Self, StateError> {
        if shape.num_tets() != 3 {
            return Err(StateError::NotAdmissible(format!("expected 3 tetrahedra, got {}", shape.num_tets())));
        }
        let pick = |k: usize| [0, 1, 2].map(|i| shape.angles[i][k] / 2.0);
        Self::new(pick(0), pick(1), pick(2))
    }

    pub fn new(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> Result<Self, StateError> {
        for i in 0..3 {
            let t = [2.0 * a[i], 2.0 * b[i], 2.0 * c[i]];
            if t.iter().any(|&v| !(v > 0.0)) || (a[i] + b[i] + c[i] - 0.5).abs() > 1e-12 {
                return Err(StateError::NonPositiveAngles { angles: t });
            }
        }
        let r1 = 2.0 * a[2] - a[0] - c[1];
        let r2 = b[2] - c[0] - b[1];
        if r1.abs() > 1e-12 || r2.abs() > 1e-12 {
            return Err(StateError::NotBalanced(format!("2a3 - a1 - c2 = {r1:e}, b3 - c1 - b2 = {r2:e}")));
        }
        Ok(Five2Reduction { a, b, c })
    }

    /// λ = a₁ − c₁ + b₂ − a₃.
    pub fn lambda(&self) -> f64 {
        self.a[0] - self.c[0] + self.b[1] - self.a[2]
    }

    /// Imaginary part of the outer contour 2c_b(a₁ − a₃) + ℝ.
    pub fn contour_shift(&self, params: &QDilogParams) -> f64 {
        2.0 * params.h * (self.a[0] - self.a[2])
    }

    /// ν_{c₁,b₁} ν_{b₂,a₂} ν_{c₃,b₃} e^{iπ c_b² (1 − 2a₁)(1 − 2c₂)}; of unit modulus.
    pub fn prefactor(&self, params: &QDilogParams) -> Complex64 {
        let cb2 = -params.h * params.h;
        nu(self.c[0], self.b[0], params)
            * nu(self.b[1], self.a[1], params)
            * nu(self.c[2], self.b[2], params)
            * (I * PI * cb2 * (1.0 - 2.0 * self.a[0]) * (1.0 - 2.0 * self.c[1])).exp()
    }
}

/// Step, truncation and refinement controls of [`z52_reduced`].
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeConfig {
    /// Initial trapezoid step, relative to h.
    pub step: f64,
    pub rel_tol: f64,
    pub max_halvings: usize,
    pub truncation: f64,
    pub max_half_width: f64,
    pub shift: Option<f64>,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        LatticeConfig { step: 0.25, rel_tol: 1e-10, max_halvings: 6, truncation: 1e-15, max_half_width: 80.0, shift: None }
    }
}

/// Memoized Φ_b on the lattice `k·step + i·im`.
struct PhiLattice<'a> {
    q: &'a QDilog,
    step: f64,
    im: f64,
    cache: HashMap<i64, Complex64>,
}

impl<'a> PhiLattice<'a> {
    fn new(q: &'a QDilog, step: f64, im: f64) -> Self {
        PhiLattice { q, step, im, cache: HashMap::new() }
    }

    fn log_phi(&mut self, k: i64) -> Result<Complex64, QDilogError> {
        if let Some(v) = self.cache.get(&k) {
            return Ok(*v);
        }
        let v = self.q.log_phi(Complex64::new(k as f64 * self.step, self.im))?;
        self.cache.insert(k, v);
        Ok(v)
    }
}

/// Scans k = 0, ±1, ... until `f(k)` stays below `cut` times the running
/// peak over one unit of length on each side, and sums the terms.
fn scan_sum<F>(mut f: F, step: f64, cut: f64, max_half_width: f64) -> Result<Complex64, StateError>
where
    F: FnMut(i64) -> Result<Complex64, StateError>,
{
    let first = f(0)?;
    let mut total = first;
    let mut peak = first.norm();
    let run = (1.0 / step).ceil() as i64;
    for dir in [1i64, -1] {
        let mut quiet = 0;
        let mut k = 0i64;
        while quiet < run {
            k += dir;
            if (k as f64 * step).abs() > max_half_width {
                return Err(QuadError::NoDecay { axis: 0, half_width: max_half_width, ratio: 1.0 }.into());
            }
            let v = f(k)?;
            total += v;
            peak = peak.max(v.norm());
            if v.norm() < cut * peak && (k as f64 * step).abs() >= 1.0 {
                quiet += 1;
            } else {
                quiet = 0;
            }
        }
    }
    Ok(total)
}

/// The 5₂ state integral through its one-dimensional reduction.
///
/// Both the outer variable x and the χ₅₂ variable z run over uniform
/// trapezoid lattices with a common step, so that z ± x stay on two fixed
/// lattices and each Φ_b value is computed once. The step is halved until
/// two successive sums agree to `rel_tol`.
pub fn z52_reduced(q: &QDilog, red: &Five2Reduction, cfg: &LatticeConfig) -> Result<ChiValue, StateError> {
    let params = *q.params();
    let outer = red.contour_shift(&params);
    let lambda = red.lambda();
    let room = params.h - outer.abs();
    let x0 = Complex64::new(0.0, outer);
    let eps = match cfg.shift {
        Some(e) => e,
        None => probe_shift(|z| chi52_log_integrand(q, x0, z).map(|l| l.exp()), room)?,
    };
    // returns the sum and the number of outer lattice points visited
    let pass = |step: f64| -> Result<(Complex64, usize), StateError> {
        let mut rows = 0usize;
        let mut plus = PhiLattice::new(q, step, outer - eps);
        let mut minus = PhiLattice::new(q, step, -outer - eps);
        let mut mid = PhiLattice::new(q, step, -eps);
        let mut row = |k: i64| -> Result<Complex64, StateError> {
            rows += 1;
            let x = Complex64::new(k as f64 * step, outer);
            let head = -I * PI * x * x + chi52_twist(&params, x, lambda) - I * PI / 3.0;
            let inner = scan_sum(
                |j| {
                    let z = Complex64::new(j as f64 * step, -eps);
                    let l = head + I * PI * z * z - plus.log_phi(j + k)? - minus.log_phi(j - k)? - mid.log_phi(j)?;
                    Ok(l.exp())
                },
                step,
                cfg.truncation,
                cfg.max_half_width,
            )?;
            Ok(inner * step)
        };
        let total = scan_sum(&mut row, step, cfg.truncation, cfg.max_half_width)? * step;
        Ok((total, rows))
    };
    let mut step = cfg.step * params.h.min(1.0);
    let mut prev = pass(step)?.0;
    let mut estimate = f64::INFINITY;
    for _ in 0..cfg.max_halvings {
        step /= 2.0;
        let (next, rows) = pass(step)?;
        estimate = (next - prev).norm();
        prev = next;
        if estimate <= cfg.rel_tol * next.norm() {
            return Ok(ChiValue {
                value: next * red.prefactor(&params),
                shift: eps,
                error_estimate: estimate,
                points_per_axis: rows,
            });
        }
    }
    Err(QuadError::ToleranceNotMet { tolerance: cfg.rel_tol, estimate, panels: 0 }.into())
}
