//! The Weil–Gel'fand–Zak transform between functions on the line and
//! sections of the line bundle L over the torus, and the ψ_{a,c}, g_{a,c}
//! family built from Φ_b.
//!
//! Sections of L are functions on ℝ² with
//! `g(x + m, y + n) = φ((m, n), (x, y)) g(x, y)`,
//! `φ((m, n), (x, y)) = (−1)^{mn} e^{πi(nx − my)}`; sections of the dual
//! bundle L* use the conjugate multiplier.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::qdilog::{param_map, QDilog, QDilogError, QDilogParams};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WgzError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("terms beyond |m| = {order} still contribute {tail:e}")]
    TruncationInsufficient { order: usize, tail: f64 },
    #[error("{points} y-points give a halving difference of {estimate:e}")]
    GridTooCoarse { points: usize, estimate: f64 },
    #[error("no decaying contour for the Fourier transform of ψ")]
    NoDecay,
    #[error(transparent)]
    Dilog(#[from] QDilogError),
}

/// φ((m, n), (x, y)).
pub fn multiplier(m: i64, n: i64, x: f64, y: f64) -> Complex64 {
    let sign = if (m * n).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    sign * (I * PI * (n as f64 * x - m as f64 * y)).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Bundle {
    L,
    /// The dual bundle, multiplier conjugated.
    Dual,
}

type Eval2 = Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>;
type Eval1 = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// A section of L or L*, given by an evaluator valid on all of ℝ².
///
/// [`TorusSection::value`] evaluates on the fundamental domain and extends
/// by the multiplier; [`TorusSection::raw`] evaluates the underlying
/// formula directly, which is what [`multiplier_check`] tests.
#[derive(Clone)]
pub struct TorusSection {
    eval: Eval2,
    pub bundle: Bundle,
    /// Truncation order of the defining sum, 0 when not built from one.
    pub order: usize,
}

impl fmt::Debug for TorusSection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusSection").field("bundle", &self.bundle).field("order", &self.order).finish_non_exhaustive()
    }
}

impl TorusSection {
    pub fn from_fn<F>(bundle: Bundle, f: F) -> Self
    where
        F: Fn(f64, f64) -> Complex64 + Send + Sync + 'static,
    {
        TorusSection { eval: Arc::new(f), bundle, order: 0 }
    }

    pub fn zero(bundle: Bundle) -> Self {
        Self::from_fn(bundle, |_, _| Complex64::new(0.0, 0.0))
    }

    pub fn factor(&self, m: i64, n: i64, x: f64, y: f64) -> Complex64 {
        match self.bundle {
            Bundle::L => multiplier(m, n, x, y),
            Bundle::Dual => multiplier(m, n, x, y).conj(),
        }
    }

    pub fn raw(&self, x: f64, y: f64) -> Complex64 {
        (self.eval)(x, y)
    }

    pub fn value(&self, x: f64, y: f64) -> Complex64 {
        let (m, n) = (x.floor(), y.floor());
        let (x0, y0) = (x - m, y - n);
        self.factor(m as i64, n as i64, x0, y0) * self.raw(x0, y0)
    }
}

/// Tail tolerance and sampling used to certify a truncation order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Truncation {
    pub order: usize,
    /// Largest allowed tail, relative to the largest sampled |f|.
    pub tolerance: f64,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { order: 20, tolerance: 1e-14 }
    }
}

fn certify<F: Fn(f64) -> Complex64>(f: &F, trunc: &Truncation) -> Result<(), WgzError> {
    let m = trunc.order as f64;
    let xs: Vec<f64> = (0..16).map(|k| k as f64 / 16.0).collect();
    let peak = xs.iter().map(|&x| f(x).norm()).fold(0.0, f64::max);
    let tail = xs
        .iter()
        .map(|&x| (1..=4).map(|j| f(x + m + j as f64).norm() + f(x - m - j as f64).norm()).sum::<f64>())
        .fold(0.0, f64::max);
    if !tail.is_finite() || tail > trunc.tolerance * peak.max(f64::MIN_POSITIVE) && tail > 0.0 {
        return Err(WgzError::TruncationInsufficient { order: trunc.order, tail });
    }
    Ok(())
}

/// W f(x, y) = e^{πixy} Σ_{|m|≤M} f(x + m) e^{2πimy}; with `Bundle::Dual`
/// the conjugate transform W̄f(x, y) = Wf(x, −y).
pub fn wgz_forward<F>(f: F, bundle: Bundle, trunc: &Truncation) -> Result<TorusSection, WgzError>
where
    F: Fn(f64) -> Complex64 + Send + Sync + 'static,
{
    certify(&f, trunc)?;
    let f: Eval1 = Arc::new(f);
    let m = trunc.order as i64;
    let w = move |x: f64, y: f64| -> Complex64 {
        let y = if bundle == Bundle::Dual { -y } else { y };
        let sum: Complex64 = (-m..=m).map(|k| f(x + k as f64) * (2.0 * PI * I * k as f64 * y).exp()).sum();
        (PI * I * x * y).exp() * sum
    };
    Ok(TorusSection { eval: Arc::new(w), bundle, order: trunc.order })
}

/// Trapezoid rule in y with `points` nodes and its estimate from half the
/// nodes.
fn periodic_trapezoid<F: FnMut(f64) -> Complex64>(mut g: F, points: usize, tol: f64) -> Result<Complex64, WgzError> {
    if points < 2 || points % 2 != 0 {
        return Err(WgzError::GridTooCoarse { points, estimate: f64::INFINITY });
    }
    let vals: Vec<Complex64> = (0..points).map(|k| g(k as f64 / points as f64)).collect();
    let full: Complex64 = vals.iter().sum::<Complex64>() / points as f64;
    let half: Complex64 = vals.iter().step_by(2).sum::<Complex64>() / (points / 2) as f64;
    let estimate = (full - half).norm();
    if estimate > tol * full.norm().max(1.0) {
        return Err(WgzError::GridTooCoarse { points, estimate });
    }
    Ok(full)
}

/// Nodes and acceptance tolerance of the inverse transform.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InverseGrid {
    pub points: usize,
    pub tolerance: f64,
}

impl Default for InverseGrid {
    fn default() -> Self {
        InverseGrid { points: 256, tolerance: 1e-10 }
    }
}

/// (W⁻¹g)(x) = ∫₀¹ g(x, y) e^{−πixy} dy, or the W̄ inverse for sections
/// of L*.
pub fn wgz_inverse(g: &TorusSection, x: f64, grid: &InverseGrid) -> Result<Complex64, WgzError> {
    let s = match g.bundle {
        Bundle::L => 1.0,
        Bundle::Dual => -1.0,
    };
    periodic_trapezoid(|y| g.value(x, s * y) * (-PI * I * x * y).exp(), grid.points, grid.tolerance)
}

/// max |g(x + m, y + n) − φ((m, n), (x, y)) g(x, y)| over `samples`, using
/// the unreduced evaluator.
pub fn multiplier_check(g: &TorusSection, m: i64, n: i64, samples: &[(f64, f64)]) -> f64 {
    samples
        .iter()
        .map(|&(x, y)| (g.raw(x + m as f64, y + n as f64) - g.factor(m, n, x, y) * g.raw(x, y)).norm())
        .fold(0.0, f64::max)
}

/// A section of L ⊠ L or L* ⊠ L* over the product of two tori, in
/// coordinates (s, t, x, y).
#[derive(Clone)]
pub struct TensorSection {
    eval: Arc<dyn Fn(f64, f64, f64, f64) -> Complex64 + Send + Sync>,
    pub bundle: Bundle,
    pub order: usize,
}

impl fmt::Debug for TensorSection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TensorSection").field("bundle", &self.bundle).field("order", &self.order).finish_non_exhaustive()
    }
}

impl TensorSection {
    pub fn raw(&self, s: f64, t: f64, x: f64, y: f64) -> Complex64 {
        (self.eval)(s, t, x, y)
    }

    pub fn value(&self, s: f64, t: f64, x: f64, y: f64) -> Complex64 {
        let (m1, n1, m2, n2) = (s.floor(), t.floor(), x.floor(), y.floor());
        let (s0, t0, x0, y0) = (s - m1, t - n1, x - m2, y - n2);
        let mut f = multiplier(m1 as i64, n1 as i64, s0, t0) * multiplier(m2 as i64, n2 as i64, x0, y0);
        if self.bundle == Bundle::Dual {
            f = f.conj();
        }
        f * self.raw(s0, t0, x0, y0)
    }
}

/// (W ⊗ W)(h)(s, t, x, y) = e^{πi(st + xy)} Σ h(s + m₁, x + m₂) e^{2πi(m₁t + m₂y)},
/// or W̄ ⊗ W̄ with all phases conjugated.
pub fn wgz2_forward<F>(h: F, bundle: Bundle, trunc: &Truncation) -> Result<TensorSection, WgzError>
where
    F: Fn(f64, f64) -> Complex64 + Send + Sync + 'static,
{
    certify(&|u| h(u, 0.0), trunc)?;
    certify(&|u| h(0.0, u), trunc)?;
    let m = trunc.order as i64;
    let sg = if bundle == Bundle::Dual { -1.0 } else { 1.0 };
    let w = move |s: f64, t: f64, x: f64, y: f64| -> Complex64 {
        let mut sum = Complex64::new(0.0, 0.0);
        for m1 in -m..=m {
            let e1 = (sg * 2.0 * PI * I * m1 as f64 * t).exp();
            for m2 in -m..=m {
                sum += h(s + m1 as f64, x + m2 as f64) * e1 * (sg * 2.0 * PI * I * m2 as f64 * y).exp();
            }
        }
        (sg * PI * I * (s * t + x * y)).exp() * sum
    };
    Ok(TensorSection { eval: Arc::new(w), bundle, order: trunc.order })
}

/// Inverse of [`wgz2_forward`] at (s, x).
pub fn wgz2_inverse(g: &TensorSection, s: f64, x: f64, grid: &InverseGrid) -> Result<Complex64, WgzError> {
    let sg = if g.bundle == Bundle::Dual { -1.0 } else { 1.0 };
    let mut first_err = None;
    let outer = periodic_trapezoid(
        |t| {
            let inner = periodic_trapezoid(
                |y| g.value(s, sg * t, x, sg * y) * (-PI * I * (s * t + x * y)).exp(),
                grid.points,
                grid.tolerance,
            );
            inner.unwrap_or_else(|e| {
                first_err.get_or_insert(e);
                Complex64::new(0.0, 0.0)
            })
        },
        grid.points,
        grid.tolerance,
    );
    if let Some(e) = first_err {
        return Err(e);
    }
    outer
}

/// a, c > 0 with a + c < 1/2, and the quantum-dilog parameter b.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PsiParams {
    pub a: f64,
    pub c: f64,
    pub b: f64,
}

impl PsiParams {
    pub fn new(a: f64, c: f64, b: f64) -> Result<Self, WgzError> {
        if !(a > 0.0 && c > 0.0 && a + c < 0.5) {
            return Err(WgzError::InvalidParams(format!("need a, c > 0 and a + c < 1/2, got a = {a}, c = {c}")));
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(WgzError::InvalidParams(format!("b must be positive, got {b}")));
        }
        Ok(PsiParams { a, c, b })
    }
}

/// Sampling of ψ on the lines ℝ + iη used for its Fourier transform.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsiConfig {
    /// Trapezoid step in t.
    pub step: f64,
    /// |ψ| below this fraction of its peak ends the sampled range.
    pub truncation: f64,
    pub max_half_width: f64,
    /// A single contour Im t = η for every s. By default s ≥ 0 uses the
    /// midpoint of the lower half of the analytic window and s < 0 the
    /// midpoint of the upper half, so that e^{2πsη} never amplifies.
    pub shift: Option<f64>,
}

impl Default for PsiConfig {
    fn default() -> Self {
        PsiConfig { step: 1.0 / 64.0, truncation: 1e-18, max_half_width: 150.0, shift: None }
    }
}

/// Samples ψ(t0 + k·step + iη).
#[derive(Clone, Debug)]
struct Line {
    eta: f64,
    t0: f64,
    samples: Arc<Vec<Complex64>>,
}

/// ψ_{a,c}, its Fourier transform ψ̃_{a,c} and ψ̃′_{a,c}(s) = e^{−πis²}ψ̃_{a,c}(s).
#[derive(Clone, Debug)]
pub struct PsiFamily {
    pub params: PsiParams,
    q: QDilog,
    step: f64,
    /// Contours for s ≥ 0 and s < 0.
    lines: [Line; 2],
}

impl PsiFamily {
    pub fn new(params: PsiParams, cfg: &PsiConfig) -> Result<Self, WgzError> {
        let q = QDilog::new(param_map(params.b)?);
        let (lo, hi) = shift_window(&params, q.params());
        let etas = match cfg.shift {
            Some(eta) if eta > lo && eta < hi => [eta, eta],
            Some(eta) => {
                return Err(WgzError::InvalidParams(format!("contour shift {eta} outside ({lo}, {hi})")));
            }
            None => [0.5 * lo, 0.5 * hi],
        };
        let lower = sample_line(&q, &params, etas[0], cfg)?;
        let upper = if etas[1] == etas[0] { lower.clone() } else { sample_line(&q, &params, etas[1], cfg)? };
        Ok(PsiFamily { params, q, step: cfg.step, lines: [lower, upper] })
    }

    pub fn qdilog_params(&self) -> &QDilogParams {
        self.q.params()
    }

    /// Imaginary parts of the contours used for s ≥ 0 and s < 0.
    pub fn shifts(&self) -> [f64; 2] {
        [self.lines[0].eta, self.lines[1].eta]
    }

    /// ψ(t) = Φ̄_b(t − 2c_b(a+c)) e^{−4πi c_b a (t − c_b(a+c))} e^{−πi c_b²(4(a−c)+1)/6}.
    pub fn psi(&self, t: Complex64) -> Result<Complex64, WgzError> {
        Ok(log_psi(&self.q, &self.params, t)?.exp())
    }

    /// ψ̃(s) = ∫ ψ(t) e^{−2πist} dt, moved to a line ℝ + iη.
    pub fn tilde(&self, s: f64) -> Complex64 {
        let line = &self.lines[usize::from(s < 0.0)];
        let rot = (-2.0 * PI * I * s * self.step).exp();
        let mut phase = (-2.0 * PI * I * s * Complex64::new(line.t0, line.eta)).exp();
        let mut sum = Complex64::new(0.0, 0.0);
        for v in line.samples.iter() {
            sum += v * phase;
            phase *= rot;
        }
        sum * self.step
    }

    pub fn tilde_prime(&self, s: f64) -> Complex64 {
        (-PI * I * s * s).exp() * self.tilde(s)
    }

    /// Number of cached samples of ψ per contour.
    pub fn num_samples(&self) -> [usize; 2] {
        [self.lines[0].samples.len(), self.lines[1].samples.len()]
    }
}

/// Open interval of η for which ψ(t + iη) is analytic and decays at
/// both ends, as e^{4πhat} on the left and e^{−2π(2hc − η)t} on the right.
pub fn shift_window(p: &PsiParams, qp: &QDilogParams) -> (f64, f64) {
    let h = qp.h;
    (2.0 * h * (p.a + p.c) - h, 2.0 * h * p.c)
}

fn log_psi(q: &QDilog, p: &PsiParams, t: Complex64) -> Result<Complex64, QDilogError> {
    let c_b = q.params().c_b;
    let ac = p.a + p.c;
    Ok(-q.log_phi(t - 2.0 * c_b * ac)? - 4.0 * PI * I * c_b * p.a * (t - c_b * ac)
        - PI * I * c_b * c_b * (4.0 * (p.a - p.c) + 1.0) / 6.0)
}

fn sample_line(q: &QDilog, p: &PsiParams, eta: f64, cfg: &PsiConfig) -> Result<Line, WgzError> {
    let at = |k: i64| log_psi(q, p, Complex64::new(k as f64 * cfg.step, eta));
    let cut = cfg.truncation.ln();
    let run = (1.0 / cfg.step).ceil() as i64;
    let first = at(0)?;
    let mut peak = first.re;
    let mut left = Vec::new();
    let mut right = vec![first];
    for dir in [1i64, -1] {
        let (mut k, mut quiet) = (0i64, 0);
        while quiet < run {
            k += dir;
            if (k as f64 * cfg.step).abs() > cfg.max_half_width {
                return Err(WgzError::NoDecay);
            }
            let l = at(k)?;
            peak = peak.max(l.re);
            if dir > 0 { right.push(l) } else { left.push(l) }
            quiet = if l.re < peak + cut { quiet + 1 } else { 0 };
        }
    }
    let t0 = -(left.len() as f64) * cfg.step;
    let samples = left.into_iter().rev().chain(right).map(|l| l.exp()).collect();
    Ok(Line { eta, t0, samples: Arc::new(samples) })
}

/// g_{a,c} = W(ψ̃′_{a,c}).
pub fn g_section(family: &PsiFamily, trunc: &Truncation) -> Result<TorusSection, WgzError> {
    let fam = family.clone();
    wgz_forward(move |s| fam.tilde_prime(s), Bundle::L, trunc)
}

/// |g| on an n × n grid of the fundamental domain, row-major in (x, y).
pub fn section_grid(g: &TorusSection, n: usize) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (i as f64 / n as f64, j as f64 / n as f64);
            out.push((x, y, g.value(x, y).norm()));
        }
    }
    out
}
