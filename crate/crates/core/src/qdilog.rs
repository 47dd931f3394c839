//! Faddeev's quantum dilogarithm Φ_b on the whole complex plane.
//!
//! Inside a strip around the real axis Φ_b is evaluated from its Fourier
//! integral; elsewhere the shift equations
//! `Φ_b(z − iβ/2) = (1 + e^{2πβz}) Φ_b(z + iβ/2)`, β ∈ {b, 1/b}, move the
//! argument into the strip.
//!
//! The integral is split at a radius `w0`. The three-fold pole at the origin
//! is integrated in closed form, the remaining part on `[0, w0]` is smooth,
//! and the tails `w > w0` are taken along steepest-descent rays.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::quad::gauss_legendre;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QDilogError {
    #[error("b must be positive, got {0}")]
    NonPositiveB(f64),
    #[error("ħ must lie in (0, 1/4], got {0}")]
    HbarOutOfRange(f64),
    #[error("argument {re}{im:+}i is within reach of a pole or zero of Φ_b")]
    PoleProximity { re: f64, im: f64 },
    #[error("argument {re}{im:+}i is outside the calibrated range")]
    ArgumentOutOfCalibratedRange { re: f64, im: f64 },
}

/// b, ħ = (b + 1/b)⁻², c_b = i(b + 1/b)/2 and the strip half-width h.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QDilogParams {
    /// Normalized so that b ≥ 1.
    pub b: f64,
    pub hbar: f64,
    #[serde(skip)]
    pub c_b: Complex64,
    pub h: f64,
}

pub fn param_map(b: f64) -> Result<QDilogParams, QDilogError> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(QDilogError::NonPositiveB(b));
    }
    let b = if b < 1.0 { 1.0 / b } else { b };
    let h = 0.5 * (b + 1.0 / b);
    Ok(QDilogParams { b, hbar: 1.0 / (4.0 * h * h), c_b: Complex64::new(0.0, h), h })
}

/// Parameters for a given ħ ∈ (0, 1/4]; the returned b is ≥ 1.
pub fn params_from_hbar(hbar: f64) -> Result<QDilogParams, QDilogError> {
    if !(hbar > 0.0 && hbar <= 0.25) {
        return Err(QDilogError::HbarOutOfRange(hbar));
    }
    let s = 1.0 / hbar.sqrt();
    let b = 0.5 * (s + (s * s - 4.0).max(0.0).sqrt());
    param_map(b)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureConfig {
    /// Largest split radius `w0`; kept below π·min(b, 1/b).
    pub radius: f64,
    /// Tail rays are cut where the exponential factor drops below e^{−truncation}.
    pub truncation: f64,
    /// Gauss–Legendre points per panel.
    pub order: usize,
    /// Scales every panel length; 1 is the calibrated default, 0.5 doubles the panel count.
    pub panel_scale: f64,
    /// Real parts beyond this bound are refused.
    pub max_re: f64,
    /// Imaginary parts beyond this many strip half-widths are refused.
    pub max_im_strips: f64,
}

impl QuadratureConfig {
    pub fn for_params(p: &QDilogParams) -> Self {
        QuadratureConfig {
            radius: 0.5f64.min(0.5 * PI / p.b),
            truncation: 40.0,
            order: 20,
            panel_scale: 1.0,
            max_re: 200.0,
            max_im_strips: 12.0,
        }
    }
}

/// A configured evaluator. Stateless after construction.
#[derive(Clone, Debug)]
pub struct QDilog {
    params: QDilogParams,
    config: QuadratureConfig,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

fn ln1p(u: Complex64) -> Complex64 {
    if u.norm() < 1e-5 {
        u - u * u / 2.0 + u * u * u / 3.0
    } else {
        (1.0 + u).ln()
    }
}

/// log(1 + e^a) without overflow; None when 1 + e^a vanishes to 1e−8.
fn log1p_exp(a: Complex64) -> Option<Complex64> {
    let v = if a.re > 0.0 { a + ln1p((-a).exp()) } else { ln1p(a.exp()) };
    if v.re < (1e-8f64).ln() {
        None
    } else {
        Some(v)
    }
}

/// sinh(x)/x − 1 for complex x.
fn shc_m1(x: Complex64) -> Complex64 {
    if x.norm() < 0.5 {
        let x2 = x * x;
        let mut term = x2 / 6.0;
        let mut sum = term;
        let mut k = 2.0;
        while term.norm() > 1e-18 * sum.norm().max(1e-300) {
            term = term * x2 / ((2.0 * k) * (2.0 * k + 1.0));
            sum += term;
            k += 1.0;
        }
        sum
    } else {
        x.sinh() / x - 1.0
    }
}

/// sin(u) − u.
fn sin_m_id(u: Complex64) -> Complex64 {
    if u.norm() < 0.5 {
        let u2 = u * u;
        let mut term = -u * u2 / 6.0;
        let mut sum = term;
        let mut k = 2.0;
        while term.norm() > 1e-18 * sum.norm().max(1e-300) {
            term = -term * u2 / ((2.0 * k) * (2.0 * k + 1.0));
            sum += term;
            k += 1.0;
        }
        sum
    } else {
        u.sin() - u
    }
}

impl QDilog {
    pub fn new(params: QDilogParams) -> Self {
        Self::with_config(params, QuadratureConfig::for_params(&params))
    }

    pub fn from_b(b: f64) -> Result<Self, QDilogError> {
        Ok(Self::new(param_map(b)?))
    }

    pub fn with_config(params: QDilogParams, config: QuadratureConfig) -> Self {
        let (nodes, weights) = gauss_legendre::<f64>(config.order);
        QDilog { params, config, nodes, weights }
    }

    pub fn params(&self) -> &QDilogParams {
        &self.params
    }

    pub fn config(&self) -> &QuadratureConfig {
        &self.config
    }

    pub fn phi(&self, z: Complex64) -> Result<Complex64, QDilogError> {
        let l = self.log_phi(z)?;
        if l.re > 700.0 {
            return Err(QDilogError::PoleProximity { re: z.re, im: z.im });
        }
        Ok(l.exp())
    }

    /// log Φ_b(z), determined up to an integer multiple of 2πi.
    pub fn log_phi(&self, z: Complex64) -> Result<Complex64, QDilogError> {
        let p = &self.params;
        let out_of_range = || QDilogError::ArgumentOutOfCalibratedRange { re: z.re, im: z.im };
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(out_of_range());
        }
        if z.re.abs() > self.config.max_re || z.im.abs() > self.config.max_im_strips * p.h {
            return Err(out_of_range());
        }
        let pole = || QDilogError::PoleProximity { re: z.re, im: z.im };
        let band = 0.6 * p.h;
        let mut w = z;
        let mut acc = Complex64::new(0.0, 0.0);
        for beta in [p.b, 1.0 / p.b] {
            let limit = if beta > 1.0 { band.max(0.5 * beta) } else { band };
            while w.im.abs() > limit {
                if w.im < 0.0 {
                    acc += log1p_exp(2.0 * PI * beta * w + I * PI * beta * beta).ok_or_else(pole)?;
                    w += I * beta;
                } else {
                    acc -= log1p_exp(2.0 * PI * beta * w - I * PI * beta * beta).ok_or_else(pole)?;
                    w -= I * beta;
                }
            }
        }
        Ok(acc + self.log_phi_strip(w))
    }

    /// The integral representation; valid for |Im z| < h.
    pub fn log_phi_strip(&self, z: Complex64) -> Complex64 {
        let p = &self.params;
        let (b, h) = (p.b, p.h);
        let w0 = self.config.radius.min(1.0 / h).min(2.0 / z.norm().max(1e-300));

        // smooth part of the integrand on [0, w0]
        let s = b * b + 1.0 / (b * b);
        let g = |w: f64| -> Complex64 {
            let u = 2.0 * z * w;
            let a = shc_m1(Complex64::new(b * w, 0.0));
            let c = shc_m1(Complex64::new(w / b, 0.0));
            let d_m1 = a * c + a + c;
            let inv_d_m1 = -d_m1 / (1.0 + d_m1);
            -I / (2.0 * w * w * w) * (u.sin() * inv_d_m1 + sin_m_id(u))
        };
        let mut inner = Complex64::new(0.0, 0.0);
        let panels = (2.0 / self.config.panel_scale).ceil() as usize;
        let len = w0 / panels as f64;
        for k in 0..panels {
            let mid = (k as f64 + 0.5) * len;
            for (x, wt) in self.nodes.iter().zip(&self.weights) {
                inner += g(mid + 0.5 * len * x) * (0.5 * len * wt);
            }
        }
        let singular = I * z / w0 + I * PI * z * z / 2.0 + I * PI * s / 24.0;
        inner + singular + self.tail(z, w0) - self.tail(-z, w0)
    }

    /// ∫_{w0}^{∞} e^{−2iζw−2hw} / (w (1 − e^{−2bw})(1 − e^{−2w/b})) dw along a ray.
    fn tail(&self, zeta: Complex64, w0: f64) -> Complex64 {
        let p = &self.params;
        let (b, h) = (p.b, p.h);
        let kappa = Complex64::new(h - zeta.im, zeta.re);
        let theta = kappa.arg().clamp(-1.0, 1.0);
        let d = Complex64::from_polar(1.0, -theta);
        let rate = 2.0 * (kappa * d).re;
        let t_max = self.config.truncation / rate;
        let f = |t: f64| -> Complex64 {
            let w = w0 + t * d;
            (-2.0 * kappa * w).exp() / (w * (1.0 - (-2.0 * b * w).exp()) * (1.0 - (-2.0 * w / b).exp()))
        };
        let mut acc = Complex64::new(0.0, 0.0);
        let mut t = 0.0;
        let scale = self.config.panel_scale;
        while t < t_max {
            // panels track the 1/w and e^{−2bw} scales near the start, the decay further out
            let near = (w0 + t) * 0.75;
            let len = (near.max(0.6 / b).min(4.0 / rate) * scale).min(t_max - t).max(1e-12);
            let mid = t + 0.5 * len;
            for (x, wt) in self.nodes.iter().zip(&self.weights) {
                acc += f(mid + 0.5 * len * x) * (0.5 * len * wt);
            }
            t += len;
        }
        acc * d
    }
}
