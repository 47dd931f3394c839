use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::StateError;
use crate::mesh::Sign;
use crate::qdilog::{QDilog, QDilogError, QDilogParams};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// The tetrahedral kernel with its support constraint `x₀ − x₁ + x₂ = 0`.
///
/// For a positive tetrahedron, with s = x₃ − x₂,
/// `exp(2πi s (x₀ − c_b α₃) + iπ φ_T / 4ħ) / Φ_b(s − c_b (1 − α₁))`;
/// a negative tetrahedron carries the conjugate kernel.
#[derive(Clone, Debug, Serialize)]
pub struct TetKernel {
    pub sign: Sign,
    pub angles: [f64; 3],
    pub hbar: f64,
    pub h: f64,
    /// φ_T = α₁α₃ + (α₁ − α₃)/3 − (2ħ + 1)/6.
    pub phi_t: f64,
}

/// Coefficients of the support constraint on `(x₀, x₁, x₂, x₃)`.
pub const DELTA_FORM: [i64; 4] = [1, -1, 1, 0];

pub fn phi_t(angles: [f64; 3], hbar: f64) -> f64 {
    let [a1, _, a3] = angles;
    a1 * a3 + (a1 - a3) / 3.0 - (2.0 * hbar + 1.0) / 6.0
}

pub fn tet_kernel(sign: Sign, angles: [f64; 3], params: &QDilogParams) -> Result<TetKernel, StateError> {
    if angles.iter().any(|&a| !(a > 0.0)) || (angles.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(StateError::NonPositiveAngles { angles });
    }
    Ok(TetKernel { sign, angles, hbar: params.hbar, h: params.h, phi_t: phi_t(angles, params.hbar) })
}

impl TetKernel {
    fn c_b(&self) -> Complex64 {
        Complex64::new(0.0, self.h)
    }

    /// Constant phase exponent ±iπφ_T/4ħ.
    pub fn constant_exponent(&self) -> Complex64 {
        I * PI * self.phi_t / (4.0 * self.hbar) * self.sign.value() as f64
    }

    /// log of the factors depending on s = x₃ − x₂ alone.
    pub fn log_amplitude(&self, q: &QDilog, s: Complex64) -> Result<Complex64, QDilogError> {
        let [a1, _, a3] = self.angles;
        let c = self.c_b();
        let lin = -2.0 * PI * I * c * a3 * s + self.constant_exponent();
        Ok(match self.sign {
            Sign::Positive => lin - q.log_phi(s - c * (1.0 - a1))?,
            Sign::Negative => lin + q.log_phi(s + c * (1.0 - a1))?,
        })
    }

    /// The kernel at face variables `x`, the delta factor left out.
    pub fn eval(&self, q: &QDilog, x: [Complex64; 4]) -> Result<Complex64, QDilogError> {
        let s = x[3] - x[2];
        let coupling = 2.0 * PI * I * s * x[0] * self.sign.value() as f64;
        Ok((coupling + self.log_amplitude(q, s)?).exp())
    }
}

/// Multiplies by the level factor e^{iπℓ/4ħ}.
pub fn apply_level(z: Complex64, level: f64, hbar: f64) -> Complex64 {
    z * (I * PI * level / (4.0 * hbar)).exp()
}
