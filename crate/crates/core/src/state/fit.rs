use serde::Serialize;

use super::StateError;
use crate::linalg::Matrix;

/// Least-squares fit of y(ħ) = 2πħ log|J| to y = −V + p ħ log ħ + q ħ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub hbar: Vec<f64>,
    pub values: Vec<f64>,
    pub volume: f64,
    pub p: f64,
    pub q: f64,
    pub residuals: Vec<f64>,
    pub rms: f64,
    /// V refitted without the largest ħ.
    pub volume_without_largest: f64,
    /// |V − V_without_largest| / V.
    pub stability_shift: f64,
}

fn least_squares(hbar: &[f64], y: &[f64]) -> Result<[f64; 3], StateError> {
    let cols: Vec<[f64; 3]> = hbar.iter().map(|&h| [1.0, h * h.ln(), h]).collect();
    let scale: Vec<f64> = (0..3).map(|k| cols.iter().map(|c| c[k] * c[k]).sum::<f64>().sqrt()).collect();
    let gram: Vec<Vec<f64>> = (0..3)
        .map(|i| (0..3).map(|j| cols.iter().map(|c| c[i] * c[j]).sum::<f64>() / (scale[i] * scale[j])).collect())
        .collect();
    let rhs: Vec<f64> = (0..3).map(|i| cols.iter().zip(y).map(|(c, v)| c[i] * v).sum::<f64>() / scale[i]).collect();
    let g = Matrix::from_rows(gram);
    let det = g.det();
    if det.abs() < 1e-14 {
        return Err(StateError::IllConditionedFit(format!("normalized Gram determinant {det:e}")));
    }
    let c = g.solve(&rhs).ok_or_else(|| StateError::IllConditionedFit("singular normal equations".into()))?;
    Ok([c[0] / scale[0], c[1] / scale[1], c[2] / scale[2]])
}

/// Fits the decay rate from `(ħ, |J(ħ)|)` pairs given with ħ decreasing.
pub fn fit_volume_rate(values: &[(f64, f64)]) -> Result<RateFit, StateError> {
    if values.len() < 5 {
        return Err(StateError::IllConditionedFit(format!("{} points, at least 5 needed", values.len())));
    }
    if values.windows(2).any(|w| !(w[1].0 < w[0].0)) || values.iter().any(|&(h, j)| !(h > 0.0) || !(j > 0.0)) {
        return Err(StateError::IllConditionedFit("ħ must be positive and strictly decreasing, |J| positive".into()));
    }
    let hbar: Vec<f64> = values.iter().map(|v| v.0).collect();
    let y: Vec<f64> = values.iter().map(|&(h, j)| 2.0 * std::f64::consts::PI * h * j.ln()).collect();
    let c = least_squares(&hbar, &y)?;
    let residuals: Vec<f64> =
        hbar.iter().zip(&y).map(|(&h, &v)| v - (c[0] + c[1] * h * h.ln() + c[2] * h)).collect();
    let rms = (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();
    let dropped = least_squares(&hbar[1..], &y[1..])?;
    let volume = -c[0];
    let volume_without_largest = -dropped[0];
    Ok(RateFit {
        hbar,
        values: y,
        volume,
        p: c[1],
        q: c[2],
        residuals,
        rms,
        volume_without_largest,
        stability_shift: ((volume - volume_without_largest) / volume).abs(),
    })
}
