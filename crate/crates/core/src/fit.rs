//! Annulus sampling and log–log power-law fits.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::ScalarSamples;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerFit {
    /// Slope of `log|q|` against `log R`; algebraic decay `R^{-2}` gives -2.
    pub exponent: f64,
    pub intercept: f64,
    /// Root-mean-square deviation of the log data from the line.
    pub residual: f64,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// Slopes between consecutive radii, outermost last.
    pub local_exponents: Vec<f64>,
}

impl PowerFit {
    /// True when the local slopes steepen steadily outward by more than
    /// `tolerance` overall, the signature of faster-than-algebraic decay.
    pub fn steepening(&self, tolerance: f64) -> bool {
        let s = &self.local_exponents;
        s.len() >= 2 && s.windows(2).all(|w| w[1] <= w[0] + 1e-12) && s[0] - s[s.len() - 1] > tolerance
    }
}

/// Least-squares line through `(log r, log v)`.
pub fn log_log_fit(radii: &[f64], values: &[f64]) -> Result<PowerFit> {
    if radii.len() != values.len() || radii.len() < 2 {
        return Err(Error::InsufficientDecay("need at least two radii".into()));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("radii must increase strictly".into()));
    }
    if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InsufficientDecay(
            "zero or nonfinite signal on an annulus".into(),
        ));
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let local_exponents = xs
        .windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
        .collect();
    Ok(PowerFit {
        exponent: slope,
        intercept,
        residual,
        radii: radii.to_vec(),
        values: values.to_vec(),
        local_exponents,
    })
}

/// `count` log-spaced radii between `lo` and `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
        .collect()
}

/// Maximum of `|s|` over the annulus `r_in <= |x| < r_out` (2D grids).
pub fn annulus_max(s: &ScalarSamples, r_in: f64, r_out: f64) -> f64 {
    let g = s.grid();
    s.values()
        .iter()
        .enumerate()
        .filter_map(|(i, v)| {
            let p = g.position(i);
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            (r >= r_in && r < r_out).then_some(v.abs())
        })
        .fold(0.0, f64::max)
}

/// Annulus maxima for log-spaced radii, each annulus spanning the
/// geometric midpoints to its neighbours.
pub fn annulus_profile(s: &ScalarSamples, radii: &[f64]) -> Vec<f64> {
    let n = radii.len();
    (0..n)
        .map(|i| {
            let lo = if i == 0 {
                radii[0] * (radii[0] / radii.get(1).copied().unwrap_or(radii[0] * 1.2)).sqrt()
            } else {
                (radii[i - 1] * radii[i]).sqrt()
            };
            let hi = if i + 1 == n {
                radii[i] * (radii[i] / radii.get(i.wrapping_sub(1)).copied().unwrap_or(radii[i] / 1.2)).sqrt()
            } else {
                (radii[i] * radii[i + 1]).sqrt()
            };
            annulus_max(s, lo, hi)
        })
        .collect()
}
