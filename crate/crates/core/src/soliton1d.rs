//! The closed-form one-dimensional traveling waves
//! `u = (c sech(kx), tanh(kx), k sech(kx))`, `k = √(1 - c²)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{energy_density_from, Field, LiftedField, DEFAULT_MARGIN};
use crate::grid::{integrate, Grid, ScalarSamples};

/// Inverse width `√(1 - c²)`.
pub fn inverse_width(c: f64) -> f64 {
    (1.0 - c * c).max(0.0).sqrt()
}

fn check_profile_speed(c: f64) -> Result<()> {
    if (0.0..1.0).contains(&c) {
        Ok(())
    } else {
        Err(Error::SpeedOutOfRange { c, range: "[0, 1)" })
    }
}

fn check_open_speed(c: f64) -> Result<()> {
    if c > 0.0 && c < 1.0 {
        Ok(())
    } else {
        Err(Error::SpeedOutOfRange { c, range: "(0, 1)" })
    }
}

/// `(u1, u2, u3)` at `x`.
pub fn profile(c: f64, x: f64) -> Result<[f64; 3]> {
    check_profile_speed(c)?;
    let k = inverse_width(c);
    let sech = 1.0 / (k * x).cosh();
    Ok([c * sech, (k * x).tanh(), k * sech])
}

/// Phase `θ = arctan(sinh(kx)/c)` of the in-plane part.
pub fn phase(c: f64, x: f64) -> Result<f64> {
    check_open_speed(c)?;
    Ok(((inverse_width(c) * x).sinh() / c).atan())
}

pub fn energy_closed(c: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&c) {
        Ok(2.0 * inverse_width(c))
    } else {
        Err(Error::SpeedOutOfRange { c, range: "[0, 1]" })
    }
}

pub fn momentum_closed(c: f64) -> Result<f64> {
    check_open_speed(c)?;
    Ok(2.0 * (inverse_width(c) / c).atan())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveRow {
    pub c: f64,
    pub energy: f64,
    pub momentum: f64,
    /// `2 sin(p/2)`.
    pub energy_from_momentum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveSlope {
    pub c: f64,
    pub momentum: f64,
    /// Centered difference `(E(c+h) - E(c-h)) / (p(c+h) - p(c-h))`.
    pub slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyMomentumCurve {
    pub rows: Vec<CurveRow>,
    /// `dE/dp` at each row.
    pub slopes: Vec<CurveSlope>,
}

const SLOPE_STEP: f64 = 1e-5;

pub fn ep_curve(speeds: &[f64]) -> Result<EnergyMomentumCurve> {
    if speeds.is_empty() {
        return Err(Error::InvalidArgument("no speeds given".into()));
    }
    let rows = speeds
        .iter()
        .map(|&c| {
            let p = momentum_closed(c)?;
            Ok(CurveRow {
                c,
                energy: energy_closed(c)?,
                momentum: p,
                energy_from_momentum: 2.0 * (0.5 * p).sin(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let slopes = rows
        .iter()
        .map(|r| {
            let h = SLOPE_STEP.min(0.5 * r.c).min(0.5 * (1.0 - r.c));
            let (lo, hi) = (r.c - h, r.c + h);
            Ok(CurveSlope {
                c: r.c,
                momentum: r.momentum,
                slope: (energy_closed(hi)? - energy_closed(lo)?) / (momentum_closed(hi)? - momentum_closed(lo)?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EnergyMomentumCurve { rows, slopes })
}

/// Box length `40/k` used by default for 1D quadrature.
pub fn default_length(c: f64) -> f64 {
    40.0 / inverse_width(c)
}

fn check_domain(c: f64, grid: &Grid) -> Result<()> {
    let need = default_length(c) * (1.0 - 1e-12);
    if grid.length(0) < need {
        return Err(Error::DomainTooSmall(format!(
            "length {} below 40/k = {} for c = {c}",
            grid.length(0),
            default_length(c)
        )));
    }
    Ok(())
}

/// The profile sampled on a 1D grid (or extended along the second axis
/// of a 2D grid).
pub fn sample_field(c: f64, grid: &Grid) -> Result<Field> {
    check_profile_speed(c)?;
    let comp = |i: usize| ScalarSamples::from_fn(grid, |x| profile(c, x[0]).map(|u| u[i]).unwrap_or(f64::NAN));
    Field::new(c, comp(0), comp(1), comp(2))
}

/// The profile in polar form with the closed-form phase.
pub fn sample_lifted(c: f64, grid: &Grid) -> Result<LiftedField> {
    check_open_speed(c)?;
    let u3 = ScalarSamples::from_fn(grid, |x| inverse_width(c) / (inverse_width(c) * x[0]).cosh());
    let theta = ScalarSamples::from_fn(grid, |x| ((inverse_width(c) * x[0]).sinh() / c).atan());
    LiftedField::new(c, u3, theta, DEFAULT_MARGIN.min(0.5 * (1.0 - inverse_width(c))))
}

/// Max-norm residuals of the 1D component equations and first integrals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Residual1d {
    pub equations: [f64; 3],
    /// `max | |u'|² - u3² |`.
    pub first_integral: f64,
    /// `max | (u3')² - u3²((1 - c²) - u3²) |`.
    pub u3_first_integral: f64,
}

impl Residual1d {
    pub fn max_equation(&self) -> f64 {
        self.equations.iter().cloned().fold(0.0, f64::max)
    }
}

/// Residuals of the closed-form profile on `grid` under spectral
/// differentiation.
pub fn residual_1d(c: f64, grid: &Grid) -> Result<Residual1d> {
    check_profile_speed(c)?;
    if grid.dim() != 1 {
        return Err(Error::InvalidGrid("residual_1d needs a 1D grid".into()));
    }
    check_domain(c, grid)?;
    residual_1d_of(&sample_field(c, grid)?)
}

/// Residuals of arbitrary 1D samples; `field.c()` is the speed.
pub fn residual_1d_of(field: &Field) -> Result<Residual1d> {
    let c = field.c();
    let d = field.derivatives()?;
    let [u1, u2, u3] = field.components().clone().map(|s| s.into_values());
    let [d1, d2, d3] = d.first[0].clone().map(|s| s.into_values());
    let [s1, s2, s3] = d.second[0].clone().map(|s| s.into_values());
    let e = energy_density_from(field.u3(), &d.first);
    let e = e.values();
    let mut eq = [0.0f64; 3];
    let mut fi = 0.0f64;
    let mut fi3 = 0.0f64;
    for i in 0..u1.len() {
        let r1 = -s1[i] - 2.0 * e[i] * u1[i] - c * (u2[i] * d3[i] - u3[i] * d2[i]);
        let r2 = -s2[i] - 2.0 * e[i] * u2[i] - c * (u3[i] * d1[i] - u1[i] * d3[i]);
        let r3 = -s3[i] - 2.0 * e[i] * u3[i] + u3[i] - c * (u1[i] * d2[i] - u2[i] * d1[i]);
        eq[0] = eq[0].max(r1.abs());
        eq[1] = eq[1].max(r2.abs());
        eq[2] = eq[2].max(r3.abs());
        let grad2 = d1[i] * d1[i] + d2[i] * d2[i] + d3[i] * d3[i];
        fi = fi.max((grad2 - u3[i] * u3[i]).abs());
        let w = u3[i] * u3[i];
        fi3 = fi3.max((d3[i] * d3[i] - w * ((1.0 - c * c) - w)).abs());
    }
    Ok(Residual1d {
        equations: eq,
        first_integral: fi,
        u3_first_integral: fi3,
    })
}

/// Quadrature values of the sampled profile.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Quadrature1d {
    pub energy: f64,
    pub momentum: f64,
    /// `∫ |u'|²`.
    pub dirichlet: f64,
    pub u3_l2_squared: f64,
    pub u3_l4_fourth: f64,
}

/// Energy `½∫(|u'|² + u3²)` and momentum `∫u3 θ'` by the rectangle rule,
/// with `θ' = (u1 u2' - u2 u1')/(1 - u3²)` from spectral derivatives.
pub fn quadrature(c: f64, grid: &Grid) -> Result<Quadrature1d> {
    check_open_speed(c)?;
    check_domain(c, grid)?;
    let f = sample_field(c, grid)?;
    let g = f.gradients()?;
    let [d1, d2, d3] = &g[0];
    let (u1, u2, u3) = (f.u1().values(), f.u2().values(), f.u3().values());
    let dirichlet: Vec<f64> = (0..grid.len())
        .map(|i| d1.values()[i].powi(2) + d2.values()[i].powi(2) + d3.values()[i].powi(2))
        .collect();
    let mom: Vec<f64> = (0..grid.len())
        .map(|i| {
            let rho2 = 1.0 - u3[i] * u3[i];
            u3[i] * (u1[i] * d2.values()[i] - u2[i] * d1.values()[i]) / rho2
        })
        .collect();
    let s = |v: Vec<f64>| integrate(&ScalarSamples::new(grid.clone(), v).expect("grid"));
    let dir = s(dirichlet);
    let l2 = s(u3.iter().map(|v| v * v).collect());
    Ok(Quadrature1d {
        energy: 0.5 * (dir + l2),
        momentum: s(mom),
        dirichlet: dir,
        u3_l2_squared: l2,
        u3_l4_fourth: s(u3.iter().map(|v| v.powi(4)).collect()),
    })
}

/// Grid resolving both the decay length `1/k` and the core width `c/k` of
/// the momentum density on a box of length `40/k`.
pub fn quadrature_grid(c: f64) -> Result<Grid> {
    check_open_speed(c)?;
    let length = default_length(c);
    let k = inverse_width(c);
    let wanted_h = (0.02 / k).min(c / (8.0 * k));
    let mut n = 1024usize;
    while length / (n as f64) > wanted_h {
        n *= 2;
    }
    Grid::line(n, length)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn profile_examples() {
        let u = profile(0.0, 0.0).unwrap();
        assert_eq!(u, [0.0, 0.0, 1.0]);
        let c = 3f64.sqrt() / 2.0;
        let u = profile(c, 0.0).unwrap();
        assert_abs_diff_eq!(u[0], c, epsilon = 1e-15);
        assert_abs_diff_eq!(u[2], 0.5, epsilon = 1e-15);
        let u = profile(0.4, 1e3).unwrap();
        assert_abs_diff_eq!(u[1], 1.0, epsilon = 1e-15);
        assert!(u[0].abs() < 1e-15 && u[2].abs() < 1e-15);
        assert!(profile(1.0, 0.0).is_err());
        assert!(profile(-0.1, 0.0).is_err());
    }

    #[test]
    fn phase_examples() {
        assert_eq!(phase(0.3, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(phase(0.3, 200.0).unwrap(), PI / 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(phase(0.3, -200.0).unwrap(), -PI / 2.0, epsilon = 1e-14);
        assert!(phase(0.0, 1.0).is_err());
    }

    #[test]
    fn phase_derivative_matches_polar_relation() {
        let c = 0.6;
        let h = 1e-5;
        for &x in &[-3.0, -0.7, 0.0, 0.4, 2.5] {
            let fd = (phase(c, x + h).unwrap() - phase(c, x - h).unwrap()) / (2.0 * h);
            let u3 = profile(c, x).unwrap()[2];
            assert_abs_diff_eq!(fd, c * u3 / (1.0 - u3 * u3), epsilon = 1e-9);
        }
    }

    #[test]
    fn closed_forms() {
        assert_eq!(energy_closed(0.0).unwrap(), 2.0);
        assert_eq!(energy_closed(1.0).unwrap(), 0.0);
        let c = 3f64.sqrt() / 2.0;
        assert_abs_diff_eq!(energy_closed(c).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(momentum_closed(c).unwrap(), PI / 3.0, epsilon = 1e-15);
        assert!(momentum_closed(1.0 - 1e-12).unwrap() < 1e-5);
        assert_abs_diff_eq!(momentum_closed(1e-12).unwrap(), PI, epsilon = 1e-10);
        assert!(momentum_closed(0.0).is_err());
        assert!(energy_closed(1.1).is_err());
    }

    #[test]
    fn curve_rows_and_slope() {
        let c = 3f64.sqrt() / 2.0;
        let curve = ep_curve(&[c - 1e-3, c, c + 1e-3, 0.5f64.sqrt()]).unwrap();
        let row = &curve.rows[1];
        assert_abs_diff_eq!(row.energy, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(row.energy_from_momentum, 1.0, epsilon = 1e-15);
        let row = &curve.rows[3];
        assert_abs_diff_eq!(row.momentum, PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(row.energy, 2f64.sqrt(), epsilon = 1e-15);
        let centered =
            (curve.rows[2].energy - curve.rows[0].energy) / (curve.rows[2].momentum - curve.rows[0].momentum);
        assert_abs_diff_eq!(centered, c, epsilon = 1e-4);
        assert!(ep_curve(&[]).is_err());
    }

    #[test]
    fn residual_at_half_speed() {
        let g = Grid::line(1024, 60.0).unwrap();
        let r = residual_1d(0.5, &g).unwrap();
        assert!(r.max_equation() <= 1e-8, "{r:?}");
        assert!(r.first_integral <= 1e-8 && r.u3_first_integral <= 1e-8);
    }

    #[test]
    fn residual_at_rest() {
        let g = Grid::line(1024, 60.0).unwrap();
        let r = residual_1d(0.0, &g).unwrap();
        assert!(r.max_equation() <= 1e-8, "{r:?}");
    }

    #[test]
    fn constant_profile_has_zero_residual() {
        let g = Grid::line(64, 60.0).unwrap();
        let r = residual_1d_of(&Field::trivial(&g, 0.3)).unwrap();
        assert_eq!(r.max_equation(), 0.0);
        assert_eq!(r.first_integral, 0.0);
    }

    #[test]
    fn residual_rejects_short_box() {
        let g = Grid::line(256, 10.0).unwrap();
        assert!(matches!(residual_1d(0.5, &g), Err(Error::DomainTooSmall(_))));
    }
}
