//! Far-field coefficients, asymptotic profiles and decay fits.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{lifting, Field, LiftedField};
use crate::fit::{annulus_profile, log_log_fit, log_spaced, PowerFit};
use crate::grid::{bilinear, integrate, spectral_gradients, ScalarSamples};
use crate::kernels::{farfield_limit, surface_factor, FarFieldLimit};
use crate::solver::compute_fg;

/// Fraction of the half-box inside which periodic images are negligible.
pub const RELIABLE_FRACTION: f64 = 0.4;
/// Inner end of the default fit range, as a fraction of the half-box.
pub const FIT_START_FRACTION: f64 = 0.15;
pub const FIT_RADII: usize = 8;

/// `∫ e(u) u3` and `∫ G_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceIntegrals {
    pub energy_u3: f64,
    pub g: Vec<f64>,
}

impl SourceIntegrals {
    /// `∫F = 2∫e u3 + c∫G_1`.
    pub fn f(&self, c: f64) -> f64 {
        2.0 * self.energy_u3 + c * self.g[0]
    }
}

pub fn source_integrals(lf: &LiftedField) -> Result<SourceIntegrals> {
    let src = compute_fg(lf)?;
    Ok(SourceIntegrals {
        energy_u3: integrate(&src.energy_density.zip_with(lf.u3(), |e, u| e * u)),
        g: src.g.iter().map(integrate).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FarFieldCoefficients {
    pub alpha: f64,
    /// `β_j` for the transverse axes `j = 2..N`.
    pub beta: Vec<f64>,
    /// Argument of the limit phase `λ_∞`.
    pub lambda_phase: f64,
}

impl FarFieldCoefficients {
    pub fn new(alpha: f64, beta: Vec<f64>) -> Self {
        FarFieldCoefficients {
            alpha,
            beta,
            lambda_phase: 0.0,
        }
    }

    pub fn lambda_inf(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.lambda_phase)
    }
}

/// `α` and `β_j` from the source integrals in dimension `integrals.g.len()`.
pub fn coefficients_from_integrals(c: f64, integrals: &SourceIntegrals) -> Result<FarFieldCoefficients> {
    check_speed(c)?;
    let n = integrals.g.len();
    if n < 2 {
        return Err(Error::InvalidArgument("far-field coefficients need N >= 2".into()));
    }
    let nf = n as f64;
    let m = 1.0 - c * c;
    let sf = surface_factor(n);
    let alpha = sf * m.powf((nf - 3.0) / 2.0) * (2.0 * c * integrals.energy_u3 - m * integrals.g[0]);
    let beta = integrals.g[1..]
        .iter()
        .map(|g| -sf * m.powf((nf - 1.0) / 2.0) * g)
        .collect();
    Ok(FarFieldCoefficients::new(alpha, beta))
}

/// Coefficients of a vortexless 2D field, with `λ_∞` from the circular mean
/// of the in-plane phase on the outermost reliable annulus.
pub fn alpha_beta(f: &Field, margin: f64) -> Result<FarFieldCoefficients> {
    check_speed(f.c())?;
    let lf = lifting(f, margin)?;
    let mut co = coefficients_from_integrals(f.c(), &source_integrals(&lf)?)?;
    co.lambda_phase = limit_phase(f)?;
    Ok(co)
}

fn half_box(f: &Field) -> f64 {
    let g = f.grid();
    0.5 * g.length(0).min(g.length(1))
}

/// Largest radius treated as free of periodic images.
pub fn reliable_radius(f: &Field) -> f64 {
    RELIABLE_FRACTION * half_box(f)
}

fn limit_phase(f: &Field) -> Result<f64> {
    let g = f.grid();
    let outer = reliable_radius(f);
    let inner = 0.9 * outer;
    let planar = f.planar();
    let sum: Complex64 = planar
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let p = g.position(*i);
            let r = p[0].hypot(p[1]);
            r >= inner && r < outer
        })
        .map(|(_, z)| if z.norm() > 0.0 { z / z.norm() } else { *z })
        .sum();
    if sum.norm() == 0.0 {
        return Err(Error::InsufficientDecay("no phase signal on the outer annulus".into()));
    }
    Ok(sum.arg())
}

fn check_speed(c: f64) -> Result<()> {
    if c > 0.0 && c < 1.0 {
        Ok(())
    } else {
        Err(Error::SpeedOutOfRange { c, range: "(0, 1)" })
    }
}

fn check_direction(sigma: &[f64]) -> Result<()> {
    let norm = sigma.iter().map(|v| v * v).sum::<f64>().sqrt();
    if sigma.len() < 2 || (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "direction {sigma:?} is not a unit vector"
        )));
    }
    Ok(())
}

/// Asymptotic profiles `(ǔ_∞(σ), u_{3,∞}(σ))`, with `N = σ.len()`.
pub fn predicted_farfield(co: &FarFieldCoefficients, c: f64, sigma: &[f64]) -> Result<(f64, f64)> {
    check_speed(c)?;
    check_direction(sigma)?;
    let n = sigma.len();
    if co.beta.len() != n - 1 {
        return Err(Error::InvalidArgument(format!(
            "{} transverse coefficients for dimension {n}",
            co.beta.len()
        )));
    }
    let nf = n as f64;
    let d = 1.0 - c * c + c * c * sigma[0] * sigma[0];
    let lead = d.powf(-nf / 2.0);
    let next = d.powf(-(nf + 2.0) / 2.0);
    let transverse: f64 = co.beta.iter().zip(&sigma[1..]).map(|(b, s)| b * s).sum();
    let u_check = (co.alpha * sigma[0] + transverse) * lead;
    let u3 = co.alpha * c * (lead - nf * sigma[0] * sigma[0] * next) - nf * c * sigma[0] * next * transverse;
    Ok((u_check, u3))
}

/// `θ_∞(σ) = -(1/(N-1)) Σ_j σ_j θ^j_∞(σ)` with each `θ^j_∞` assembled from
/// the kernel far-field limits.
pub fn theta_route(c: f64, sigma: &[f64], integrals: &SourceIntegrals) -> Result<f64> {
    check_speed(c)?;
    check_direction(sigma)?;
    let n = sigma.len();
    if integrals.g.len() != n {
        return Err(Error::InvalidArgument(
            "source integrals and direction differ in dimension".into(),
        ));
    }
    let int_f = integrals.f(c);
    let mut sum = 0.0;
    for j in 1..=n {
        let mut theta_j = c * farfield_limit(&FarFieldLimit::Lcj { c, j }, sigma)? * int_f;
        for k in 1..=n {
            let t = farfield_limit(&FarFieldLimit::Tcjk { c, j, k }, sigma)?;
            let r = farfield_limit(&FarFieldLimit::Riesz { j, k }, sigma)?;
            theta_j -= (c * c * t + r) * integrals.g[k - 1];
        }
        sum += sigma[j - 1] * theta_j;
    }
    Ok(-sum / (n as f64 - 1.0))
}

/// `|ǔ_∞(σ) - θ_∞(σ)|` for arbitrary source integrals.
pub fn theta_route_residual(c: f64, sigma: &[f64], integrals: &SourceIntegrals) -> Result<f64> {
    let co = coefficients_from_integrals(c, integrals)?;
    let (direct, _) = predicted_farfield(&co, c, sigma)?;
    Ok((direct - theta_route(c, sigma, integrals)?).abs())
}

/// `|ǔ_∞(σ) - θ_∞(σ)|` for given coefficients. The source integrals are
/// recovered with `∫G_1 = 0`, which loses nothing since both routes depend
/// on `∫e u3` and `∫G_1` only through `α`.
pub fn theta_route_check(co: &FarFieldCoefficients, c: f64, sigma: &[f64]) -> Result<f64> {
    check_speed(c)?;
    let n = co.beta.len() + 1;
    let nf = n as f64;
    let m = 1.0 - c * c;
    let sf = surface_factor(n);
    let mut g = vec![0.0];
    g.extend(co.beta.iter().map(|b| -b / (sf * m.powf((nf - 1.0) / 2.0))));
    let integrals = SourceIntegrals {
        energy_u3: co.alpha / (2.0 * c * sf * m.powf((nf - 3.0) / 2.0)),
        g,
    };
    let (direct, _) = predicted_farfield(co, c, sigma)?;
    Ok((direct - theta_route(c, sigma, &integrals)?).abs())
}

/// Measured and predicted rescaled far field at one point `Rσ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FarFieldSample {
    pub radius: f64,
    pub angle: f64,
    /// `R (ǔ(Rσ) - λ_∞) / (iλ_∞)`, real part.
    pub u_check: f64,
    /// Imaginary part of the same quantity; vanishes in the limit.
    pub u_check_imag: f64,
    /// `R² u3(Rσ)`.
    pub u3: f64,
    pub predicted_u_check: f64,
    pub predicted_u3: f64,
}

/// Equally spaced angles on the circle, starting at 0.
pub fn directions(count: usize) -> Vec<f64> {
    (0..count).map(|i| 2.0 * PI * i as f64 / count as f64).collect()
}

/// Samples the rescaled far field by bilinear interpolation.
pub fn measure_farfield(
    f: &Field,
    co: &FarFieldCoefficients,
    radii: &[f64],
    angles: &[f64],
) -> Result<Vec<FarFieldSample>> {
    if f.grid().dim() != 2 {
        return Err(Error::InvalidGrid("far field sampling needs a 2D field".into()));
    }
    let limit = reliable_radius(f);
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0 && **r <= limit * (1.0 + 1e-12))) {
        return Err(Error::DomainTooSmall(format!(
            "radius {r} outside the reliable region (<= {limit})"
        )));
    }
    let lambda = co.lambda_inf();
    let [u1, u2, u3] = f.components();
    let mut out = Vec::with_capacity(radii.len() * angles.len());
    for &r in radii {
        for &a in angles {
            let sigma = [a.cos(), a.sin()];
            let x = [r * sigma[0], r * sigma[1]];
            let z = Complex64::new(bilinear(u1, x), bilinear(u2, x));
            let w = r * (z - lambda) / (Complex64::i() * lambda);
            let (pc, p3) = predicted_farfield(co, f.c(), &sigma)?;
            out.push(FarFieldSample {
                radius: r,
                angle: a,
                u_check: w.re,
                u_check_imag: w.im,
                u3: r * r * bilinear(u3, x),
                predicted_u_check: pc,
                predicted_u3: p3,
            });
        }
    }
    Ok(out)
}

/// `max |measured - predicted| / max |predicted|` over the samples, for
/// `u3` and `ǔ` respectively.
pub fn relative_mismatch(samples: &[FarFieldSample]) -> (f64, f64) {
    let ratio = |m: &dyn Fn(&FarFieldSample) -> f64, p: &dyn Fn(&FarFieldSample) -> f64| {
        let err = samples.iter().map(|s| (m(s) - p(s)).abs()).fold(0.0, f64::max);
        let scale = samples.iter().map(|s| p(s).abs()).fold(0.0, f64::max);
        if scale > 0.0 {
            err / scale
        } else {
            err
        }
    };
    (
        ratio(&|s| s.u3, &|s| s.predicted_u3),
        ratio(&|s| s.u_check, &|s| s.predicted_u_check),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayQuantity {
    U3,
    GradTheta,
    GradU3,
}

impl DecayQuantity {
    pub fn name(self) -> &'static str {
        match self {
            DecayQuantity::U3 => "u3",
            DecayQuantity::GradTheta => "grad_theta",
            DecayQuantity::GradU3 => "grad_u3",
        }
    }

    /// Exponent predicted for a 2D solution.
    pub fn expected_exponent(self) -> f64 {
        match self {
            DecayQuantity::U3 | DecayQuantity::GradTheta => -2.0,
            DecayQuantity::GradU3 => -3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub quantity: String,
    pub exponent: f64,
    pub residual: f64,
    pub radii: Vec<f64>,
    /// Local slopes steepen outward, suggesting faster than algebraic decay.
    pub non_power_law: bool,
}

impl DecayFit {
    fn from_power(quantity: &str, fit: PowerFit) -> Self {
        DecayFit {
            quantity: quantity.to_string(),
            exponent: fit.exponent,
            residual: fit.residual,
            non_power_law: fit.steepening(0.5),
            radii: fit.radii,
        }
    }
}

/// Default fit radii: log-spaced over `[0.15, 0.4]` of the half-box.
pub fn default_fit_radii(half_box: f64) -> Vec<f64> {
    log_spaced(FIT_START_FRACTION * half_box, RELIABLE_FRACTION * half_box, FIT_RADII)
}

/// Power-law fit of the annulus maxima of `|s|` on the default radii.
pub fn decay_fit_samples(s: &ScalarSamples, quantity: &str) -> Result<DecayFit> {
    let g = s.grid();
    if g.dim() != 2 {
        return Err(Error::InvalidGrid("decay fits need a 2D grid".into()));
    }
    let half = 0.5 * g.length(0).min(g.length(1));
    let radii = default_fit_radii(half);
    let values = annulus_profile(s, &radii);
    let peak = s.max_abs();
    let outer = *values.last().expect("radii");
    if !(peak > 0.0) || !(outer > 0.0) {
        return Err(Error::InsufficientDecay(format!("{quantity}: no signal to fit")));
    }
    if outer > 1e-3 * peak {
        return Err(Error::InsufficientDecay(format!(
            "{quantity}: outermost annulus at {:.3e} of peak, above 1e-3",
            outer / peak
        )));
    }
    Ok(DecayFit::from_power(quantity, log_log_fit(&radii, &values)?))
}

pub fn decay_fit(f: &Field, quantity: DecayQuantity, margin: f64) -> Result<DecayFit> {
    let s = match quantity {
        DecayQuantity::U3 => f.u3().clone(),
        DecayQuantity::GradTheta => norm_of(&lifting(f, margin)?.theta_gradient()),
        DecayQuantity::GradU3 => norm_of(&spectral_gradients(f.u3())),
    };
    decay_fit_samples(&s, quantity.name())
}

/// A decay fit, or why it could not be made.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOutcome {
    pub quantity: String,
    pub expected_exponent: f64,
    pub fit: Option<DecayFit>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FarFieldReport {
    pub coefficients: FarFieldCoefficients,
    pub radii: Vec<f64>,
    pub samples: Vec<FarFieldSample>,
    /// Sup-relative mismatch of `R²u3` against `u_{3,∞}`.
    pub mismatch_u3: f64,
    /// Sup-relative mismatch of the rescaled in-plane part against `ǔ_∞`.
    pub mismatch_u_check: f64,
    pub fits: Vec<FitOutcome>,
}

/// Coefficients, annulus comparisons on the default fit radii at `ndir`
/// directions, and decay fits of `u3`, `∇θ` and `∇u3`.
pub fn farfield_report(f: &Field, ndir: usize, margin: f64) -> Result<FarFieldReport> {
    if ndir == 0 {
        return Err(Error::InvalidArgument("no directions".into()));
    }
    let coefficients = alpha_beta(f, margin)?;
    let radii = default_fit_radii(half_box(f));
    let samples = measure_farfield(f, &coefficients, &radii, &directions(ndir))?;
    let (mismatch_u3, mismatch_u_check) = relative_mismatch(&samples);
    let fits = [DecayQuantity::U3, DecayQuantity::GradTheta, DecayQuantity::GradU3]
        .into_iter()
        .map(|q| {
            let (fit, error) = match decay_fit(f, q, margin) {
                Ok(fit) => (Some(fit), None),
                Err(e) => (None, Some(e.to_string())),
            };
            FitOutcome {
                quantity: q.name().to_string(),
                expected_exponent: q.expected_exponent(),
                fit,
                error,
            }
        })
        .collect();
    Ok(FarFieldReport {
        coefficients,
        radii,
        samples,
        mismatch_u3,
        mismatch_u_check,
        fits,
    })
}

fn norm_of(components: &[ScalarSamples]) -> ScalarSamples {
    let mut out = components[0].map(|v| v * v);
    for c in &components[1..] {
        out = out.zip_with(c, |a, b| a + b * b);
    }
    out.map(f64::sqrt)
}
