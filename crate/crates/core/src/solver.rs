//! Fixed-point solver for 2D traveling waves in polar form.
//!
//! One step maps a lifted field `(u3, θ)` to the sources
//! `G = u1∇u2 - u2∇u1 - ∇θ` and `F = 2e(u)u3 + cG1`, and from them to the
//! candidates
//!
//! ```text
//! û3* = (|ξ|²F̂ - c ξ1 ξ·Ĝ) / D_c
//! ∂_jθ* = c L_{c,j} F - c² Σ_k T_{c,j,k} G_k - Σ_k R_{j,k} G_k
//! ```
//!
//! The candidate is scaled by a Petviashvili factor `s = M^γ`,
//! `M = ⟨u3, u3⟩/⟨u3, u3*⟩`, so the iteration does not collapse to the
//! trivial state, and blended with the current iterate with damping `τ`.
//! Steps that increase the PDE residual are rejected and `τ` halved.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{energy_density_from, ramp, Field, LiftedField, DEFAULT_MARGIN};
use crate::grid::{bicubic, integrate, Grid, ScalarSamples, Spectrum};
use crate::kernels::KernelSymbol;
use crate::soliton1d;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveParams {
    /// Initial and maximal damping `τ ∈ (0, 1]`.
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Renormalize `|u| = 1` on the returned field.
    pub renorm: bool,
    /// Exponent `γ` of the Petviashvili factor; 0 gives plain damped
    /// Picard iteration.
    pub stabilization: f64,
    pub margin: f64,
    /// The run stops as stalled once `τ` drops below this.
    pub min_damping: f64,
    /// Extra iterations allowed, once the residual is below `tol`, to bring
    /// the fixed-point increment below `tol` as well.
    pub polish_iter: usize,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams {
            damping: 0.3,
            tol: 1e-6,
            max_iter: 2000,
            renorm: true,
            stabilization: 1.5,
            margin: DEFAULT_MARGIN,
            min_damping: 1e-4,
            polish_iter: 200,
        }
    }
}

impl SolveParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "damping {} not in (0, 1]",
                self.damping
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance {} must be positive",
                self.tol
            )));
        }
        if !(0.0..1.0).contains(&self.margin) {
            return Err(Error::InvalidArgument(format!("margin {} not in [0, 1)", self.margin)));
        }
        if !(self.stabilization >= 0.0) {
            return Err(Error::InvalidArgument("stabilization exponent must be >= 0".into()));
        }
        Ok(())
    }
}

fn check_speed(c: f64) -> Result<()> {
    if c > 0.0 && c < 1.0 {
        Ok(())
    } else {
        Err(Error::SpeedOutOfRange { c, range: "(0, 1)" })
    }
}

/// `F` and `G = (G_1, .., G_N)`.
#[derive(Clone, Debug)]
pub struct SourceTerms {
    pub f: ScalarSamples,
    pub g: Vec<ScalarSamples>,
    pub energy_density: ScalarSamples,
}

/// Sources of a lifted field, with `e(u)` from the reconstructed field.
pub fn compute_fg(lf: &LiftedField) -> Result<SourceTerms> {
    let max_u3 = lf.u3().max_abs();
    if !(max_u3 <= 1.0 - lf.margin()) {
        return Err(Error::VortexPresent {
            max_u3,
            limit: 1.0 - lf.margin(),
        });
    }
    let field = lf.reconstruct();
    let grads = field.gradients()?;
    let e = energy_density_from(field.u3(), &grads);
    let dtheta = lf.theta_gradient();
    let (u1, u2) = (field.u1().values(), field.u2().values());
    let g: Vec<ScalarSamples> = grads
        .iter()
        .zip(&dtheta)
        .map(|(d, dt)| {
            let values = (0..u1.len())
                .map(|i| u1[i] * d[1].values()[i] - u2[i] * d[0].values()[i] - dt.values()[i])
                .collect();
            ScalarSamples::new(lf.grid().clone(), values).expect("grid")
        })
        .collect();
    let c = lf.c();
    let u3 = lf.u3().values();
    let f_values = (0..u3.len())
        .map(|i| 2.0 * e.values()[i] * u3[i] + c * g[0].values()[i])
        .collect();
    Ok(SourceTerms {
        f: ScalarSamples::new(lf.grid().clone(), f_values)?,
        g,
        energy_density: e,
    })
}

/// Unscaled candidates `u3*` and the periodic part of `θ*`.
///
/// The zero mode of `u3*` is the mean of `2e(u)u3 + c(u1∂1u2 - u2∂1u1)`,
/// which is what integrating the `u3` equation over the box requires. The
/// zero mode of `θ*` keeps the mean of the current phase.
fn candidates(lf: &LiftedField, src: &SourceTerms) -> Result<(ScalarSamples, ScalarSamples)> {
    let grid = lf.grid().clone();
    let dim = grid.dim();
    let c = lf.c();
    let fh = Spectrum::of(&src.f);
    let gh: Vec<Spectrum> = src.g.iter().map(Spectrum::of).collect();
    let lc = KernelSymbol::lc(c, dim)?;
    let lcj: Vec<KernelSymbol> = (1..=dim).map(|j| KernelSymbol::lcj(c, j, dim)).collect::<Result<_>>()?;
    let mut tjk = Vec::new();
    let mut rjk = Vec::new();
    for j in 1..=dim {
        for k in 1..=dim {
            tjk.push(KernelSymbol::tcjk(c, j, k, dim)?);
            rjk.push(KernelSymbol::rjk(j, k, dim)?);
        }
    }
    let theta_p = Spectrum::of(&lf.theta_periodic());
    let slope = lf.winding()[0] as f64 * std::f64::consts::PI / grid.length(0);
    let fc = fh.coefficients();
    let gc: Vec<&[Complex64]> = gh.iter().map(|s| s.coefficients()).collect();
    let pairs: Vec<(Complex64, Complex64)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            if i == 0 {
                let n = grid.len() as f64;
                return (fc[0] + Complex64::new(c * slope * n, 0.0), theta_p.coefficients()[0]);
            }
            let w = grid.wavevector(i);
            let xi = &w[..dim];
            let x2: f64 = xi.iter().map(|v| v * v).sum();
            let u3 = {
                let mut acc = fc[i] * lc.value(xi);
                for j in 0..dim {
                    acc -= gc[j][i] * (c * lcj[j].value(xi));
                }
                acc
            };
            let mut theta = Complex64::new(0.0, 0.0);
            for j in 0..dim {
                let mut grad = fc[i] * (c * lcj[j].value(xi));
                for k in 0..dim {
                    let t = tjk[j * dim + k].value(xi);
                    let r = rjk[j * dim + k].value(xi);
                    grad -= gc[k][i] * (c * c * t + r);
                }
                theta += Complex64::new(0.0, -xi[j] / x2) * grad;
            }
            (u3, theta)
        })
        .collect();
    let (u3h, th): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    Ok((
        Spectrum::from_coefficients(&grid, u3h)?.to_real(),
        Spectrum::from_coefficients(&grid, th)?.to_real(),
    ))
}

/// Outcome of one damped step.
#[derive(Clone, Debug)]
pub struct Step {
    pub lifted: LiftedField,
    /// Petviashvili factor applied to the candidate.
    pub scale: f64,
    /// `‖s·u3* - u3‖` in discrete L², the change an undamped step would make.
    pub increment: f64,
    /// Whether `u3` had to be clipped into the lifting margin.
    pub clipped: bool,
}

/// One damped, stabilized fixed-point step.
pub fn iterate_once(lf: &LiftedField, damping: f64, stabilization: f64) -> Result<Step> {
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(Error::InvalidArgument(format!("damping {damping} not in (0, 1]")));
    }
    check_speed(lf.c())?;
    let src = compute_fg(lf)?;
    let (u3s, ths) = candidates(lf, &src)?;
    let u3 = lf.u3().values();
    let num: f64 = u3.iter().map(|v| v * v).sum();
    let den: f64 = u3.iter().zip(u3s.values()).map(|(a, b)| a * b).sum();
    let scale = if num > 0.0 && den > 0.0 {
        (num / den).powf(stabilization)
    } else {
        1.0
    };
    if !scale.is_finite() || u3s.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence("nonfinite candidate".into()));
    }
    let grid = lf.grid();
    let increment = (u3s
        .values()
        .iter()
        .zip(u3)
        .map(|(a, b)| (scale * a - b).powi(2))
        .sum::<f64>()
        * grid.cell_volume())
    .sqrt();
    let limit = 1.0 - lf.margin();
    let mut clipped = false;
    let new_u3: Vec<f64> = u3
        .iter()
        .zip(u3s.values())
        .map(|(a, b)| {
            let v = (1.0 - damping) * a + damping * scale * b;
            if v.abs() > limit {
                clipped = true;
                v.signum() * limit
            } else {
                v
            }
        })
        .collect();
    let theta_p = lf.theta_periodic();
    let mean = theta_p.mean();
    let new_theta: Vec<f64> = theta_p
        .values()
        .iter()
        .zip(ths.values())
        .zip(lf.ramp().values())
        .map(|((a, b), r)| (1.0 - damping) * a + damping * (mean + scale * (b - mean)) + r)
        .collect();
    if new_theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence("nonfinite phase".into()));
    }
    let lifted = LiftedField::with_winding(
        lf.c(),
        ScalarSamples::new(grid.clone(), new_u3)?,
        ScalarSamples::new(grid.clone(), new_theta)?,
        lf.winding(),
        lf.margin(),
    )?;
    Ok(Step {
        lifted,
        scale,
        increment,
        clipped,
    })
}

/// Residual of the three component equations, in discrete L² over the box,
/// divided by `E + 1`.
pub fn residual(f: &Field) -> Result<f64> {
    let d = f.derivatives()?;
    let e = energy_density_from(f.u3(), &d.first);
    let energy = integrate(&e);
    let c = f.c();
    let [u1, u2, u3] = f.components();
    let (u1, u2, u3) = (u1.values(), u2.values(), u3.values());
    let e = e.values();
    let dim = f.grid().dim();
    let sum: f64 = (0..u1.len())
        .into_par_iter()
        .map(|i| {
            let mut lap = [0.0; 3];
            for axis in 0..dim {
                for (comp, l) in lap.iter_mut().enumerate() {
                    *l += d.second[axis][comp].values()[i];
                }
            }
            let d1 = [
                d.first[0][0].values()[i],
                d.first[0][1].values()[i],
                d.first[0][2].values()[i],
            ];
            let r1 = -lap[0] - 2.0 * e[i] * u1[i] - c * (u2[i] * d1[2] - u3[i] * d1[1]);
            let r2 = -lap[1] - 2.0 * e[i] * u2[i] - c * (u3[i] * d1[0] - u1[i] * d1[2]);
            let r3 = -lap[2] - 2.0 * e[i] * u3[i] + u3[i] - c * (u1[i] * d1[1] - u2[i] * d1[0]);
            r1 * r1 + r2 * r2 + r3 * r3
        })
        .sum();
    Ok((sum * f.grid().cell_volume()).sqrt() / (energy + 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum InitialKind {
    /// `a(1-c²) sech(kx1) sech(kx2)`.
    Bump,
    /// `a(1-c²)·3(3 - X² + Y²)/(3 + X² + Y²)²` with `X = kx1`, `Y = kx2`.
    Lump,
}

impl std::str::FromStr for InitialKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bump" => Ok(InitialKind::Bump),
            "lump" => Ok(InitialKind::Lump),
            _ => Err(Error::InvalidArgument(format!("unknown initial guess {s:?}"))),
        }
    }
}

/// Phase solving `Δθ = c∂1u3` spectrally, with zero mean.
pub fn linear_phase(c: f64, u3: &ScalarSamples) -> ScalarSamples {
    Spectrum::of(u3)
        .scaled(|i, xi| {
            if i == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                let x2 = xi[0] * xi[0] + xi[1] * xi[1];
                Complex64::new(0.0, -c * xi[0] / x2)
            }
        })
        .to_real()
}

pub fn initial_guess(c: f64, grid: &Grid, kind: InitialKind, amplitude: f64) -> Result<LiftedField> {
    check_speed(c)?;
    if !(amplitude > 0.0 && amplitude <= 0.5) {
        return Err(Error::InvalidArgument(format!("amplitude {amplitude} not in (0, 0.5]")));
    }
    if grid.dim() != 2 {
        return Err(Error::InvalidGrid("initial guesses are 2D".into()));
    }
    let k = soliton1d::inverse_width(c);
    let peak = amplitude * k * k;
    let u3 = ScalarSamples::from_fn(grid, |x| {
        let (a, b) = (k * x[0], k * x[1]);
        match kind {
            InitialKind::Bump => peak / (a.cosh() * b.cosh()),
            InitialKind::Lump => {
                let q = 3.0 + a * a + b * b;
                peak * 3.0 * (3.0 - a * a + b * b) / (q * q)
            }
        }
    });
    let theta = linear_phase(c, &u3);
    LiftedField::with_winding(c, u3, theta, [0, 0], DEFAULT_MARGIN)
}

/// The 1D soliton extended constantly along the second axis.
pub fn extend_1d(c: f64, grid: &Grid) -> Result<Field> {
    if grid.dim() != 2 {
        return Err(Error::InvalidGrid("extend_1d needs a 2D grid".into()));
    }
    soliton1d::sample_field(c, grid)
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub field: Field,
    pub lifted: LiftedField,
    /// Residual of the best iterate is at most `tol`.
    pub converged: bool,
    pub initial_residual: f64,
    /// PDE residual after every accepted step.
    pub residual_history: Vec<f64>,
    /// Steps attempted, accepted or not.
    pub iterations: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub residual: f64,
    /// Undamped fixed-point increment measured at the returned iterate,
    /// when available.
    pub increment: Option<f64>,
    pub clipped_steps: usize,
    pub stalled: bool,
    pub diverged: Option<String>,
}

/// Runs the damped iteration from `init` with speed `init.c()`.
pub fn solve(init: LiftedField, params: &SolveParams) -> Result<SolveResult> {
    params.validate()?;
    check_speed(init.c())?;
    let init = LiftedField::with_winding(
        init.c(),
        init.u3().clone(),
        init.theta().clone(),
        init.winding(),
        params.margin,
    )?;
    let initial_residual = residual(&init.reconstruct())?;
    let mut current = init;
    let mut r = initial_residual;
    let mut best = (r, current.clone(), None);
    let mut history = Vec::new();
    let mut tau = params.damping;
    let (mut iterations, mut accepted, mut rejected, mut clipped_steps) = (0, 0, 0, 0);
    let mut stalled = false;
    let mut diverged = None;
    let mut polish_left = params.polish_iter;
    while iterations < params.max_iter {
        let step = match iterate_once(&current, tau, params.stabilization) {
            Ok(s) => s,
            Err(Error::Divergence(msg)) => {
                diverged = Some(msg);
                break;
            }
            Err(e) => return Err(e),
        };
        if r <= best.0 {
            best.2 = Some(step.increment);
        }
        if r <= params.tol {
            if step.increment <= params.tol || polish_left == 0 {
                break;
            }
            polish_left -= 1;
        }
        iterations += 1;
        let candidate_field = step.lifted.reconstruct();
        let rc = residual(&candidate_field)?;
        if !rc.is_finite() {
            diverged = Some("nonfinite residual".into());
            break;
        }
        if accepted == 0 || rc <= r {
            accepted += 1;
            if step.clipped {
                clipped_steps += 1;
            }
            current = step.lifted;
            r = rc;
            history.push(rc);
            tau = (tau * 1.2).min(params.damping);
            if rc <= best.0 {
                best = (rc, current.clone(), None);
            }
            log::debug!(
                "step {iterations}: residual {rc:.3e}, scale {:.4}, tau {tau:.3}",
                step.scale
            );
        } else {
            rejected += 1;
            tau *= 0.5;
            if tau < params.min_damping {
                stalled = true;
                break;
            }
        }
    }
    let (best_r, lifted, increment) = best;
    let mut field = lifted.reconstruct();
    if params.renorm {
        field.renormalize();
    }
    Ok(SolveResult {
        field,
        lifted,
        converged: best_r <= params.tol,
        initial_residual,
        residual_history: history,
        iterations,
        accepted,
        rejected,
        residual: best_r,
        increment,
        clipped_steps,
        stalled,
        diverged,
    })
}

/// Stretches a lifted field from speed `c_from` to the decay scale of
/// `c_to`: `v(x) = w(x·k_to/k_from)`. Amplitudes are kept.
pub fn rescale_to_speed(lf: &LiftedField, c_to: f64) -> Result<LiftedField> {
    check_speed(c_to)?;
    let ratio = soliton1d::inverse_width(c_to) / soliton1d::inverse_width(lf.c());
    let grid = lf.grid();
    let periodic = lf.theta_periodic();
    let sample = |s: &ScalarSamples, x: [f64; 2]| {
        let p = [x[0] * ratio, x[1] * ratio];
        let inside = (0..grid.dim()).all(|a| p[a].abs() < 0.5 * grid.length(a));
        if inside {
            bicubic(s, p)
        } else {
            0.0
        }
    };
    let u3 = ScalarSamples::from_fn(grid, |x| sample(lf.u3(), x));
    let mean = periodic.mean();
    let theta_p = ScalarSamples::from_fn(grid, |x| {
        let p = [x[0] * ratio, x[1] * ratio];
        if (0..grid.dim()).all(|a| p[a].abs() < 0.5 * grid.length(a)) {
            bicubic(&periodic, p)
        } else {
            mean
        }
    });
    let theta = theta_p.zip_with(&ramp(grid, lf.winding()), |a, b| a + b);
    let limit = 1.0 - lf.margin();
    let u3 = u3.map(|v| v.clamp(-limit, limit));
    LiftedField::with_winding(c_to, u3, theta, lf.winding(), lf.margin())
}

/// Speeds visited by a continuation run.
pub fn continuation_speeds(c_start: f64, c_end: f64, steps: usize) -> Vec<f64> {
    if steps <= 1 {
        return vec![c_start];
    }
    (0..steps)
        .map(|i| c_start + (c_end - c_start) * i as f64 / (steps - 1) as f64)
        .collect()
}

/// Solves at `steps` speeds from `c_start` to `c_end`, seeding each solve
/// with the previous solution stretched to the new speed. Stops after the
/// first run that does not converge.
pub fn continuation(init: LiftedField, c_end: f64, steps: usize, params: &SolveParams) -> Result<Vec<SolveResult>> {
    if steps == 0 {
        return Err(Error::InvalidArgument("continuation needs at least one step".into()));
    }
    let speeds = continuation_speeds(init.c(), c_end, steps);
    for &c in &speeds {
        check_speed(c)?;
    }
    let mut out: Vec<SolveResult> = Vec::with_capacity(steps);
    let mut seed = init;
    for (i, &c) in speeds.iter().enumerate() {
        if i > 0 {
            seed = rescale_to_speed(&out[i - 1].lifted, c)?;
        }
        let result = solve(seed.clone(), params)?;
        let stop = !result.converged;
        log::info!(
            "continuation c = {c:.4}: residual {:.3e}, converged {}",
            result.residual,
            result.converged
        );
        out.push(result);
        if stop {
            break;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_is_fixed() {
        let g = Grid::plane([32, 32], [40.0, 40.0]).unwrap();
        let lf = LiftedField::trivial(&g, 0.5);
        let step = iterate_once(&lf, 0.3, 1.5).unwrap();
        assert_eq!(step.lifted.u3().values(), lf.u3().values());
        for (a, b) in step.lifted.theta().values().iter().zip(lf.theta().values()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(iterate_once(&lf, 0.0, 1.5).is_err());
    }

    #[test]
    fn sources_of_trivial_vanish() {
        let g = Grid::plane([16, 16], [10.0, 10.0]).unwrap();
        let src = compute_fg(&LiftedField::trivial(&g, 0.5)).unwrap();
        assert!(src.f.max_abs() < 1e-14);
        assert!(src.g.iter().all(|g| g.max_abs() < 1e-14));
    }

    #[test]
    fn initial_guess_amplitude() {
        let g = Grid::plane([64, 64], [80.0, 80.0]).unwrap();
        let lf = initial_guess(0.8, &g, InitialKind::Bump, 0.3).unwrap();
        assert!((lf.u3().max_abs() - 0.36 * 0.3).abs() < 1e-12);
        assert!(initial_guess(0.8, &g, InitialKind::Bump, 0.6).is_err());
        assert!(initial_guess(0.8, &g, InitialKind::Bump, 0.0).is_err());
    }

    #[test]
    fn continuation_speed_grid() {
        assert_eq!(continuation_speeds(0.9, 0.8, 1), vec![0.9]);
        let s = continuation_speeds(0.9, 0.8, 3);
        assert!((s[1] - 0.85).abs() < 1e-15 && s[2] == 0.8);
    }
}
