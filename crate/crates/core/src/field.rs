//! Unit-vector fields on a grid and their polar (lifted) form.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{complex_gradient, derivative_of_spectrum, has_half_twist, Grid, ScalarSamples, Spectrum};

/// Default distance kept between `max|u3|` and 1 for a lifting to exist.
pub const DEFAULT_MARGIN: f64 = 1e-3;

/// A map into the unit sphere sampled on a grid, moving with speed `c`.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Grid,
    c: f64,
    u: [ScalarSamples; 3],
}

/// First and pure second derivatives of every component, indexed
/// `[axis][component]`.
#[derive(Clone, Debug)]
pub struct Derivatives {
    pub first: Vec<[ScalarSamples; 3]>,
    pub second: Vec<[ScalarSamples; 3]>,
}

impl Field {
    pub fn new(c: f64, u1: ScalarSamples, u2: ScalarSamples, u3: ScalarSamples) -> Result<Self> {
        let grid = u1.grid().clone();
        if u2.grid() != &grid || u3.grid() != &grid {
            return Err(Error::GridMismatch("field components on different grids".into()));
        }
        if !c.is_finite() {
            return Err(Error::SpeedOutOfRange { c, range: "finite" });
        }
        Ok(Field {
            grid,
            c,
            u: [u1, u2, u3],
        })
    }

    /// The constant solution `(0, 1, 0)`.
    pub fn trivial(grid: &Grid, c: f64) -> Self {
        Field {
            grid: grid.clone(),
            c,
            u: [
                ScalarSamples::zeros(grid),
                ScalarSamples::constant(grid, 1.0),
                ScalarSamples::zeros(grid),
            ],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn with_speed(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn components(&self) -> &[ScalarSamples; 3] {
        &self.u
    }

    pub fn u1(&self) -> &ScalarSamples {
        &self.u[0]
    }

    pub fn u2(&self) -> &ScalarSamples {
        &self.u[1]
    }

    pub fn u3(&self) -> &ScalarSamples {
        &self.u[2]
    }

    /// Largest deviation of `|u|` from 1 over the nodes.
    pub fn norm_defect(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| (self.norm_at(i) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    fn norm_at(&self, i: usize) -> f64 {
        let [a, b, c] = &self.u;
        (a.values()[i].powi(2) + b.values()[i].powi(2) + c.values()[i].powi(2)).sqrt()
    }

    /// Projects every node back onto the sphere. Nodes with `|u| = 0` are
    /// left alone.
    pub fn renormalize(&mut self) {
        for i in 0..self.grid.len() {
            let r = self.norm_at(i);
            if r > 0.0 {
                for comp in self.u.iter_mut() {
                    comp.values_mut()[i] /= r;
                }
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().all(|s| s.values().iter().all(|v| v.is_finite()))
    }

    /// In-plane part `u1 + i u2`.
    pub fn planar(&self) -> Vec<Complex64> {
        self.u[0]
            .values()
            .iter()
            .zip(self.u[1].values())
            .map(|(&a, &b)| Complex64::new(a, b))
            .collect()
    }

    /// Per axis, whether the in-plane part flips sign across the box.
    pub fn half_twists(&self) -> [bool; 2] {
        let planar = self.planar();
        let mut out = [false; 2];
        for (axis, flag) in out.iter_mut().enumerate().take(self.grid.dim()) {
            *flag = has_half_twist(&self.grid, &planar, axis);
        }
        out
    }

    /// Rotation of the in-plane part by `phi`.
    pub fn rotated(&self, phi: f64) -> Field {
        let (s, c) = phi.sin_cos();
        let u1 = self.u[0].zip_with(&self.u[1], |a, b| c * a - s * b);
        let u2 = self.u[0].zip_with(&self.u[1], |a, b| s * a + c * b);
        Field {
            grid: self.grid.clone(),
            c: self.c,
            u: [u1, u2, self.u[2].clone()],
        }
    }

    /// Translation by whole grid steps, continued periodically (with a sign
    /// change of the in-plane part across half-twisted axes).
    pub fn translated(&self, shift: [i64; 2]) -> Field {
        let g = &self.grid;
        let twists = self.half_twists();
        let shift_one = |s: &ScalarSamples, twisted: bool| {
            let src = s.values();
            let values = (0..g.len())
                .map(|i| {
                    let (ix, iy) = g.split_index(i);
                    let mut flips = 0;
                    let mut source = [0usize; 2];
                    for (axis, idx) in [ix, iy].into_iter().enumerate().take(g.dim()) {
                        let n = g.n(axis) as i64;
                        let j = idx as i64 - shift[axis];
                        source[axis] = j.rem_euclid(n) as usize;
                        if twists[axis] {
                            flips += j.div_euclid(n);
                        }
                    }
                    let v = src[g.index(source[0], source[1])];
                    if twisted && flips.rem_euclid(2) == 1 {
                        -v
                    } else {
                        v
                    }
                })
                .collect();
            ScalarSamples::new(g.clone(), values).expect("same grid")
        };
        Field {
            grid: g.clone(),
            c: self.c,
            u: [
                shift_one(&self.u[0], true),
                shift_one(&self.u[1], true),
                shift_one(&self.u[2], false),
            ],
        }
    }

    /// `(u1, u2, -u3)(-x)`, the reflected solution.
    ///
    /// The mirror of the first node along an axis is the node one period
    /// away, so half-twisted in-plane components pick up a sign there.
    pub fn reflected(&self) -> Field {
        let g = &self.grid;
        let twists = self.half_twists();
        let mirror = |s: &ScalarSamples, sign: f64, twisted: bool| {
            let src = s.values();
            let values = (0..g.len())
                .map(|i| {
                    let (ix, iy) = g.split_index(i);
                    let jx = (g.n(0) - ix) % g.n(0);
                    let jy = (g.n(1) - iy) % g.n(1);
                    let mut v = sign * src[g.index(jx, jy)];
                    if twisted && ((twists[0] && ix == 0) != (g.dim() == 2 && twists[1] && iy == 0)) {
                        v = -v;
                    }
                    v
                })
                .collect();
            ScalarSamples::new(g.clone(), values).expect("same grid")
        };
        Field {
            grid: g.clone(),
            c: self.c,
            u: [
                mirror(&self.u[0], 1.0, true),
                mirror(&self.u[1], 1.0, true),
                mirror(&self.u[2], -1.0, false),
            ],
        }
    }

    /// Spectral first and second derivatives. The in-plane part is
    /// differentiated on a half-shifted lattice along axes where it flips
    /// sign across the box.
    pub fn derivatives(&self) -> Result<Derivatives> {
        let g = &self.grid;
        let planar = self.planar();
        let twists = self.half_twists();
        let u3_spec = Spectrum::of(&self.u[2]);
        let mut first = Vec::with_capacity(g.dim());
        let mut second = Vec::with_capacity(g.dim());
        for (axis, &twisted) in twists.iter().enumerate().take(g.dim()) {
            let d1 = complex_gradient(g, &planar, axis, twisted)?;
            let d2 = complex_gradient(g, &d1, axis, twisted)?;
            let d3 = derivative_of_spectrum(&u3_spec, axis);
            let dd3 = derivative_of_spectrum(&d3, axis);
            let split = |d: &[Complex64]| {
                let re = d.iter().map(|z| z.re).collect();
                let im = d.iter().map(|z| z.im).collect();
                (
                    ScalarSamples::new(g.clone(), re).expect("same grid"),
                    ScalarSamples::new(g.clone(), im).expect("same grid"),
                )
            };
            let (a1, a2) = split(&d1);
            let (b1, b2) = split(&d2);
            first.push([a1, a2, d3.to_real()]);
            second.push([b1, b2, dd3.to_real()]);
        }
        Ok(Derivatives { first, second })
    }

    /// First derivatives only, indexed `[axis][component]`.
    pub fn gradients(&self) -> Result<Vec<[ScalarSamples; 3]>> {
        let g = &self.grid;
        let planar = self.planar();
        let twists = self.half_twists();
        let u3_spec = Spectrum::of(&self.u[2]);
        (0..g.dim())
            .map(|axis| {
                let d1 = complex_gradient(g, &planar, axis, twists[axis])?;
                let re = d1.iter().map(|z| z.re).collect();
                let im = d1.iter().map(|z| z.im).collect();
                Ok([
                    ScalarSamples::new(g.clone(), re)?,
                    ScalarSamples::new(g.clone(), im)?,
                    derivative_of_spectrum(&u3_spec, axis).to_real(),
                ])
            })
            .collect()
    }
}

/// `e(u) = ½(|∇u|² + u3²)` from precomputed gradients.
pub fn energy_density_from(u3: &ScalarSamples, grads: &[[ScalarSamples; 3]]) -> ScalarSamples {
    let mut e = u3.map(|v| 0.5 * v * v);
    for axis in grads {
        for comp in axis {
            for (acc, d) in e.values_mut().iter_mut().zip(comp.values()) {
                *acc += 0.5 * d * d;
            }
        }
    }
    e
}

/// Polar form `u1 + i u2 = ϱ e^{iθ}`, `ϱ = √(1 - u3²)`.
///
/// `winding[a]` counts half turns of `θ` across the box along axis `a`:
/// `θ(x + L_a e_a) = θ(x) + winding[a]·π`. The derivative of `θ` is taken
/// spectrally on `θ` minus the matching linear ramp.
#[derive(Clone, Debug)]
pub struct LiftedField {
    grid: Grid,
    c: f64,
    u3: ScalarSamples,
    theta: ScalarSamples,
    winding: [i64; 2],
    margin: f64,
}

impl LiftedField {
    /// Builds a lifted field, reading the winding off the phase samples.
    pub fn new(c: f64, u3: ScalarSamples, theta: ScalarSamples, margin: f64) -> Result<Self> {
        let winding = detect_winding(&theta);
        Self::with_winding(c, u3, theta, winding, margin)
    }

    pub fn with_winding(
        c: f64,
        u3: ScalarSamples,
        theta: ScalarSamples,
        winding: [i64; 2],
        margin: f64,
    ) -> Result<Self> {
        if u3.grid() != theta.grid() {
            return Err(Error::GridMismatch("u3 and theta on different grids".into()));
        }
        if !(0.0..1.0).contains(&margin) {
            return Err(Error::InvalidArgument(format!("margin {margin} not in [0, 1)")));
        }
        let max_u3 = u3.max_abs();
        if !(max_u3 <= 1.0 - margin) {
            return Err(Error::VortexPresent {
                max_u3,
                limit: 1.0 - margin,
            });
        }
        Ok(LiftedField {
            grid: u3.grid().clone(),
            c,
            u3,
            theta,
            winding,
            margin,
        })
    }

    pub fn trivial(grid: &Grid, c: f64) -> Self {
        LiftedField {
            grid: grid.clone(),
            c,
            u3: ScalarSamples::zeros(grid),
            theta: ScalarSamples::constant(grid, PI / 2.0),
            winding: [0, 0],
            margin: DEFAULT_MARGIN,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn u3(&self) -> &ScalarSamples {
        &self.u3
    }

    pub fn theta(&self) -> &ScalarSamples {
        &self.theta
    }

    pub fn winding(&self) -> [i64; 2] {
        self.winding
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn with_speed(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn rho(&self) -> ScalarSamples {
        self.u3.map(|v| (1.0 - v * v).max(0.0).sqrt())
    }

    /// `(ϱ cos θ, ϱ sin θ, u3)`.
    pub fn reconstruct(&self) -> Field {
        let rho = self.rho();
        let u1 = rho.zip_with(&self.theta, |r, t| r * t.cos());
        let u2 = rho.zip_with(&self.theta, |r, t| r * t.sin());
        Field {
            grid: self.grid.clone(),
            c: self.c,
            u: [u1, u2, self.u3.clone()],
        }
    }

    /// Linear ramp carrying the winding, zero at the first node.
    pub fn ramp(&self) -> ScalarSamples {
        ramp(&self.grid, self.winding)
    }

    /// The periodic part `θ - ramp`.
    pub fn theta_periodic(&self) -> ScalarSamples {
        self.theta.zip_with(&self.ramp(), |a, b| a - b)
    }

    /// `∂_a θ` for every axis.
    pub fn theta_gradient(&self) -> Vec<ScalarSamples> {
        let spec = Spectrum::of(&self.theta_periodic());
        (0..self.grid.dim())
            .map(|axis| {
                let slope = self.winding[axis] as f64 * PI / self.grid.length(axis);
                derivative_of_spectrum(&spec, axis).to_real().map(|v| v + slope)
            })
            .collect()
    }

    /// Same field with `θ + shift`.
    pub fn phase_shifted(&self, shift: f64) -> LiftedField {
        let mut out = self.clone();
        out.theta = self.theta.map(|t| t + shift);
        out
    }
}

pub(crate) fn ramp(grid: &Grid, winding: [i64; 2]) -> ScalarSamples {
    ScalarSamples::from_fn(grid, |x| {
        (0..grid.dim())
            .map(|a| {
                let offset = x[a] + 0.5 * grid.length(a);
                winding[a] as f64 * PI * offset / grid.length(a)
            })
            .sum()
    })
}

/// Half turns of `θ` across the box per axis, from the mean end-to-end
/// increment along grid lines.
pub fn detect_winding(theta: &ScalarSamples) -> [i64; 2] {
    let g = theta.grid();
    let v = theta.values();
    let mut out = [0i64; 2];
    for (axis, w) in out.iter_mut().enumerate().take(g.dim()) {
        let (lines, last) = if axis == 0 {
            (g.n(1), g.n(0) - 1)
        } else {
            (g.n(0), g.n(1) - 1)
        };
        let total: f64 = (0..lines)
            .map(|j| {
                let (a, b) = if axis == 0 {
                    (g.index(0, j), g.index(last, j))
                } else {
                    (g.index(j, 0), g.index(j, last))
                };
                v[b] - v[a]
            })
            .sum();
        *w = (total / lines as f64 / PI).round() as i64;
    }
    out
}

fn wrap(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r == -PI {
        PI
    } else {
        r
    }
}

/// Polar lifting of a vortexless field.
///
/// The phase is unwrapped along the first grid row and then up every
/// column by nearest-branch continuation. Every interior plaquette must
/// carry zero winding.
pub fn lifting(field: &Field, margin: f64) -> Result<LiftedField> {
    let g = field.grid();
    let max_u3 = field.u3().max_abs();
    if !(max_u3 <= 1.0 - margin) {
        return Err(Error::VortexPresent {
            max_u3,
            limit: 1.0 - margin,
        });
    }
    let args: Vec<f64> = field.planar().iter().map(|z| z.arg()).collect();
    let (nx, ny) = (g.n(0), g.n(1));
    let mut theta = vec![0.0; g.len()];
    theta[0] = args[0];
    for ix in 1..nx {
        let prev = theta[ix - 1];
        theta[ix] = prev + wrap(args[ix] - prev);
    }
    for iy in 1..ny {
        for ix in 0..nx {
            let prev = theta[g.index(ix, iy - 1)];
            let i = g.index(ix, iy);
            theta[i] = prev + wrap(args[i] - prev);
        }
    }
    if g.dim() == 2 {
        for iy in 0..ny - 1 {
            for ix in 0..nx - 1 {
                let a = args[g.index(ix, iy)];
                let b = args[g.index(ix + 1, iy)];
                let c = args[g.index(ix + 1, iy + 1)];
                let d = args[g.index(ix, iy + 1)];
                let circ = wrap(b - a) + wrap(c - b) + wrap(d - c) + wrap(a - d);
                if circ.abs() > PI {
                    return Err(Error::Unwrap(format!(
                        "nonzero winding around the cell at ({ix}, {iy})"
                    )));
                }
            }
        }
    }
    let theta = ScalarSamples::new(g.clone(), theta)?;
    let winding = detect_winding(&theta);
    let twists = field.half_twists();
    for axis in 0..g.dim() {
        if (winding[axis].rem_euclid(2) == 1) != twists[axis] {
            return Err(Error::Unwrap(format!(
                "phase turns {} half-turns along axis {axis}, inconsistent with the boundary values",
                winding[axis]
            )));
        }
    }
    LiftedField::with_winding(field.c(), field.u3().clone(), theta, winding, margin)
}
