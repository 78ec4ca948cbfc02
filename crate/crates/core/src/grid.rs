//! Uniform periodic grids and the pseudo-spectral toolbox built on them.
//!
//! Samples are stored row-major with the first axis fastest, so the node
//! `(ix, iy)` lives at `iy * nx + ix`. Node coordinates span
//! `[-L/2, L/2)` on every axis. Wavenumbers follow the usual DFT ordering
//! `0, 1, .., n/2 - 1, -n/2, .., -1` scaled by `2π/L`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Below this many nodes the row transforms run serially.
const PARALLEL_THRESHOLD: usize = 1 << 14;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if forward {
            p.plan_fft_forward(n)
        } else {
            p.plan_fft_inverse(n)
        }
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    n: [usize; 2],
    length: [f64; 2],
}

impl Grid {
    /// Builds a 1D or 2D grid. Every axis needs an even point count of at
    /// least 8 and a positive, finite period.
    pub fn new(dim: usize, n: &[usize], length: &[f64]) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{1, 2}}")));
        }
        if n.len() != dim || length.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "expected {dim} point counts and lengths, got {} and {}",
                n.len(),
                length.len()
            )));
        }
        for axis in 0..dim {
            if n[axis] < 8 || !n[axis].is_multiple_of(2) {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: n = {} must be even and >= 8",
                    n[axis]
                )));
            }
            if !(length[axis] > 0.0 && length[axis].is_finite()) {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: length = {} must be positive",
                    length[axis]
                )));
            }
        }
        let mut grid = Grid {
            dim,
            n: [1, 1],
            length: [1.0, 1.0],
        };
        grid.n[..dim].copy_from_slice(n);
        grid.length[..dim].copy_from_slice(length);
        Ok(grid)
    }

    pub fn line(n: usize, length: f64) -> Result<Self> {
        Self::new(1, &[n], &[length])
    }

    pub fn plane(n: [usize; 2], length: [f64; 2]) -> Result<Self> {
        Self::new(2, &n, &length)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self, axis: usize) -> usize {
        self.n[axis]
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.length[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.length[axis] / self.n[axis] as f64
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of a single node (product of spacings).
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).product()
    }

    pub fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.dim {
            Err(Error::AxisOutOfRange { axis, dim: self.dim })
        } else {
            Ok(())
        }
    }

    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        -0.5 * self.length[axis] + i as f64 * self.spacing(axis)
    }

    pub fn coordinates(&self, axis: usize) -> Vec<f64> {
        (0..self.n[axis]).map(|i| self.coordinate(axis, i)).collect()
    }

    /// Signed DFT index for position `i` on `axis`.
    pub fn mode_index(&self, axis: usize, i: usize) -> i64 {
        let n = self.n[axis];
        if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    pub fn wavenumber(&self, axis: usize, i: usize) -> f64 {
        2.0 * PI * self.mode_index(axis, i) as f64 / self.length[axis]
    }

    pub fn wavenumbers(&self, axis: usize) -> Vec<f64> {
        (0..self.n[axis]).map(|i| self.wavenumber(axis, i)).collect()
    }

    pub fn is_nyquist(&self, axis: usize, i: usize) -> bool {
        i == self.n[axis] / 2
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.n[0] + ix
    }

    /// `(ix, iy)` of a flat index; `iy` is 0 on 1D grids.
    pub fn split_index(&self, idx: usize) -> (usize, usize) {
        (idx % self.n[0], idx / self.n[0])
    }

    /// Physical position of a node; the second entry is 0 on 1D grids.
    pub fn position(&self, idx: usize) -> [f64; 2] {
        let (ix, iy) = self.split_index(idx);
        let y = if self.dim == 2 { self.coordinate(1, iy) } else { 0.0 };
        [self.coordinate(0, ix), y]
    }

    /// Wavevector of a flat spectral index; the second entry is 0 on 1D grids.
    pub fn wavevector(&self, idx: usize) -> [f64; 2] {
        let (ix, iy) = self.split_index(idx);
        let k1 = if self.dim == 2 { self.wavenumber(1, iy) } else { 0.0 };
        [self.wavenumber(0, ix), k1]
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self == other
    }

    /// Forward DFT in place (unnormalized).
    pub fn fft_forward(&self, data: &mut [Complex64]) {
        self.transform(data, true);
    }

    /// Inverse DFT in place, normalized by `1/len`.
    pub fn fft_inverse(&self, data: &mut [Complex64]) {
        self.transform(data, false);
        let scale = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }

    fn transform(&self, data: &mut [Complex64], forward: bool) {
        assert_eq!(data.len(), self.len(), "buffer does not match grid");
        let nx = self.n[0];
        let fft_x = plan(nx, forward);
        transform_rows(data, nx, &fft_x);
        if self.dim == 2 {
            let ny = self.n[1];
            let fft_y = plan(ny, forward);
            let mut t = transpose(data, nx, ny);
            transform_rows(&mut t, ny, &fft_y);
            let back = transpose(&t, ny, nx);
            data.copy_from_slice(&back);
        }
    }
}

fn transform_rows(data: &mut [Complex64], row: usize, fft: &Arc<dyn Fft<f64>>) {
    let scratch_len = fft.get_inplace_scratch_len();
    if data.len() >= PARALLEL_THRESHOLD && data.len() > row {
        data.par_chunks_mut(row).for_each_init(
            || vec![Complex64::new(0.0, 0.0); scratch_len],
            |scratch, chunk| fft.process_with_scratch(chunk, scratch),
        );
    } else {
        let mut scratch = vec![Complex64::new(0.0, 0.0); scratch_len];
        fft.process_with_scratch(data, &mut scratch);
    }
}

/// Transposes a `rows x cols` row-major block (rows of length `cols`).
fn transpose(data: &[Complex64], cols: usize, rows: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    const B: usize = 32;
    for rb in (0..rows).step_by(B) {
        for cb in (0..cols).step_by(B) {
            for r in rb..(rb + B).min(rows) {
                for c in cb..(cb + B).min(cols) {
                    out[c * rows + r] = data[r * cols + c];
                }
            }
        }
    }
    out
}

/// Real samples on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarSamples {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarSamples {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(ScalarSamples { grid, values })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        ScalarSamples {
            grid: grid.clone(),
            values: vec![value; grid.len()],
        }
    }

    /// Samples `f` at every node position (`[x, 0]` on 1D grids).
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.position(i))).collect();
        ScalarSamples {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarSamples {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &ScalarSamples, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid, "samples on different grids");
        ScalarSamples {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Discrete L2 norm, `sqrt(sum v^2 * cell)`.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect()
    }
}

/// Fourier coefficients of samples on a grid (unnormalized DFT).
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn of(s: &ScalarSamples) -> Self {
        let mut coeffs = s.to_complex();
        s.grid.fft_forward(&mut coeffs);
        Spectrum {
            grid: s.grid.clone(),
            coeffs,
        }
    }

    pub fn of_complex(grid: &Grid, values: &[Complex64]) -> Self {
        let mut coeffs = values.to_vec();
        grid.fft_forward(&mut coeffs);
        Spectrum {
            grid: grid.clone(),
            coeffs,
        }
    }

    pub fn from_coefficients(grid: &Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::GridMismatch("coefficient count".into()));
        }
        Ok(Spectrum {
            grid: grid.clone(),
            coeffs,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Multiplies every coefficient by `f(index, wavevector)`.
    pub fn scale_by(&mut self, f: impl Fn(usize, [f64; 2]) -> Complex64 + Sync) {
        let grid = &self.grid;
        self.coeffs
            .par_iter_mut()
            .with_min_len(4096)
            .enumerate()
            .for_each(|(i, c)| *c *= f(i, grid.wavevector(i)));
    }

    pub fn scaled(&self, f: impl Fn(usize, [f64; 2]) -> Complex64 + Sync) -> Self {
        let mut out = self.clone();
        out.scale_by(f);
        out
    }

    pub fn inverse_complex(&self) -> Vec<Complex64> {
        let mut data = self.coeffs.clone();
        self.grid.fft_inverse(&mut data);
        data
    }

    /// Inverse transform keeping the real part.
    pub fn to_real(&self) -> ScalarSamples {
        let data = self.inverse_complex();
        ScalarSamples {
            grid: self.grid.clone(),
            values: data.into_iter().map(|z| z.re).collect(),
        }
    }

    /// Evaluates the trigonometric interpolant of the underlying samples at
    /// an arbitrary point.
    pub fn interpolate(&self, point: [f64; 2]) -> Complex64 {
        let g = &self.grid;
        let phases = |axis: usize| -> Vec<Complex64> {
            let dx = point[axis] + 0.5 * g.length(axis);
            (0..g.n(axis))
                .map(|i| {
                    if g.is_nyquist(axis, i) {
                        // split the unpaired mode symmetrically
                        Complex64::new((g.wavenumber(axis, i) * dx).cos(), 0.0)
                    } else {
                        Complex64::from_polar(1.0, g.wavenumber(axis, i) * dx)
                    }
                })
                .collect()
        };
        let px = phases(0);
        let py = if g.dim() == 2 {
            phases(1)
        } else {
            vec![Complex64::new(1.0, 0.0)]
        };
        let nx = g.n(0);
        let total: Complex64 = py
            .par_iter()
            .enumerate()
            .map(|(iy, &fy)| {
                let row = &self.coeffs[iy * nx..(iy + 1) * nx];
                row.iter().zip(&px).map(|(c, &fx)| c * fx).sum::<Complex64>() * fy
            })
            .sum();
        total / g.len() as f64
    }
}

/// Fourier multiplier evaluated at nonzero lattice frequencies.
pub trait Symbol {
    /// Rejects parameter choices for which the symbol is singular.
    fn validate(&self) -> Result<()> {
        Ok(())
    }

    /// Value at a nonzero frequency; `xi` has one entry per grid axis.
    fn eval(&self, xi: &[f64]) -> f64;
}

impl<F> Symbol for F
where
    F: Fn(&[f64]) -> f64,
{
    fn eval(&self, xi: &[f64]) -> f64 {
        self(xi)
    }
}

/// Derivative along `axis` by multiplication with `i ξ_axis`; the Nyquist
/// mode is dropped so real input stays real.
pub fn spectral_gradient(s: &ScalarSamples, axis: usize) -> Result<ScalarSamples> {
    s.grid.check_axis(axis)?;
    let spec = Spectrum::of(s);
    Ok(derivative_of_spectrum(&spec, axis).to_real())
}

/// All first derivatives of `s` from a single forward transform.
pub fn spectral_gradients(s: &ScalarSamples) -> Vec<ScalarSamples> {
    let spec = Spectrum::of(s);
    (0..s.grid.dim())
        .map(|axis| derivative_of_spectrum(&spec, axis).to_real())
        .collect()
}

pub(crate) fn derivative_of_spectrum(spec: &Spectrum, axis: usize) -> Spectrum {
    let g = spec.grid.clone();
    spec.scaled(move |i, xi| {
        let (ix, iy) = g.split_index(i);
        let pos = if axis == 0 { ix } else { iy };
        if g.is_nyquist(axis, pos) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, xi[axis])
        }
    })
}

/// Derivative of complex samples that are periodic up to a factor `-1`
/// along `axis` when `half_twist` is set (the in-plane part of a field whose
/// phase turns by π across the box). The samples are untwisted by
/// `exp(-iπ(x - x0)/L)`, differentiated on the shifted lattice
/// `ξ + π/L`, and twisted back.
pub fn complex_gradient(grid: &Grid, values: &[Complex64], axis: usize, half_twist: bool) -> Result<Vec<Complex64>> {
    grid.check_axis(axis)?;
    if values.len() != grid.len() {
        return Err(Error::GridMismatch("complex samples".into()));
    }
    if !half_twist {
        let spec = Spectrum::of_complex(grid, values);
        return Ok(derivative_of_spectrum(&spec, axis).inverse_complex());
    }
    let n = grid.n(axis) as f64;
    let twist = |idx: usize, sign: f64| {
        let (ix, iy) = grid.split_index(idx);
        let pos = if axis == 0 { ix } else { iy } as f64;
        Complex64::from_polar(1.0, sign * PI * pos / n)
    };
    let untwisted: Vec<Complex64> = values.iter().enumerate().map(|(i, v)| v * twist(i, -1.0)).collect();
    let shift = PI / grid.length(axis);
    let spec = Spectrum::of_complex(grid, &untwisted).scaled(move |_, xi| Complex64::new(0.0, xi[axis] + shift));
    let mut out = spec.inverse_complex();
    out.iter_mut().enumerate().for_each(|(i, v)| *v *= twist(i, 1.0));
    Ok(out)
}

/// Derivative of a real function that changes sign across the period
/// (e.g. `tanh` on a symmetric box).
pub fn spectral_gradient_antiperiodic(s: &ScalarSamples, axis: usize) -> Result<ScalarSamples> {
    let d = complex_gradient(&s.grid, &s.to_complex(), axis, true)?;
    ScalarSamples::new(s.grid.clone(), d.into_iter().map(|z| z.re).collect())
}

/// Whether complex samples change sign across the period along `axis`,
/// judged by the summed overlap of the first and last node of every line.
pub fn has_half_twist(grid: &Grid, values: &[Complex64], axis: usize) -> bool {
    let (n_along, n_across) = if axis == 0 {
        (grid.n(0), grid.n(1))
    } else {
        (grid.n(1), grid.n(0))
    };
    let node = |along: usize, across: usize| {
        if axis == 0 {
            grid.index(along, across)
        } else {
            grid.index(across, along)
        }
    };
    let overlap: f64 = (0..n_across)
        .map(|j| (values[node(0, j)] * values[node(n_along - 1, j)].conj()).re)
        .sum();
    overlap < 0.0
}

/// Rectangle-rule integral over the periodic box.
pub fn integrate(s: &ScalarSamples) -> f64 {
    s.values.iter().sum::<f64>() * s.grid.cell_volume()
}

/// Applies a Fourier multiplier; the zero mode of the product is set to 0.
pub fn apply_multiplier(s: &ScalarSamples, m: &impl Symbol) -> Result<ScalarSamples> {
    Ok(multiply_spectrum(&Spectrum::of(s), m)?.to_real())
}

pub fn multiply_spectrum(spec: &Spectrum, m: &impl Symbol) -> Result<Spectrum> {
    m.validate()?;
    let dim = spec.grid.dim();
    let mut out = spec.clone();
    for (i, c) in out.coeffs.iter_mut().enumerate() {
        if i == 0 {
            *c = Complex64::new(0.0, 0.0);
        } else {
            let xi = spec.grid.wavevector(i);
            *c *= m.eval(&xi[..dim]);
        }
    }
    Ok(out)
}

/// Least-squares antigradient: the mean-zero `θ` minimizing `|∇θ - v|` in
/// L2, i.e. `θ̂ = -i ξ·v̂ / |ξ|²` away from the zero mode.
pub fn antigradient(components: &[&ScalarSamples]) -> Result<ScalarSamples> {
    let grid = components
        .first()
        .ok_or_else(|| Error::InvalidArgument("antigradient of nothing".into()))?
        .grid()
        .clone();
    if components.len() != grid.dim() || components.iter().any(|c| c.grid() != &grid) {
        return Err(Error::GridMismatch("antigradient components".into()));
    }
    let specs: Vec<Spectrum> = components.iter().map(|c| Spectrum::of(c)).collect();
    let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (axis, spec) in specs.iter().enumerate() {
        for (i, a) in acc.iter_mut().enumerate() {
            let (ix, iy) = grid.split_index(i);
            let pos = if axis == 0 { ix } else { iy };
            if i == 0 || grid.is_nyquist(axis, pos) {
                continue;
            }
            let xi = grid.wavevector(i);
            let k2 = xi[0] * xi[0] + xi[1] * xi[1];
            *a += Complex64::new(0.0, -xi[axis] / k2) * spec.coeffs[i];
        }
    }
    Ok(Spectrum::from_coefficients(&grid, acc)?.to_real())
}

/// Bilinear interpolation of 2D samples at a point, with periodic wrap.
pub fn bilinear(s: &ScalarSamples, point: [f64; 2]) -> f64 {
    let g = &s.grid;
    let locate = |axis: usize| {
        let n = g.n(axis);
        let t = (point[axis] + 0.5 * g.length(axis)) / g.spacing(axis);
        let i0 = t.floor();
        let frac = t - i0;
        let i0 = (i0 as i64).rem_euclid(n as i64) as usize;
        (i0, (i0 + 1) % n, frac)
    };
    let (x0, x1, fx) = locate(0);
    if g.dim() == 1 {
        return s.values[x0] * (1.0 - fx) + s.values[x1] * fx;
    }
    let (y0, y1, fy) = locate(1);
    let v = |ix, iy| s.values[g.index(ix, iy)];
    (1.0 - fy) * ((1.0 - fx) * v(x0, y0) + fx * v(x1, y0)) + fy * ((1.0 - fx) * v(x0, y1) + fx * v(x1, y1))
}

/// Tensor-product cubic (4-point Lagrange) interpolation of 2D samples,
/// with periodic wrap.
pub fn bicubic(s: &ScalarSamples, point: [f64; 2]) -> f64 {
    let g = &s.grid;
    let stencil = |axis: usize| {
        let n = g.n(axis) as i64;
        let t = (point[axis] + 0.5 * g.length(axis)) / g.spacing(axis);
        let base = t.floor();
        let u = t - base;
        let w = [
            -u * (u - 1.0) * (u - 2.0) / 6.0,
            (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0,
            -(u + 1.0) * u * (u - 2.0) / 2.0,
            (u + 1.0) * u * (u - 1.0) / 6.0,
        ];
        let idx = [-1i64, 0, 1, 2].map(|o| (base as i64 + o).rem_euclid(n) as usize);
        (idx, w)
    };
    let (ix, wx) = stencil(0);
    if g.dim() == 1 {
        return (0..4).map(|a| wx[a] * s.values[ix[a]]).sum();
    }
    let (iy, wy) = stencil(1);
    let mut acc = 0.0;
    for b in 0..4 {
        let row: f64 = (0..4).map(|a| wx[a] * s.values[g.index(ix[a], iy[b])]).sum();
        acc += wy[b] * row;
    }
    acc
}
