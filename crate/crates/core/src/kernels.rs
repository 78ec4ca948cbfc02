//! Fourier multipliers of the convolution form of the traveling-wave
//! equation, their far-field limits, and physical-space kernels.
//!
//! With `D_c(ξ) = |ξ|⁴ + |ξ|² - c²ξ₁²` the symbols are
//!
//! * `Lc`   : `|ξ|² / D_c`
//! * `Lcj`  : `ξ₁ξ_j / D_c`
//! * `Tcjk` : `ξ₁²ξ_jξ_k / (|ξ|² D_c)`
//! * `Rjk`  : `ξ_jξ_k / |ξ|²`
//!
//! Axis indices `j, k` are 1-based.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{annulus_profile, log_log_fit, log_spaced, PowerFit};
use crate::grid::{bicubic, Grid, ScalarSamples, Spectrum, Symbol};
use crate::special::{gamma, integrate_gl};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum KernelKind {
    Lc,
    Lcj,
    Tcjk,
    Rjk,
}

impl KernelKind {
    pub fn uses_speed(self) -> bool {
        self != KernelKind::Rjk
    }

    /// How many axis indices the kind takes.
    pub fn index_count(self) -> usize {
        match self {
            KernelKind::Lc => 0,
            KernelKind::Lcj => 1,
            KernelKind::Tcjk | KernelKind::Rjk => 2,
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            KernelKind::Lc => "Lc",
            KernelKind::Lcj => "Lcj",
            KernelKind::Tcjk => "Tcjk",
            KernelKind::Rjk => "Rjk",
        };
        f.write_str(s)
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lc" => Ok(KernelKind::Lc),
            "lcj" => Ok(KernelKind::Lcj),
            "tcjk" => Ok(KernelKind::Tcjk),
            "rjk" => Ok(KernelKind::Rjk),
            _ => Err(Error::InvalidArgument(format!(
                "unknown kernel kind {s:?} (expected Lc, Lcj, Tcjk or Rjk)"
            ))),
        }
    }
}

/// One member of the symbol families, with its speed and 1-based indices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelSymbol {
    pub kind: KernelKind,
    pub c: f64,
    pub j: usize,
    pub k: usize,
    pub dim: usize,
}

impl KernelSymbol {
    pub fn new(kind: KernelKind, c: f64, j: usize, k: usize, dim: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidArgument(format!("dimension {dim} not in {{1, 2}}")));
        }
        let needed = kind.index_count();
        for (name, idx, used) in [("j", j, needed >= 1), ("k", k, needed >= 2)] {
            if used && !(1..=dim).contains(&idx) {
                return Err(Error::InvalidArgument(format!("index {name} = {idx} not in 1..={dim}")));
            }
        }
        if kind.uses_speed() {
            check_elliptic(c)?;
        }
        Ok(KernelSymbol { kind, c, j, k, dim })
    }

    pub fn lc(c: f64, dim: usize) -> Result<Self> {
        Self::new(KernelKind::Lc, c, 1, 1, dim)
    }

    pub fn lcj(c: f64, j: usize, dim: usize) -> Result<Self> {
        Self::new(KernelKind::Lcj, c, j, 1, dim)
    }

    pub fn tcjk(c: f64, j: usize, k: usize, dim: usize) -> Result<Self> {
        Self::new(KernelKind::Tcjk, c, j, k, dim)
    }

    pub fn rjk(j: usize, k: usize, dim: usize) -> Result<Self> {
        Self::new(KernelKind::Rjk, 0.0, j, k, dim)
    }

    /// Value at `ξ ≠ 0` without argument checks.
    pub fn value(&self, xi: &[f64]) -> f64 {
        let x2: f64 = xi.iter().map(|v| v * v).sum();
        let d = || x2 * x2 + x2 - self.c * self.c * xi[0] * xi[0];
        let (j, k) = (self.j - 1, self.k.max(1) - 1);
        match self.kind {
            KernelKind::Lc => x2 / d(),
            KernelKind::Lcj => xi[0] * xi[j] / d(),
            KernelKind::Tcjk => xi[0] * xi[0] * xi[j] * xi[k] / (x2 * d()),
            KernelKind::Rjk => xi[j] * xi[k] / x2,
        }
    }
}

impl Symbol for KernelSymbol {
    fn validate(&self) -> Result<()> {
        if self.kind.uses_speed() {
            check_elliptic(self.c).map_err(|_| {
                Error::SingularSymbol(format!("{} with c = {} > 1 vanishes on the lattice", self.kind, self.c))
            })
        } else {
            Ok(())
        }
    }

    fn eval(&self, xi: &[f64]) -> f64 {
        self.value(xi)
    }
}

fn check_elliptic(c: f64) -> Result<()> {
    if (0.0..=1.0).contains(&c) {
        Ok(())
    } else {
        Err(Error::SpeedOutOfRange { c, range: "[0, 1]" })
    }
}

fn check_open(c: f64) -> Result<()> {
    if c > 0.0 && c < 1.0 {
        Ok(())
    } else {
        Err(Error::SpeedOutOfRange { c, range: "(0, 1)" })
    }
}

/// `D_c(ξ) = |ξ|⁴ + |ξ|² - c²ξ₁²`.
pub fn denom(c: f64, xi: &[f64]) -> Result<f64> {
    check_elliptic(c)?;
    let x2: f64 = xi.iter().map(|v| v * v).sum();
    Ok(x2 * x2 + x2 - c * c * xi[0] * xi[0])
}

/// Checked symbol evaluation; `ξ = 0` is rejected.
pub fn eval_symbol(s: &KernelSymbol, xi: &[f64]) -> Result<f64> {
    if xi.len() != s.dim {
        return Err(Error::InvalidArgument(format!(
            "frequency has {} components, symbol is {}-dimensional",
            xi.len(),
            s.dim
        )));
    }
    if xi.iter().all(|v| *v == 0.0) {
        return Err(Error::InvalidArgument("symbols are not defined at ξ = 0".into()));
    }
    if s.kind.uses_speed() {
        check_elliptic(s.c)?;
    }
    Ok(s.value(xi))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureParams {
    pub panels: usize,
    pub order: usize,
}

impl Default for QuadratureParams {
    fn default() -> Self {
        QuadratureParams { panels: 32, order: 16 }
    }
}

/// `‖L_c‖_{L^{4/3}(ℝ²)}` of the symbol itself.
///
/// In polar coordinates the radial integral is `(3/2)a^{-1/3}` with
/// `a = 1 - c²cos²φ`, leaving `6∫₀^{π/2} a^{-1/3} dφ`. The substitution
/// `φ = t³` removes the `φ^{-2/3}` endpoint singularity at `c = 1`.
pub fn lc_norm_43(c: f64, q: QuadratureParams) -> Result<f64> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::SpeedOutOfRange { c, range: "(0, 1]" });
    }
    let c2 = c * c;
    let integrand = |t: f64| {
        let phi = t * t * t;
        let s = phi.sin();
        let cs = phi.cos();
        // 1 - c²cos² written to keep precision near φ = 0 when c = 1
        let a = s * s + (1.0 - c2) * cs * cs;
        3.0 * t * t * a.powf(-1.0 / 3.0)
    };
    let top = (PI / 2.0).cbrt();
    let integral = 6.0 * integrate_gl(integrand, 0.0, top, q.panels, q.order);
    Ok(integral.powf(0.75))
}

/// Closed form `(3Γ(1/6)Γ(1/2)/Γ(2/3))^{3/4}` of `‖L_1‖_{4/3}`.
pub fn lc_norm_43_at_one() -> f64 {
    (3.0 * gamma(1.0 / 6.0) * gamma(0.5) / gamma(2.0 / 3.0)).powf(0.75)
}

/// `(2π)^{-N/2}`-type prefactor `Γ(N/2)/(2π^{N/2})`.
pub fn surface_factor(n: usize) -> f64 {
    let nf = n as f64;
    gamma(nf / 2.0) / (2.0 * PI.powf(nf / 2.0))
}

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// Closed-form limits of `|x|^N K(|x|σ)` as `|x| → ∞`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum FarFieldLimit {
    Lc {
        c: f64,
    },
    Lcj {
        c: f64,
        j: usize,
    },
    Tcjk {
        c: f64,
        j: usize,
        k: usize,
    },
    /// Coefficient of the Riesz-type term `(δ_jk - Nσ_jσ_k)`.
    Riesz {
        j: usize,
        k: usize,
    },
}

impl FarFieldLimit {
    pub fn from_symbol(s: &KernelSymbol) -> Self {
        match s.kind {
            KernelKind::Lc => FarFieldLimit::Lc { c: s.c },
            KernelKind::Lcj => FarFieldLimit::Lcj { c: s.c, j: s.j },
            KernelKind::Tcjk => FarFieldLimit::Tcjk { c: s.c, j: s.j, k: s.k },
            KernelKind::Rjk => FarFieldLimit::Riesz { j: s.j, k: s.k },
        }
    }
}

fn check_direction(sigma: &[f64]) -> Result<()> {
    let norm: f64 = sigma.iter().map(|v| v * v).sum::<f64>().sqrt();
    if sigma.is_empty() || (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "direction {sigma:?} is not a unit vector"
        )));
    }
    Ok(())
}

fn check_index(i: usize, n: usize) -> Result<usize> {
    if (1..=n).contains(&i) {
        Ok(i - 1)
    } else {
        Err(Error::InvalidArgument(format!("index {i} not in 1..={n}")))
    }
}

/// Evaluates a far-field limit at the unit direction `σ` (dimension
/// `N = σ.len()`).
pub fn farfield_limit(f: &FarFieldLimit, sigma: &[f64]) -> Result<f64> {
    check_direction(sigma)?;
    let n = sigma.len();
    let nf = n as f64;
    let pre = surface_factor(n);
    match *f {
        FarFieldLimit::Lc { c } => {
            check_open(c)?;
            let m = 1.0 - c * c;
            let d = m + c * c * sigma[0] * sigma[0];
            Ok(pre * m.powf((nf - 3.0) / 2.0) * c * c / d.powf(nf / 2.0) * (1.0 - nf * sigma[0] * sigma[0] / d))
        }
        FarFieldLimit::Lcj { c, j } => {
            check_open(c)?;
            let j = check_index(j, n)?;
            let m = 1.0 - c * c;
            let d = m + c * c * sigma[0] * sigma[0];
            let dj1 = delta(j, 0);
            Ok(pre * m.powf((nf - 1.0) / 2.0) / d.powf(nf / 2.0)
                * (dj1 * m.powf(-(dj1 + 1.0) / 2.0) - nf * m.powf(-dj1) * sigma[0] * sigma[j] / d))
        }
        FarFieldLimit::Tcjk { c, j, k } => {
            check_open(c)?;
            let (j, k) = (check_index(j, n)?, check_index(k, n)?);
            let m = 1.0 - c * c;
            let d = m + c * c * sigma[0] * sigma[0];
            let (dj1, dk1, djk) = (delta(j, 0), delta(k, 0), delta(j, k));
            let ss = sigma[j] * sigma[k];
            let inner = m.powf(nf / 2.0)
                * (djk * m.powf(-(dj1 + dk1 + 1.0) / 2.0) / d.powf(nf / 2.0)
                    - nf * m.powf(-dj1 - dk1 + 0.5) * ss / d.powf((nf + 2.0) / 2.0));
            Ok(pre / (c * c) * (inner - djk + nf * ss))
        }
        FarFieldLimit::Riesz { j, k } => {
            let (j, k) = (check_index(j, n)?, check_index(k, n)?);
            Ok(pre * (delta(j, k) - nf * sigma[j] * sigma[k]))
        }
    }
}

/// Residuals of the two contracted identities for the kernel limits:
/// `Σ_j σ_j L_{c,j,∞}` and, per `k`, `Σ_j σ_j T_{c,j,k,∞}`, each against
/// its closed form.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SumCheck {
    pub lcj: f64,
    pub tcjk: Vec<f64>,
}

impl SumCheck {
    pub fn max(&self) -> f64 {
        self.tcjk.iter().cloned().fold(self.lcj, f64::max)
    }
}

/// Closed form of `Σ_j σ_j L_{c,j,∞}(σ)`.
pub fn lcj_contraction(c: f64, sigma: &[f64]) -> f64 {
    let nf = sigma.len() as f64;
    let m = 1.0 - c * c;
    let d = m + c * c * sigma[0] * sigma[0];
    -surface_factor(sigma.len()) * (nf - 1.0) * m.powf((nf - 3.0) / 2.0) * sigma[0] / d.powf(nf / 2.0)
}

/// Closed form of `Σ_j σ_j T_{c,j,k,∞}(σ)` (`k` 1-based).
pub fn tcjk_contraction(c: f64, k: usize, sigma: &[f64]) -> f64 {
    let nf = sigma.len() as f64;
    let m = 1.0 - c * c;
    let d = m + c * c * sigma[0] * sigma[0];
    let dk1 = delta(k - 1, 0);
    -surface_factor(sigma.len()) * (nf - 1.0) * sigma[k - 1] / (c * c)
        * (m.powf(nf / 2.0 - 0.5 - dk1) / d.powf(nf / 2.0) - 1.0)
}

pub fn farfield_sum_check(c: f64, sigma: &[f64]) -> Result<SumCheck> {
    check_open(c)?;
    check_direction(sigma)?;
    let n = sigma.len();
    let mut lsum = 0.0;
    for j in 1..=n {
        lsum += sigma[j - 1] * farfield_limit(&FarFieldLimit::Lcj { c, j }, sigma)?;
    }
    let mut tres = Vec::with_capacity(n);
    for k in 1..=n {
        let mut tsum = 0.0;
        for j in 1..=n {
            tsum += sigma[j - 1] * farfield_limit(&FarFieldLimit::Tcjk { c, j, k }, sigma)?;
        }
        tres.push((tsum - tcjk_contraction(c, k, sigma)).abs());
    }
    Ok(SumCheck {
        lcj: (lsum - lcj_contraction(c, sigma)).abs(),
        tcjk: tres,
    })
}

fn symbol_on_lattice(symbol: &KernelSymbol, grid: &Grid) -> Result<Vec<Complex64>> {
    if grid.dim() != symbol.dim {
        return Err(Error::GridMismatch(format!(
            "{}-dimensional symbol on a {}-dimensional grid",
            symbol.dim,
            grid.dim()
        )));
    }
    symbol.validate()?;
    let dim = grid.dim();
    Ok((0..grid.len())
        .into_par_iter()
        .map(|i| {
            if i == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                let xi = grid.wavevector(i);
                Complex64::new(symbol.value(&xi[..dim]), 0.0)
            }
        })
        .collect())
}

/// Periodized kernel `K(x) = |box|^{-1} Σ_{ξ≠0} m(ξ) e^{iξ·x}` sampled on
/// the grid nodes.
pub fn kernel_samples(symbol: &KernelSymbol, grid: &Grid) -> Result<ScalarSamples> {
    let mut coeffs = symbol_on_lattice(symbol, grid)?;
    // shift the origin from the first node to x = 0
    for (i, v) in coeffs.iter_mut().enumerate() {
        let (ix, iy) = grid.split_index(i);
        if (grid.mode_index(0, ix) + if grid.dim() == 2 { grid.mode_index(1, iy) } else { 0 }) % 2 != 0 {
            *v = -*v;
        }
    }
    let spec = Spectrum::from_coefficients(grid, coeffs)?;
    let vol = grid.cell_volume();
    Ok(spec.to_real().map(|v| v / vol))
}

/// A physical-space kernel with its radial decay fit.
#[derive(Clone, Debug)]
pub struct PhysicalKernel {
    pub samples: ScalarSamples,
    /// Fit of the annulus maxima; `exponent` is the (negative) slope.
    pub decay: PowerFit,
}

impl PhysicalKernel {
    /// Decay rate `-exponent`, to be compared with the window `(N-2, N]`.
    pub fn decay_rate(&self) -> f64 {
        -self.decay.exponent
    }
}

/// Kernel samples plus a fit of `log max_{annulus}|K|` against `log R` over
/// 8 log-spaced radii in `[0.15, 0.4]` of the half box.
pub fn kernel_physical(symbol: &KernelSymbol, grid: &Grid) -> Result<PhysicalKernel> {
    if grid.dim() != 2 {
        return Err(Error::InvalidGrid("physical kernels need a 2D grid".into()));
    }
    if symbol.kind.uses_speed() {
        check_open(symbol.c)?;
    }
    let half = 0.5 * grid.length(0).min(grid.length(1));
    let h = grid.spacing(0).max(grid.spacing(1));
    let radii = log_spaced(0.15 * half, 0.4 * half, 8);
    if radii[0] < 4.0 * h || radii[1] - radii[0] < h {
        return Err(Error::DomainTooSmall(format!(
            "spacing {h} too coarse for fit radii starting at {}",
            radii[0]
        )));
    }
    let samples = kernel_samples(symbol, grid)?;
    let values = annulus_profile(&samples, &radii);
    let decay = log_log_fit(&radii, &values)?;
    Ok(PhysicalKernel { samples, decay })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelFarFieldSample {
    pub angle: f64,
    pub sigma: [f64; 2],
    /// `R^N K(Rσ)` after box-size extrapolation.
    pub scaled: f64,
    /// `R^N K(Rσ)` on the full box alone.
    pub scaled_raw: f64,
    pub limit: f64,
}

/// `R^N K(Rσ)` at `directions` equally spaced angles, compared with the
/// closed-form limit. Off-node values come from cubic interpolation of
/// the node samples.
///
/// The periodized kernel differs from the free-space one by `O(L^{-2})`
/// (periodic images and the removed zero mode). Evaluating on the box
/// `L` and on the box `L/2` with the same spacing and combining
/// `(4K_L - K_{L/2})/3` cancels that term.
pub fn kernel_far_field(
    symbol: &KernelSymbol,
    n: usize,
    length: f64,
    radius: f64,
    directions: usize,
) -> Result<Vec<KernelFarFieldSample>> {
    if symbol.dim != 2 {
        return Err(Error::InvalidArgument("far-field comparison is 2D".into()));
    }
    if !n.is_multiple_of(4) {
        return Err(Error::InvalidGrid(format!("n = {n} must be a multiple of 4")));
    }
    if radius > 0.4 * 0.25 * length * (1.0 + 1e-12) {
        return Err(Error::DomainTooSmall(format!(
            "radius {radius} outside the reliable region of the half-size box"
        )));
    }
    if directions == 0 {
        return Err(Error::InvalidArgument("no directions".into()));
    }
    let full = Grid::plane([n, n], [length, length])?;
    let half = Grid::plane([n / 2, n / 2], [length / 2.0, length / 2.0])?;
    let limit = FarFieldLimit::from_symbol(symbol);
    let full_samples = kernel_samples(symbol, &full)?;
    let half_samples = kernel_samples(symbol, &half)?;
    (0..directions)
        .map(|i| {
            let angle = 2.0 * PI * i as f64 / directions as f64;
            let sigma = [angle.cos(), angle.sin()];
            let p = [radius * sigma[0], radius * sigma[1]];
            let k_full = bicubic(&full_samples, p);
            let k_half = bicubic(&half_samples, p);
            let r2 = radius * radius;
            Ok(KernelFarFieldSample {
                angle,
                sigma,
                scaled: r2 * (4.0 * k_full - k_half) / 3.0,
                scaled_raw: r2 * k_full,
                limit: farfield_limit(&limit, &sigma)?,
            })
        })
        .collect()
}

/// `max_σ |measured - limit| / max_σ |limit|` over a sample set.
pub fn sup_relative_error(samples: &[KernelFarFieldSample]) -> f64 {
    let err = samples.iter().map(|s| (s.scaled - s.limit).abs()).fold(0.0, f64::max);
    let scale = samples.iter().map(|s| s.limit.abs()).fold(0.0, f64::max);
    err / scale
}
