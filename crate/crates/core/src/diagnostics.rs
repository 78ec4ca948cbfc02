//! Energy, momentum, Pohozaev and integral identities, a priori bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{energy_density_from, Field, LiftedField};
use crate::grid::{integrate, spectral_gradients, ScalarSamples};
use crate::solver;

pub use crate::field::lifting;

/// `E(u) = ½∫(|∇u|² + u3²)`.
pub fn energy(f: &Field) -> Result<f64> {
    let grads = f.gradients()?;
    Ok(integrate(&energy_density_from(f.u3(), &grads)))
}

/// `∫ u3 ∂1θ`.
pub fn momentum_lifted(lf: &LiftedField) -> f64 {
    let d1 = &lf.theta_gradient()[0];
    integrate(&lf.u3().zip_with(d1, |a, b| a * b))
}

/// `-∫ x2 u·(∂1u × ∂2u)` over the box.
pub fn momentum_density(f: &Field) -> Result<f64> {
    let g = f.grid();
    if g.dim() != 2 {
        return Err(Error::InvalidGrid("momentum density needs a 2D field".into()));
    }
    let d = f.gradients()?;
    let [u1, u2, u3] = f.components();
    let (u1, u2, u3) = (u1.values(), u2.values(), u3.values());
    let a = |c: usize, i: usize| d[0][c].values()[i];
    let b = |c: usize, i: usize| d[1][c].values()[i];
    let sum: f64 = (0..g.len())
        .map(|i| {
            let cross = [
                a(1, i) * b(2, i) - a(2, i) * b(1, i),
                a(2, i) * b(0, i) - a(0, i) * b(2, i),
                a(0, i) * b(1, i) - a(1, i) * b(0, i),
            ];
            let triple = u1[i] * cross[0] + u2[i] * cross[1] + u3[i] * cross[2];
            g.position(i)[1] * triple
        })
        .sum();
    Ok(-sum * g.cell_volume())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PohozaevResiduals {
    /// `|E - ∫|∂1u|²| / (E + 1)`.
    pub poh2: f64,
    /// `|∫u3² - c p| / (E + 1)`, with `p` the lifted momentum.
    pub poh3: f64,
}

pub fn pohozaev_report(f: &Field, lf: &LiftedField) -> Result<PohozaevResiduals> {
    if f.grid().dim() != 2 {
        return Err(Error::InvalidGrid("Pohozaev identities are checked in 2D".into()));
    }
    let grads = f.gradients()?;
    let e = integrate(&energy_density_from(f.u3(), &grads));
    let dx1: f64 = grads[0].iter().map(|d| integrate(&d.map(|v| v * v))).sum();
    let u3_sq = integrate(&f.u3().map(|v| v * v));
    let p = momentum_lifted(lf);
    Ok(PohozaevResiduals {
        poh2: (e - dx1).abs() / (e + 1.0),
        poh3: (u3_sq - f.c() * p).abs() / (e + 1.0),
    })
}

/// Both sides of an integral identity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentitySides {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

impl IdentitySides {
    fn new(lhs: f64, rhs: f64) -> Self {
        IdentitySides {
            lhs,
            rhs,
            residual: (lhs - rhs).abs(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityResiduals {
    /// `∫ϱ²|∇θ|² = c∫u3∂1θ`
    pub i1: IdentitySides,
    /// `∫|∇ϱ|² + ∫ϱ²|∇θ|² = 2∫eϱ² - c∫u3ϱ²∂1θ`
    pub i2: IdentitySides,
    /// `2∫ϱ|∇ϱ|² + 2∫e u3²ϱ = ∫ϱu3²|∇θ|² + c∫ϱu3³∂1θ`
    pub i2b: IdentitySides,
    /// `∫|∇u3|² + ∫u3² = 2∫e u3² + c∫ϱ²u3∂1θ`
    pub i3: IdentitySides,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        [self.i1, self.i2, self.i2b, self.i3]
            .iter()
            .map(|s| s.residual)
            .fold(0.0, f64::max)
    }
}

/// Pointwise quantities of the polar form shared by the identities and
/// inequalities.
struct Polar {
    u3: Vec<f64>,
    rho: Vec<f64>,
    grad_rho_sq: Vec<f64>,
    grad_theta_sq: Vec<f64>,
    grad_u3_sq: Vec<f64>,
    dtheta: Vec<Vec<f64>>,
    /// Energy density of the reconstructed field.
    e: Vec<f64>,
}

impl Polar {
    fn of(lf: &LiftedField) -> Result<Self> {
        let rho = lf.rho();
        let dr = spectral_gradients(&rho);
        let du3 = spectral_gradients(lf.u3());
        let dt = lf.theta_gradient();
        let n = lf.grid().len();
        let sq = |d: &[ScalarSamples]| -> Vec<f64> {
            (0..n).map(|i| d.iter().map(|s| s.values()[i].powi(2)).sum()).collect()
        };
        let field = lf.reconstruct();
        let e = energy_density_from(field.u3(), &field.gradients()?);
        Ok(Polar {
            u3: lf.u3().values().to_vec(),
            grad_rho_sq: sq(&dr),
            grad_theta_sq: sq(&dt),
            grad_u3_sq: sq(&du3),
            rho: rho.into_values(),
            dtheta: dt.into_iter().map(ScalarSamples::into_values).collect(),
            e: e.into_values(),
        })
    }

    /// Energy density rebuilt from the polar variables,
    /// `½(|∇ϱ|² + ϱ²|∇θ|² + |∇u3|² + u3²)`.
    fn polar_energy_density(&self, i: usize) -> f64 {
        0.5 * (self.grad_rho_sq[i]
            + self.rho[i].powi(2) * self.grad_theta_sq[i]
            + self.grad_u3_sq[i]
            + self.u3[i].powi(2))
    }
}

pub fn identity_report(lf: &LiftedField) -> Result<IdentityResiduals> {
    let p = Polar::of(lf)?;
    let c = lf.c();
    let w = lf.grid().cell_volume();
    let sum = |f: &dyn Fn(usize) -> f64| -> f64 { (0..p.u3.len()).map(f).sum::<f64>() * w };
    let (u3, r, e, d1) = (&p.u3, &p.rho, &p.e, &p.dtheta[0]);
    let kinetic_phase = sum(&|i| r[i] * r[i] * p.grad_theta_sq[i]);
    let i1 = IdentitySides::new(kinetic_phase, c * sum(&|i| u3[i] * d1[i]));
    let i2 = IdentitySides::new(
        sum(&|i| p.grad_rho_sq[i]) + kinetic_phase,
        2.0 * sum(&|i| e[i] * r[i] * r[i]) - c * sum(&|i| u3[i] * r[i] * r[i] * d1[i]),
    );
    let i2b = IdentitySides::new(
        2.0 * sum(&|i| r[i] * p.grad_rho_sq[i]) + 2.0 * sum(&|i| e[i] * u3[i] * u3[i] * r[i]),
        sum(&|i| r[i] * u3[i] * u3[i] * p.grad_theta_sq[i]) + c * sum(&|i| r[i] * u3[i].powi(3) * d1[i]),
    );
    let i3 = IdentitySides::new(
        sum(&|i| p.grad_u3_sq[i] + u3[i] * u3[i]),
        2.0 * sum(&|i| e[i] * u3[i] * u3[i]) + c * sum(&|i| r[i] * r[i] * u3[i] * d1[i]),
    );
    Ok(IdentityResiduals { i1, i2, i2b, i3 })
}

/// One inequality `lhs <= rhs`, with `gap = rhs - lhs`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityGap {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    /// Whether the hypotheses of the bound hold for this field.
    pub applicable: bool,
    /// `None` when not applicable.
    pub holds: Option<bool>,
}

impl InequalityGap {
    fn new(lhs: f64, rhs: f64, applicable: bool, slack: f64) -> Self {
        let gap = rhs - lhs;
        InequalityGap {
            lhs,
            rhs,
            gap,
            applicable,
            holds: applicable.then_some(gap >= -slack),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    /// `‖u3‖_4 <= 54 δ E`
    pub l4_by_energy: InequalityGap,
    /// `E <= 10‖u3‖_4⁴`
    pub energy_by_l4: InequalityGap,
    /// `‖∂1θ - c u3‖² + ‖∂2θ‖² <= 9/4 ‖u3‖_4⁴`
    pub phase_defect: InequalityGap,
    /// `‖∇ϱ‖² <= 6‖u3‖_4⁴`
    pub modulus_gradient: InequalityGap,
    /// `E <= 3‖u3‖_2²`, a bound for three or more dimensions; never
    /// applicable here.
    pub energy_by_l2: InequalityGap,
    /// `max_x (|u3 ∂1θ| - e/√(1-δ²))`, as an inequality with `lhs` the
    /// largest excess and `rhs = 0`.
    pub pointwise_polar: InequalityGap,
    /// Slack below zero tolerated before a gap counts as violated.
    pub slack: f64,
}

impl InequalityReport {
    pub fn all_hold(&self) -> bool {
        [
            self.l4_by_energy,
            self.energy_by_l4,
            self.phase_defect,
            self.modulus_gradient,
            self.energy_by_l2,
            self.pointwise_polar,
        ]
        .iter()
        .all(|g| g.holds != Some(false))
    }
}

/// Largest `δ` for which the 2D bounds are asserted.
pub const VORTEXLESS_BOUND: f64 = 0.5;

pub fn inequality_report(lf: &LiftedField) -> Result<InequalityReport> {
    let p = Polar::of(lf)?;
    let c = lf.c();
    let w = lf.grid().cell_volume();
    let n = p.u3.len();
    let sum = |f: &dyn Fn(usize) -> f64| -> f64 { (0..n).map(f).sum::<f64>() * w };
    let delta = lf.u3().max_abs();
    let energy = sum(&|i| p.e[i]);
    let l4_fourth = sum(&|i| p.u3[i].powi(4));
    let l2_sq = sum(&|i| p.u3[i].powi(2));
    let slack = 1e-3 * (energy + 1.0);
    let applicable = lf.grid().dim() == 2 && delta <= VORTEXLESS_BOUND && c > 0.0 && c <= 1.0;

    let d1 = &p.dtheta[0];
    let phase =
        sum(&|i| (d1[i] - c * p.u3[i]).powi(2)) + p.dtheta[1..].iter().map(|d| sum(&|i| d[i] * d[i])).sum::<f64>();

    let denom = (1.0 - delta * delta).sqrt();
    let excess = (0..n)
        .map(|i| (p.u3[i] * d1[i]).abs() - p.polar_energy_density(i) / denom)
        .fold(f64::NEG_INFINITY, f64::max);
    let scale = (0..n).map(|i| p.polar_energy_density(i)).fold(0.0, f64::max);
    let pointwise_polar = InequalityGap::new(excess.max(0.0), 0.0, delta < 1.0, 1e-12 * (scale + 1.0));

    Ok(InequalityReport {
        l4_by_energy: InequalityGap::new(l4_fourth.powf(0.25), 54.0 * delta * energy, applicable, slack),
        energy_by_l4: InequalityGap::new(energy, 10.0 * l4_fourth, applicable, slack),
        phase_defect: InequalityGap::new(phase, 2.25 * l4_fourth, applicable, slack),
        modulus_gradient: InequalityGap::new(sum(&|i| p.grad_rho_sq[i]), 6.0 * l4_fourth, applicable, slack),
        energy_by_l2: InequalityGap::new(energy, 3.0 * l2_sq, false, slack),
        pointwise_polar,
        slack,
    })
}

/// Tolerance for the identities given the PDE residual of the input.
pub fn identity_tolerance(residual_pde: f64) -> f64 {
    (50.0 * residual_pde).max(1e-8)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub c: f64,
    pub energy: f64,
    pub momentum_lifted: f64,
    pub momentum_density: f64,
    pub u3_linf: f64,
    pub u3_l2: f64,
    pub u3_l4: f64,
    pub pohozaev: PohozaevResiduals,
    pub identities: IdentityResiduals,
    pub inequalities: InequalityReport,
    pub residual_pde: f64,
    /// `max(1e-8, 50·residual_pde)`; identity residuals are compared with
    /// `tolerance·(E + 1)`, Pohozaev residuals with `tolerance`.
    pub tolerance: f64,
    pub pohozaev_within_tolerance: bool,
    pub identities_within_tolerance: bool,
}

/// Full report for a 2D vortexless field.
pub fn diagnose(f: &Field, margin: f64) -> Result<DiagnosticsReport> {
    if f.grid().dim() != 2 {
        return Err(Error::InvalidGrid("diagnostics report needs a 2D field".into()));
    }
    let lf = lifting(f, margin)?;
    let energy = energy(f)?;
    let residual_pde = solver::residual(f)?;
    let tolerance = identity_tolerance(residual_pde);
    let pohozaev = pohozaev_report(f, &lf)?;
    let identities = identity_report(&lf)?;
    let u3 = f.u3();
    Ok(DiagnosticsReport {
        c: f.c(),
        energy,
        momentum_lifted: momentum_lifted(&lf),
        momentum_density: momentum_density(f)?,
        u3_linf: u3.max_abs(),
        u3_l2: integrate(&u3.map(|v| v * v)).sqrt(),
        u3_l4: integrate(&u3.map(|v| v.powi(4))).powf(0.25),
        pohozaev_within_tolerance: pohozaev.poh2 <= tolerance && pohozaev.poh3 <= tolerance,
        identities_within_tolerance: identities.max() <= tolerance * (energy + 1.0),
        pohozaev,
        identities,
        inequalities: inequality_report(&lf)?,
        residual_pde,
        tolerance,
    })
}
