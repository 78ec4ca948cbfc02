#![allow(dead_code)]

use std::sync::OnceLock;

use llwave::solver::{initial_guess, solve, InitialKind, SolveParams, SolveResult};
use llwave::Grid;

pub const SPEED: f64 = 0.95;
pub const TOL: f64 = 1e-3;

pub fn params() -> SolveParams {
    SolveParams {
        tol: TOL,
        ..Default::default()
    }
}

pub fn grid() -> Grid {
    Grid::plane([128, 128], [60.0, 240.0]).unwrap()
}

/// A converged fast wave on a small grid, computed once per test binary.
pub fn solution() -> &'static SolveResult {
    static CELL: OnceLock<SolveResult> = OnceLock::new();
    CELL.get_or_init(|| {
        let init = initial_guess(SPEED, &grid(), InitialKind::Bump, 0.3).unwrap();
        let r = solve(init, &params()).unwrap();
        assert!(r.converged, "reference solve did not converge: {}", r.residual);
        r
    })
}

pub const SONIC_SPEED: f64 = 0.985;

/// A converged wave close to the speed of sound, with `max|u3| < 1/2`.
pub fn near_sonic() -> &'static SolveResult {
    static CELL: OnceLock<SolveResult> = OnceLock::new();
    CELL.get_or_init(|| {
        let g = Grid::plane([128, 128], [110.0, 770.0]).unwrap();
        let init = initial_guess(SONIC_SPEED, &g, InitialKind::Bump, 0.3).unwrap();
        let r = solve(init, &params()).unwrap();
        assert!(r.converged, "near-sonic solve did not converge: {}", r.residual);
        r
    })
}
