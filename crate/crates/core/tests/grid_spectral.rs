use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use llwave::grid::{apply_multiplier, integrate, spectral_gradient, Spectrum};
use llwave::kernels::KernelSymbol;
use llwave::{Grid, ScalarSamples};
use proptest::prelude::*;

fn max_diff(a: &ScalarSamples, b: &ScalarSamples) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn line_grid_lattice() {
    let g = Grid::line(8, 8.0).unwrap();
    assert_eq!(g.spacing(0), 1.0);
    let w = g.wavenumbers(0);
    assert_eq!(w[0], 0.0);
    assert_abs_diff_eq!(w[1], PI / 4.0, epsilon = 1e-15);
    assert_abs_diff_eq!(w.iter().fold(0.0f64, |m, v| m.max(v.abs())), PI, epsilon = 1e-15);
}

#[test]
fn plane_grid_layout() {
    let g = Grid::plane([16, 16], [16.0, 16.0]).unwrap();
    assert_eq!(g.len(), 256);
    assert_eq!(g.position(0), [-8.0, -8.0]);
}

#[test]
fn rejects_bad_grids() {
    assert!(Grid::line(7, 8.0).is_err());
    assert!(Grid::line(6, 8.0).is_err());
    assert!(Grid::line(8, 0.0).is_err());
    assert!(Grid::line(8, -1.0).is_err());
    assert!(Grid::plane([8, 9], [1.0, 1.0]).is_err());
}

#[test]
fn derivative_of_single_mode() {
    let l = 10.0;
    let g = Grid::line(64, l).unwrap();
    let k = 2.0 * PI / l;
    let s = ScalarSamples::from_fn(&g, |x| (k * x[0]).sin());
    let want = ScalarSamples::from_fn(&g, |x| k * (k * x[0]).cos());
    assert!(max_diff(&spectral_gradient(&s, 0).unwrap(), &want) <= 1e-12);
}

#[test]
fn derivative_of_constant_and_bad_axis() {
    let g = Grid::plane([16, 16], [5.0, 5.0]).unwrap();
    let s = ScalarSamples::constant(&g, 3.0);
    assert!(spectral_gradient(&s, 1).unwrap().max_abs() < 1e-14);
    assert!(spectral_gradient(&s, 2).is_err());
}

#[test]
fn derivative_of_gaussian() {
    let g = Grid::line(256, 40.0).unwrap();
    let s = ScalarSamples::from_fn(&g, |x| (-x[0] * x[0]).exp());
    let want = ScalarSamples::from_fn(&g, |x| -2.0 * x[0] * (-x[0] * x[0]).exp());
    assert!(max_diff(&spectral_gradient(&s, 0).unwrap(), &want) <= 1e-10);
}

#[test]
fn integrals() {
    let g = Grid::plane([16, 32], [3.0, 7.0]).unwrap();
    assert_abs_diff_eq!(integrate(&ScalarSamples::constant(&g, 1.0)), 21.0, epsilon = 1e-12);
    let g = Grid::line(1024, 80.0).unwrap();
    let s = ScalarSamples::from_fn(&g, |x| 1.0 / x[0].cosh().powi(2));
    assert_abs_diff_eq!(integrate(&s), 2.0, epsilon = 1e-12);
    let s = ScalarSamples::from_fn(&g, |x| (2.0 * PI * x[0] / 80.0).sin());
    assert_abs_diff_eq!(integrate(&s), 0.0, epsilon = 1e-12);
}

#[test]
fn multiplier_examples() {
    let g = Grid::plane([32, 32], [2.0 * PI, 2.0 * PI]).unwrap();
    let s = ScalarSamples::from_fn(&g, |x| (2.0 * x[0]).cos() + 0.5 * (x[1] - x[0]).sin());
    let one = |_: &[f64]| 1.0;
    assert!(max_diff(&apply_multiplier(&s, &one).unwrap(), &s) < 1e-13);

    let cos = ScalarSamples::from_fn(&g, |x| (3.0 * x[0]).cos());
    let riesz = KernelSymbol::rjk(1, 1, 2).unwrap();
    assert!(max_diff(&apply_multiplier(&cos, &riesz).unwrap(), &cos) < 1e-13);

    let c1 = ScalarSamples::from_fn(&g, |x| x[0].cos());
    let lc = KernelSymbol::lc(1.0, 2).unwrap();
    assert!(max_diff(&apply_multiplier(&c1, &lc).unwrap(), &c1) < 1e-13);

    assert!(KernelSymbol::lc(1.2, 2).is_err());
}

fn smooth_field(g: &Grid, coeffs: &[(i32, i32, f64, f64)], bump: f64) -> ScalarSamples {
    let (lx, ly) = (g.length(0), g.length(1));
    ScalarSamples::from_fn(g, |x| {
        let modes: f64 = coeffs
            .iter()
            .map(|&(a, b, re, im)| {
                let ph = 2.0 * PI * (a as f64 * x[0] / lx + b as f64 * x[1] / ly);
                re * ph.cos() + im * ph.sin()
            })
            .sum();
        modes + bump * (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp()
    })
}

fn coeffs() -> impl Strategy<Value = Vec<(i32, i32, f64, f64)>> {
    prop::collection::vec((-6i32..=6, -6i32..=6, -1.0f64..1.0, -1.0f64..1.0), 1..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn second_derivative_is_a_multiplier(cs in coeffs(), bump in -1.0f64..1.0, axis in 0usize..2) {
        let g = Grid::plane([128, 128], [30.0, 30.0]).unwrap();
        let s = smooth_field(&g, &cs, bump);
        let twice = spectral_gradient(&spectral_gradient(&s, axis).unwrap(), axis).unwrap();
        let m = move |xi: &[f64]| -xi[axis] * xi[axis];
        let direct = apply_multiplier(&s, &m).unwrap();
        let scale = direct.max_abs().max(1e-300);
        prop_assert!(max_diff(&twice, &direct) / scale <= 1e-10);
    }

    #[test]
    fn derivative_integrates_to_zero(cs in coeffs(), bump in -1.0f64..1.0, axis in 0usize..2) {
        let g = Grid::plane([32, 64], [20.0, 25.0]).unwrap();
        let s = smooth_field(&g, &cs, bump);
        prop_assert!(integrate(&spectral_gradient(&s, axis).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn multipliers_compose(cs in coeffs(), bump in -1.0f64..1.0, c in 0.05f64..0.99) {
        let g = Grid::plane([32, 32], [20.0, 20.0]).unwrap();
        let s = smooth_field(&g, &cs, bump);
        let a = KernelSymbol::lc(c, 2).unwrap();
        let b = KernelSymbol::rjk(1, 2, 2).unwrap();
        let twice = apply_multiplier(&apply_multiplier(&s, &a).unwrap(), &b).unwrap();
        let product = move |xi: &[f64]| a.value(xi) * b.value(xi);
        let once = apply_multiplier(&s, &product).unwrap();
        prop_assert!(max_diff(&twice, &once) <= 1e-12);
    }

    #[test]
    fn even_symbol_keeps_real(cs in coeffs(), bump in -1.0f64..1.0, c in 0.05f64..0.99) {
        let g = Grid::plane([32, 32], [20.0, 20.0]).unwrap();
        let s = smooth_field(&g, &cs, bump);
        let lc = KernelSymbol::lc(c, 2).unwrap();
        let spec = Spectrum::of(&s);
        let product = llwave::grid::multiply_spectrum(&spec, &lc).unwrap();
        let imag = product.inverse_complex().iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        prop_assert!(imag <= 1e-12);
    }
}
