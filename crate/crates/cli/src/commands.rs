use std::path::{Path, PathBuf};
use std::time::Instant;

use llwave::diagnostics;
use llwave::farfield;
use llwave::field::{lifting, DEFAULT_MARGIN};
use llwave::io::{self, CsvTable, GridInfo, ReportFile, ReportMetadata};
use llwave::kernels::{self, KernelKind, KernelSymbol, QuadratureParams};
use llwave::soliton1d;
use llwave::solver::{self, InitialKind, SolveParams, SolveResult};
use llwave::{Error, Grid, LiftedField, Result};

use crate::{Command, GridArgs, SolveArgs};

/// Bound on `‖L_c‖_{4/3}` checked by `kernel-norm`.
const NORM_BOUND: f64 = 11.0;

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Divergence(_) | Error::VortexPresent { .. } | Error::Unwrap(_) | Error::InsufficientDecay(_) => 2,
        _ => 1,
    }
}

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Curve1d { cmin, cmax, steps, out } => curve1d(cmin, cmax, steps, &out),
        Command::Profile1d { c, xmax, n, out } => profile1d(c, xmax, n, &out),
        Command::KernelNorm { c } => kernel_norm(c),
        Command::Symbol { kind, c, xi, j, k } => symbol(&kind, c, &xi.0, j, k),
        Command::KernelFarfield {
            kind,
            c,
            radius,
            ndir,
            j,
            k,
            n,
            length,
            out,
        } => kernel_farfield(&kind, c, radius, ndir, j, k, n, length.unwrap_or(10.0 * radius), &out),
        Command::Solve2d {
            c,
            grid,
            solve,
            out,
            log,
        } => {
            let log = log.unwrap_or_else(|| with_suffix(&out, ".log.csv"));
            solve2d(c, &grid, &solve, &out, &log)
        }
        Command::Continuation {
            cstart,
            cend,
            steps,
            grid,
            solve,
            out_dir,
        } => continuation(cstart, cend, steps, &grid, &solve, &out_dir),
        Command::Diagnose { input, out, margin } => diagnose(&input, &out, margin),
        Command::Farfield {
            input,
            out,
            summary,
            ndir,
            margin,
        } => {
            let summary = summary.unwrap_or_else(|| out.with_extension("json"));
            farfield_cmd(&input, &out, &summary, ndir, margin)
        }
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.with_extension("").into_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn curve1d(cmin: f64, cmax: f64, steps: usize, out: &Path) -> Result<()> {
    if steps == 0 || !(cmin <= cmax) {
        return Err(Error::InvalidArgument("need steps >= 1 and cmin <= cmax".into()));
    }
    let speeds = linspace(cmin, cmax, steps);
    let curve = soliton1d::ep_curve(&speeds)?;
    let mut table = CsvTable::new(&["c", "p", "E", "E_pred", "quad_E", "quad_p", "err_E", "err_p"]);
    let mut worst: f64 = 0.0;
    for row in &curve.rows {
        let q = soliton1d::quadrature(row.c, &soliton1d::quadrature_grid(row.c)?)?;
        let (err_e, err_p) = (q.energy - row.energy, q.momentum - row.momentum);
        worst = worst.max(err_e.abs()).max(err_p.abs());
        table.push_numbers(&[
            row.c,
            row.momentum,
            row.energy,
            row.energy_from_momentum,
            q.energy,
            q.momentum,
            err_e,
            err_p,
        ]);
    }
    table.write(out)?;
    println!(
        "{} rows written to {}; max quadrature error {worst:.3e}",
        curve.rows.len(),
        out.display()
    );
    Ok(())
}

fn profile1d(c: f64, xmax: f64, n: usize, out: &Path) -> Result<()> {
    if n < 2 || !(xmax > 0.0) {
        return Err(Error::InvalidArgument("need n >= 2 and xmax > 0".into()));
    }
    let mut table = CsvTable::new(&["x", "u1", "u2", "u3", "theta"]);
    for x in linspace(-xmax, xmax, n) {
        let u = soliton1d::profile(c, x)?;
        let theta = soliton1d::phase(c, x).unwrap_or_else(|_| u[1].atan2(u[0]));
        table.push_numbers(&[x, u[0], u[1], u[2], theta]);
    }
    table.write(out)?;
    println!("{n} samples written to {}", out.display());
    Ok(())
}

fn kernel_norm(c: f64) -> Result<()> {
    let norm = kernels::lc_norm_43(c, QuadratureParams::default())?;
    let verdict = if norm <= NORM_BOUND { "PASS" } else { "FAIL" };
    println!("||L_c||_4/3 = {norm:.12} at c = {c}");
    if c == 1.0 {
        println!("closed form at c = 1: {:.12}", kernels::lc_norm_43_at_one());
    }
    println!("{verdict}: bound {NORM_BOUND}");
    Ok(())
}

fn symbol(kind: &str, c: f64, xi: &[f64], j: usize, k: usize) -> Result<()> {
    let kind: KernelKind = kind.parse()?;
    let s = KernelSymbol::new(kind, c, j, k, xi.len())?;
    println!("{}", kernels::eval_symbol(&s, xi)?);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn kernel_farfield(
    kind: &str,
    c: f64,
    radius: f64,
    ndir: usize,
    j: usize,
    k: usize,
    n: usize,
    length: f64,
    out: &Path,
) -> Result<()> {
    let kind: KernelKind = kind.parse()?;
    let s = KernelSymbol::new(kind, c, j, k, 2)?;
    let samples = kernels::kernel_far_field(&s, n, length, radius, ndir)?;
    let scale = samples.iter().map(|s| s.limit.abs()).fold(0.0, f64::max);
    let mut table = CsvTable::new(&["angle", "sigma1", "sigma2", "scaled", "scaled_raw", "limit", "rel_err"]);
    for p in &samples {
        let rel = (p.scaled - p.limit).abs() / scale;
        table.push_numbers(&[p.angle, p.sigma[0], p.sigma[1], p.scaled, p.scaled_raw, p.limit, rel]);
    }
    table.write(out)?;
    println!(
        "sup relative error {:.4e} over {ndir} directions at R = {radius}",
        kernels::sup_relative_error(&samples)
    );
    Ok(())
}

fn grid_for(c: f64, g: &GridArgs) -> Result<Grid> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::SpeedOutOfRange { c, range: "(0, 1)" });
    }
    let default = soliton1d::default_length(c);
    Grid::plane([g.nx, g.ny], [g.lx.unwrap_or(default), g.ly.unwrap_or(default)])
}

fn params_of(s: &SolveArgs) -> SolveParams {
    SolveParams {
        damping: s.damping,
        tol: s.tol,
        max_iter: s.max_iter,
        renorm: !s.no_renorm,
        ..SolveParams::default()
    }
}

fn initial(c: f64, g: &GridArgs, s: &SolveArgs) -> Result<LiftedField> {
    if let Some(path) = s.init.strip_prefix("file:") {
        let field = io::read_field(Path::new(path))?;
        if field.c() != c {
            log::info!("seed field has c = {}, solving at c = {c}", field.c());
        }
        return Ok(lifting(&field, DEFAULT_MARGIN)?.with_speed(c));
    }
    let kind: InitialKind = s.init.parse()?;
    solver::initial_guess(c, &grid_for(c, g)?, kind, s.amp)
}

fn summarize(r: &SolveResult) {
    println!(
        "c = {}: converged {}, residual {:.4e} (initial {:.4e}), {} iterations ({} accepted, {} rejected){}",
        r.field.c(),
        r.converged,
        r.residual,
        r.initial_residual,
        r.iterations,
        r.accepted,
        r.rejected,
        if r.stalled { ", stalled" } else { "" }
    );
}

fn check_divergence(r: &SolveResult) -> Result<()> {
    match &r.diverged {
        Some(msg) => Err(Error::Divergence(msg.clone())),
        None => Ok(()),
    }
}

fn solve2d(c: f64, g: &GridArgs, s: &SolveArgs, out: &Path, log_path: &Path) -> Result<()> {
    let result = solver::solve(initial(c, g, s)?, &params_of(s))?;
    let mut table = CsvTable::new(&["step", "residual"]);
    table.push(vec!["0".into(), io::format_number(result.initial_residual)]);
    for (i, r) in result.residual_history.iter().enumerate() {
        table.push(vec![(i + 1).to_string(), io::format_number(*r)]);
    }
    table.write(log_path)?;
    summarize(&result);
    check_divergence(&result)?;
    io::write_field(&result.field, out)?;
    println!("field written to {}", out.display());
    Ok(())
}

fn continuation(cstart: f64, cend: f64, steps: usize, g: &GridArgs, s: &SolveArgs, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let results = solver::continuation(initial(cstart, g, s)?, cend, steps, &params_of(s))?;
    let mut table = CsvTable::new(&["c", "E", "p", "residual", "converged"]);
    for (i, r) in results.iter().enumerate() {
        summarize(r);
        check_divergence(r)?;
        io::write_field(&r.field, &dir.join(format!("field_{i:03}.llfw")))?;
        let e = diagnostics::energy(&r.field)?;
        let p = diagnostics::momentum_lifted(&r.lifted);
        table.push(vec![
            io::format_number(r.field.c()),
            io::format_number(e),
            io::format_number(p),
            io::format_number(r.residual),
            r.converged.to_string(),
        ]);
    }
    table.write(&dir.join("branch.csv"))?;
    if results.len() < steps {
        println!("stopped after {} of {steps} speeds: no convergence", results.len());
    }
    Ok(())
}

fn metadata(field: &llwave::Field, start: Instant) -> ReportMetadata {
    ReportMetadata {
        c: field.c(),
        grid: GridInfo::of(field.grid()),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
    }
}

fn diagnose(input: &Path, out: &Path, margin: f64) -> Result<()> {
    let start = Instant::now();
    let field = io::read_field(input)?;
    let report = diagnostics::diagnose(&field, margin)?;
    println!(
        "E = {:.10}, p = {:.10} (density route {:.10}), residual {:.3e}, inequalities hold: {}",
        report.energy,
        report.momentum_lifted,
        report.momentum_density,
        report.residual_pde,
        report.inequalities.all_hold()
    );
    io::write_json(
        &ReportFile {
            metadata: metadata(&field, start),
            report,
        },
        out,
    )?;
    Ok(())
}

fn farfield_cmd(input: &Path, out: &Path, summary: &Path, ndir: usize, margin: f64) -> Result<()> {
    let start = Instant::now();
    let field = io::read_field(input)?;
    let report = farfield::farfield_report(&field, ndir, margin)?;
    let mut table = CsvTable::new(&[
        "radius",
        "angle",
        "u_check",
        "u_check_imag",
        "u_check_pred",
        "u3_scaled",
        "u3_pred",
    ]);
    for s in &report.samples {
        table.push_numbers(&[
            s.radius,
            s.angle,
            s.u_check,
            s.u_check_imag,
            s.predicted_u_check,
            s.u3,
            s.predicted_u3,
        ]);
    }
    table.write(out)?;
    let co = &report.coefficients;
    println!(
        "alpha = {:.10e}, beta2 = {:.10e}, lambda phase = {:.10}; u3 mismatch {:.3e}",
        co.alpha, co.beta[0], co.lambda_phase, report.mismatch_u3
    );
    for f in &report.fits {
        match (&f.fit, &f.error) {
            (Some(fit), _) => println!(
                "{}: exponent {:.4} (expected {})",
                f.quantity, fit.exponent, f.expected_exponent
            ),
            (None, Some(e)) => println!("{}: no fit ({e})", f.quantity),
            _ => {}
        }
    }
    io::write_json(
        &ReportFile {
            metadata: metadata(&field, start),
            report,
        },
        summary,
    )?;
    Ok(())
}
