mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Traveling waves of the easy-plane Landau-Lifshitz equation.
#[derive(Debug, Parser)]
#[command(name = "llwave", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Energy-momentum curve of the 1D solitons.
    Curve1d {
        #[arg(long, default_value_t = 0.05)]
        cmin: f64,
        #[arg(long, default_value_t = 0.95)]
        cmax: f64,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        #[arg(long, default_value = "curve.csv")]
        out: PathBuf,
    },
    /// Samples of one 1D soliton.
    Profile1d {
        #[arg(long)]
        c: f64,
        #[arg(long, default_value_t = 20.0)]
        xmax: f64,
        #[arg(long, default_value_t = 401)]
        n: usize,
        #[arg(long, default_value = "profile.csv")]
        out: PathBuf,
    },
    /// L^{4/3} norm of the symbol L_c in the plane.
    KernelNorm {
        #[arg(long)]
        c: f64,
    },
    /// Value of a Fourier multiplier at one frequency.
    Symbol {
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 0.0)]
        c: f64,
        /// Frequency as comma-separated components, e.g. `1,0`.
        #[arg(long, value_parser = parse_vector, allow_hyphen_values = true)]
        xi: Frequency,
        #[arg(long, default_value_t = 1)]
        j: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
    },
    /// Rescaled physical-space kernel against its far-field limit.
    KernelFarfield {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        c: f64,
        #[arg(long = "R", default_value_t = 20.0)]
        radius: f64,
        #[arg(long, default_value_t = 16)]
        ndir: usize,
        #[arg(long, default_value_t = 1)]
        j: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 1024)]
        n: usize,
        /// Box length; defaults to 10 R.
        #[arg(long)]
        length: Option<f64>,
        #[arg(long, default_value = "kernel_farfield.csv")]
        out: PathBuf,
    },
    /// Solve for a 2D traveling wave.
    Solve2d {
        #[arg(long)]
        c: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long, default_value = "field.llfw")]
        out: PathBuf,
        /// Iteration log; defaults to the output path with `.log.csv`.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Solve along a range of speeds, seeding each from the last.
    Continuation {
        #[arg(long)]
        cstart: f64,
        #[arg(long)]
        cend: f64,
        #[arg(long, default_value_t = 5)]
        steps: usize,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Diagnostics report for a field file.
    Diagnose {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "report.json")]
        out: PathBuf,
        #[arg(long, default_value_t = llwave::field::DEFAULT_MARGIN)]
        margin: f64,
    },
    /// Far-field coefficients and measured-versus-predicted asymptotics.
    Farfield {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "farfield.csv")]
        out: PathBuf,
        /// Coefficients and decay fits; defaults to the output path with
        /// `.json`.
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(long, default_value_t = 16)]
        ndir: usize,
        #[arg(long, default_value_t = llwave::field::DEFAULT_MARGIN)]
        margin: f64,
    },
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long, default_value_t = 256)]
    nx: usize,
    #[arg(long, default_value_t = 256)]
    ny: usize,
    /// Box length along x1; defaults to 40/√(1-c²).
    #[arg(long)]
    lx: Option<f64>,
    /// Box length along x2; defaults to 40/√(1-c²).
    #[arg(long)]
    ly: Option<f64>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long, default_value_t = 0.3)]
    damping: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 2000)]
    max_iter: usize,
    /// `bump`, `lump` or `file:PATH`.
    #[arg(long, default_value = "bump")]
    init: String,
    #[arg(long, default_value_t = 0.3)]
    amp: f64,
    /// Skip the final projection of |u| onto 1.
    #[arg(long)]
    no_renorm: bool,
}

#[derive(Clone, Debug)]
struct Frequency(Vec<f64>);

fn parse_vector(s: &str) -> Result<Frequency, String> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()
        .map(Frequency)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
