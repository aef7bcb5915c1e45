use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};
use sldsl_cli::commands::{self, SubeqTarget};
use sldsl_cli::verify::{run_suite, SUITES};
use sldsl_cli::{CliError, EXIT_UNCERTIFIED};
use sldsl_core::subequation::DEFAULT_EPS_INT;
use sldsl_core::DEFAULT_TOL_S;

#[derive(Parser)]
#[command(name = "sldsl", version, about = "Space-time Lagrangian angles and the degenerate special Lagrangian Dirichlet problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct MatrixInput {
    /// Rows separated by `;`, entries by `,`, e.g. "1,0;0,1".
    #[arg(long, allow_hyphen_values = true)]
    matrix: Option<String>,
    /// File with one row per line.
    #[arg(long, conflicts_with = "matrix")]
    file: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Extended space-time angle of an (n+1)x(n+1) symmetric matrix.
    Angle {
        #[command(flatten)]
        input: MatrixInput,
        /// Expected spatial dimension.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_TOL_S)]
        tol_s: f64,
    },
    /// Subequation membership.
    Subeq {
        #[command(subcommand)]
        action: SubeqAction,
    },
    /// Solve the Dirichlet problem described by a config file.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Reject unknown config keys.
        #[arg(long, default_value_t = true, action = ArgAction::Set)]
        strict: bool,
    },
    /// Randomized invariant suites.
    Verify {
        /// One of angle, subeq, geometry, solver, geodesic, all.
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override every numeric tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Grid refinement study.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: u32,
        #[arg(long, default_value_t = true, action = ArgAction::Set)]
        strict: bool,
    },
}

#[derive(Subcommand)]
enum SubeqAction {
    /// Check a matrix against the DSL branch (theta, k) or, with --sl, a
    /// spatial matrix against the special Lagrangian level c.
    Check {
        #[command(flatten)]
        input: MatrixInput,
        #[arg(long, allow_hyphen_values = true, required_unless_present = "sl")]
        theta: Option<f64>,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        k: i64,
        #[arg(long, allow_hyphen_values = true, conflicts_with = "theta")]
        sl: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_EPS_INT)]
        eps_int: f64,
        #[arg(long, default_value_t = DEFAULT_TOL_S)]
        tol_s: f64,
    },
}

fn verify(out: &mut impl Write, suite: &str, seed: u64, tol: Option<f64>) -> Result<i32, CliError> {
    let names: Vec<&str> = if suite == "all" { SUITES.to_vec() } else { vec![suite] };
    let mut failed = 0;
    for name in names {
        writeln!(out, "[{name}] seed {seed}")?;
        for check in run_suite(name, seed, tol)? {
            writeln!(out, "{}", check.line())?;
            failed += usize::from(!check.ok());
        }
    }
    if failed > 0 {
        writeln!(out, "{failed} check(s) failed")?;
        return Ok(EXIT_UNCERTIFIED);
    }
    writeln!(out, "all checks passed")?;
    Ok(0)
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let mut out = std::io::stdout().lock();
    match cli.command {
        Command::Angle { input, n, tol_s } => {
            let a = commands::read_matrix(input.matrix.as_deref(), input.file.as_deref())?;
            commands::cmd_angle(&mut out, &a, n, tol_s)
        }
        Command::Subeq {
            action: SubeqAction::Check { input, theta, k, sl, eps_int, tol_s },
        } => {
            let a = commands::read_matrix(input.matrix.as_deref(), input.file.as_deref())?;
            let target = match (sl, theta) {
                (Some(c), _) => SubeqTarget::Sl { c },
                (None, Some(theta)) => SubeqTarget::Dsl { theta, k },
                (None, None) => return Err(CliError::Input("give --theta or --sl".into())),
            };
            commands::cmd_subeq(&mut out, &a, target, eps_int, tol_s)
        }
        Command::Solve { config, out: dir, strict } => commands::cmd_solve(&mut out, &config, &dir, strict),
        Command::Verify { suite, seed, tol } => verify(&mut out, &suite, seed, tol),
        Command::Convergence { config, levels, strict } => commands::cmd_convergence(&mut out, &config, levels, strict),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
