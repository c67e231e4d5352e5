//! `alh-lab`: batch front end for the alh-lab toolkit.
//!
//! Every subcommand writes one artifact, either JSON with the top-level
//! keys `command`, `inputs`, `results`, `provenance` and `warnings`, or
//! CSV with a `key,value` header and one row per scalar result.
//!
//! Exit codes:
//!
//! * `0`: success.
//! * `1`: usage error (bad flag, value, configuration file or output path).
//! * `2`: numerical failure; the report is still written as a diagnostic.
//! * `3`: an exact identity came out false; the report is still written.
//!
//! The environment variable `ALH_LAB_THREADS` bounds the number of worker
//! threads used by parallel sweeps inside the library.

mod commands;
mod config;
mod error;
mod output;

use clap::{Parser, Subcommand};
use config::{Format, RunConfig};
use error::{CliError, CliResult};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "alh-lab",
    version,
    about = "Exact and numerical checks for ALH* model geometries"
)]
struct Cli {
    /// Output format (overrides the configuration file).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// File of key=value lines overriding the defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for randomly sampled points.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the artifact to this file instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ricci and scalar curvature of a model metric.
    Curvature {
        /// gh, a, model, flat or calabi:N.
        #[arg(long)]
        metric: String,
        /// Evaluate at x,y1,y2,theta.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        at: Option<Vec<f64>>,
        /// Print the exact rational expressions.
        #[arg(long)]
        exact: bool,
    },
    /// Indicial roots, nullvectors and weights of a reduced operator.
    Indicial {
        /// scalar, d00-even or d00-odd.
        #[arg(long)]
        operator: String,
        /// Also list the indicial weights.
        #[arg(long)]
        weights: bool,
    },
    /// Fourier mode solvers.
    Modes {
        #[command(subcommand)]
        action: ModesCommand,
    },
    /// Deformation families of the parameter space of triples.
    Deform {
        /// calabi-scaling, calabi-modulus, sf-theta, sf-y1 or sf-y2.
        #[arg(long)]
        family: String,
        /// Rate alpha, rates alpha,beta, or twist parameter c.
        #[arg(long, allow_hyphen_values = true)]
        param: String,
        /// Curve parameter at which the Calabi families are evaluated.
        #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
        t: f64,
        /// Report the second-order identity in both normalisations.
        #[arg(long)]
        report_mm: bool,
    },
    /// L2 cohomology and moduli dimension table.
    Cohomology {
        /// Degree of the circle bundle at infinity, 1..=9.
        #[arg(long, allow_negative_numbers = true)]
        b: i64,
    },
    /// Verify the blow-up lifts of the structure vector fields.
    LiftCheck,
    /// Q of the standard triple and gauge residual examples.
    TripleQ {
        /// Rational scale of the perturbation in the third example.
        #[arg(long, default_value = "1/100", allow_hyphen_values = true)]
        eps: String,
    },
}

#[derive(Debug, Subcommand)]
enum ModesCommand {
    /// Solve for the decaying solution of one mode and fit its tail.
    Solve {
        /// Circle frequency.
        #[arg(long, allow_negative_numbers = true)]
        k: i64,
        /// Torus frequency M1,M2.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        m: Vec<i64>,
        /// Number of grid intervals (overrides the configuration).
        #[arg(long)]
        grid: Option<usize>,
        /// Include the tail fit.
        #[arg(long)]
        fit: bool,
        /// Include the nodes and values of the solution.
        #[arg(long)]
        solution: bool,
    },
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("ALH_LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Usage(format!(
            "ALH_LAB_THREADS must be a positive integer, got '{v}'"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> CliResult<Option<CliError>> {
    configure_threads()?;
    let mut cfg = RunConfig::default();
    if let Some(p) = &cli.config {
        cfg.load_file(p)?;
    }
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let outcome = match &cli.command {
        Command::Curvature { metric, at, exact } => {
            commands::curvature_cmd(metric, at.as_deref(), *exact)?
        }
        Command::Indicial { operator, weights } => commands::indicial_cmd(operator, *weights)?,
        Command::Modes {
            action:
                ModesCommand::Solve {
                    k,
                    m,
                    grid,
                    fit,
                    solution,
                },
        } => {
            if let Some(n) = grid {
                cfg.modes.n = *n;
            }
            commands::modes_solve_cmd(*k, m, *fit, *solution, &cfg)?
        }
        Command::Deform {
            family,
            param,
            t,
            report_mm,
        } => commands::deform_cmd(family, param, *t, *report_mm)?,
        Command::Cohomology { b } => commands::cohomology_cmd(*b)?,
        Command::LiftCheck => commands::lift_check_cmd(cfg.seed)?,
        Command::TripleQ { eps } => commands::triple_q_cmd(eps)?,
    };
    let mut report = outcome.report;
    if let Some(f) = &outcome.failure {
        report.warnings.push(f.to_string());
    }
    let text = report.render(cfg.format)?;
    output::emit(&text, cli.output.as_deref())?;
    Ok(outcome.failure)
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = match run(cli) {
        Ok(None) => 0,
        Ok(Some(failure)) => {
            eprintln!("alh-lab: {failure}");
            failure.exit_code()
        }
        Err(e) => {
            eprintln!("alh-lab: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
