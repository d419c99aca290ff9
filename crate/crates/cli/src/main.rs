//! `elongate`: solves, sweeps, audits and profiles elongated-domain problems.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{AuditArgs, Failure, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "elongate", version, about = "Energy minimization on elongated domains")]
struct Cli {
    /// Validate the configuration and report grid sizes without solving.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve at the largest elongation and audit the result.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve for every elongation, fit rates and check the asymptotic claims.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Audit the structural hypotheses of an energy density.
    AuditDensity {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// p-dirichlet, separable-p or quadratic.
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        r: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long = "Lambda")]
        big_lambda: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Saint-Venant decay profile at the largest elongation.
    Profile {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn init_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("ELONGATE_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().map_err(|_| Failure {
        code: EXIT_USAGE,
        error: anyhow::anyhow!("ELONGATE_THREADS must be a positive integer, got `{raw}`"),
    })?;
    if threads == 0 {
        return Err(Failure {
            code: EXIT_USAGE,
            error: anyhow::anyhow!("ELONGATE_THREADS must be positive"),
        });
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure {
            code: EXIT_USAGE,
            error: e.into(),
        })
}

fn run(cli: Cli) -> Result<(), Failure> {
    init_threads()?;
    let dry = cli.dry_run;
    match cli.command {
        Command::Solve { config, out } => commands::solve(&config, out.as_deref(), dry),
        Command::Sweep { config, out } => commands::sweep(&config, out.as_deref(), dry),
        Command::Profile { config, out } => commands::profile(&config, out.as_deref(), dry),
        Command::AuditDensity {
            config,
            out,
            kind,
            p,
            r,
            n,
            samples,
            seed,
            lambda,
            big_lambda,
            beta,
        } => commands::audit_density(
            &AuditArgs {
                config,
                out,
                kind,
                p,
                r,
                n,
                samples,
                seed,
                lambda,
                big_lambda,
                beta,
            },
            dry,
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code as u8)
        }
    }
}
