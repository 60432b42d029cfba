use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hamsfl_cli::{parse_problem, run_command, Command};

/// Spectral flow and bifurcation analysis of periodic Hamiltonian families.
#[derive(Debug, Parser)]
#[command(name = "hamsfl", version)]
struct Args {
    /// Problem file (JSON).
    #[arg(long)]
    problem: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum)]
    cmd: Command,
    /// Galerkin truncation; overrides `K` in the problem file.
    #[arg(long = "K")]
    k: Option<usize>,
    /// Points of the lambda scan grid; overrides `grid` in the problem file.
    #[arg(long)]
    grid: Option<usize>,
    /// Evaluate part (iii) from condition (Delta) alone.
    #[arg(long)]
    relax_ii: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = parse_problem(&args.problem).and_then(|mut problem| {
        if let Some(k) = args.k {
            problem.k = k;
        }
        if let Some(g) = args.grid {
            problem.grid = g;
        }
        problem.relax_ii |= args.relax_ii;
        problem.validate()?;
        run_command(args.cmd, &problem, &args.out)
    });
    match result {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            println!("{}", outcome.summary);
            ExitCode::from(outcome.status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
