//! Command-line driver. Exit codes: 0 all checks passed, 1 tool error
//! (bad config, I/O, solver preconditions), 2 a check or the run itself
//! failed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ricci2d::runner::{
    convergence_study, default_output_root, resume_run_with_root, run_batch,
    run_scenario_with_root, RunOutcome,
};

#[derive(Parser)]
#[command(name = "ricci2d", about = "2D Ricci flow laboratory", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file and evaluate its checks.
    Run {
        scenario: PathBuf,
        /// Output root (defaults to $RICCI2D_OUTPUT_ROOT or the scenario's
        /// directory).
        #[arg(long)]
        output_root: Option<PathBuf>,
    },
    /// Continue a run from a saved snapshot to the scenario's end time.
    Resume {
        snapshot: PathBuf,
        scenario: PathBuf,
        #[arg(long)]
        output_root: Option<PathBuf>,
    },
    /// Grid-refinement study of a scenario with exact initial/boundary data.
    Study {
        scenario: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long)]
        output_root: Option<PathBuf>,
    },
    /// Run every .toml scenario in a directory.
    Batch {
        dir: PathBuf,
        #[arg(long)]
        output_root: Option<PathBuf>,
    },
}

fn print_outcome(outcome: &RunOutcome) {
    if let Some(msg) = &outcome.failure {
        println!("{}: RUN FAILED: {msg}", outcome.name);
    }
    for v in &outcome.report.verdicts {
        println!(
            "{}: {} {} (worst {:.3e}, tol {:.3e})",
            outcome.name,
            v.name,
            if v.passed { "PASS" } else { "FAIL" },
            v.worst_violation,
            v.tolerance_used
        );
    }
    println!(
        "{}: outputs in {}",
        outcome.name,
        outcome.dir.display()
    );
}

fn run() -> Result<u8, ricci2d::RicciError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            scenario,
            output_root,
        } => {
            let root = output_root.unwrap_or_else(|| default_output_root(&scenario));
            let outcome = run_scenario_with_root(&scenario, &root)?;
            print_outcome(&outcome);
            Ok(if outcome.all_passed() { 0 } else { 2 })
        }
        Command::Resume {
            snapshot,
            scenario,
            output_root,
        } => {
            let root = output_root.unwrap_or_else(|| default_output_root(&scenario));
            let outcome = resume_run_with_root(&snapshot, &scenario, &root)?;
            print_outcome(&outcome);
            Ok(if outcome.failure.is_none() { 0 } else { 2 })
        }
        Command::Study {
            scenario,
            levels,
            output_root,
        } => {
            let root = output_root.unwrap_or_else(|| default_output_root(&scenario));
            let fit = convergence_study(&scenario, levels, &root)?;
            for (dx, err) in &fit.points {
                println!("dx = {dx:.6e}  sup error = {err:.6e}");
            }
            match fit.order {
                Some(p) => println!("fitted order: {p:.3}"),
                None => println!("errors at machine precision; order fit degenerate"),
            }
            Ok(0)
        }
        Command::Batch { dir, output_root } => {
            let root = output_root.unwrap_or_else(|| default_output_root(&dir.join(".")));
            let results = run_batch(&dir, &root)?;
            let mut code = 0u8;
            for (path, res) in &results {
                match res {
                    Ok(outcome) => {
                        print_outcome(outcome);
                        if !outcome.all_passed() {
                            code = code.max(2);
                        }
                    }
                    Err(e) => {
                        eprintln!("{}: error: {e}", path.display());
                        code = code.max(1);
                    }
                }
            }
            Ok(code)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
