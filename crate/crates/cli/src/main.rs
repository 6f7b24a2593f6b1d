//! `fsplan` command line.
//!
//! Exit codes: 0 feasible or success, 1 error, 2 oscillating, 3 iteration
//! cap reached, 4 attractor verification found violations, 5 a `repro`
//! scenario did not show the expected behavior.

mod analyze;
mod repro;
mod solve;
mod source;

use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "fsplan", version, about = "Fixed-outline floorplanning by alternating projections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run MAP, RMAP or Per-RMAP and write placement, SVG, trajectory and summary.
    Solve(solve::SolveArgs),
    /// Radius of attraction of a feasible placement.
    Analyze(analyze::AnalyzeArgs),
    /// Replay one of the small oscillation examples.
    Repro(repro::ReproArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors share the generic error code; help and version are not errors
            std::process::exit(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => solve::cmd_solve(a),
        Command::Analyze(a) => analyze::cmd_analyze(a),
        Command::Repro(a) => repro::cmd_repro(a),
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}
