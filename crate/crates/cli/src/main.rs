use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kjlab_cli::{run_scenario, Scenario, TaskKind};

// Fields are rebuilt every step; the system allocator returns large buffers
// to the kernel and pays page faults on every rebuild.
#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

#[derive(Parser)]
#[command(
    name = "kjlab",
    version,
    about = "Run a kjlab scenario and write its report"
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Evaluate functionals and their identities on given potentials.
    Functionals(Args),
    /// Run the negative gradient flow.
    Flow(Args),
    /// Compute a geodesic segment between two potentials.
    Geodesic(Args),
    /// Run the acceptance suite.
    Verify(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Scenario file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the scenario's `output` or `./out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.verb {
        Verb::Functionals(a) => (TaskKind::Functionals, a),
        Verb::Flow(a) => (TaskKind::Flow, a),
        Verb::Geodesic(a) => (TaskKind::Geodesic, a),
        Verb::Verify(a) => (TaskKind::Verify, a),
    };
    let scenario = match Scenario::load(&args.config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let out = args
        .out
        .or_else(|| scenario.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    match run_scenario(&scenario, kind, &out) {
        Ok(summary) => {
            for row in &summary.checks {
                let c = &row.check;
                let mark = match (c.pass, row.asserted) {
                    (true, _) => "PASS",
                    (false, true) => "FAIL",
                    (false, false) => "note",
                };
                println!(
                    "{mark} {:<44} lhs={:<12.4e} rhs={:<12.4e} tol={:.1e}",
                    c.name, c.lhs, c.rhs, c.tolerance
                );
            }
            if let Some(e) = &summary.error {
                eprintln!("error ({}): {}", e.kind, e.message);
            }
            ExitCode::from(summary.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
