//! Runs the eleven acceptance criteria at desk scale and prints one
//! PASS/FAIL line per criterion. Built without the libtest harness so the
//! lines are never captured.

use std::process::ExitCode;
use std::time::Instant;

use kjlab_cli::suite::{Suite, SuiteSettings, TITLES};

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

fn main() -> ExitCode {
    let suite = Suite::new(SuiteSettings::default());
    let mut failed = Vec::new();
    for id in 1..=TITLES.len() {
        let start = Instant::now();
        let c = suite.run(id);
        let verdict = if c.pass() { "PASS" } else { "FAIL" };
        println!(
            "{verdict} criterion {id:>2}: {} ({:.1?})",
            c.title,
            start.elapsed()
        );
        for row in &c.rows {
            let r = &row.check;
            let mark = match (r.pass, row.asserted) {
                (true, _) => "ok  ",
                (false, true) => "FAIL",
                (false, false) => "info",
            };
            println!(
                "    {mark} {} lhs={:.4e} rhs={:.4e} tol={:.1e}",
                r.name, r.lhs, r.rhs, r.tolerance
            );
        }
        for n in &c.notes {
            println!("    note: {n}");
        }
        if let Some(e) = &c.error {
            println!("    error: {e}");
        }
        if !c.pass() {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", TITLES.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
