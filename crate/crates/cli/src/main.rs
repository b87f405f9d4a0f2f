#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::json;

use args::Cli;
use commands::CliError;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cmd = &cli.command;
    let common = cmd.common();
    let started = Instant::now();
    let outcome = match commands::run(cmd) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(match e {
                CliError::Usage(_) => 2,
                CliError::Failed(_) => 1,
            });
        }
    };
    let report = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": cmd.name(),
        "config": cmd,
        "seed": common.seed,
        "passed": outcome.passed,
        "result": outcome.result,
        "elapsed_ms": started.elapsed().as_secs_f64() * 1e3,
    });
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    if let Some(path) = &common.out {
        let bytes = outcome.artifact.unwrap_or_else(|| text.clone().into_bytes());
        if let Err(e) = chirp_rip::io::write_atomic(path, &bytes) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(1);
        }
    }
    print!("{text}");
    if outcome.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
