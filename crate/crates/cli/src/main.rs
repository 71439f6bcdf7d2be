//! `ziptrace`: compress concurrency traces into grammars and hunt races on
//! either form.
//!
//! Exit codes: 0 clean, 1 race/violation found (or verification
//! disagreement), 2 usage or I/O error, 3 malformed input.

mod commands;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{analyze, bench, compress, expand, gen, verify};

#[derive(Parser)]
#[command(
    name = "ziptrace",
    version,
    about = "Race detection on grammar-compressed concurrency traces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress a trace file into an SLP grammar file.
    Compress(compress::Args),
    /// Expand an SLP grammar file back into a trace file.
    Expand(expand::Args),
    /// Run one analysis engine over a trace or grammar file.
    Analyze(analyze::Args),
    /// Cross-check all engines (and the brute-force oracles) for agreement.
    Verify(verify::Args),
    /// Generate a synthetic trace.
    Gen(gen::Args),
    /// Time engines against each other and report speedups.
    Bench(bench::Args),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compress(args) => compress::run(&args),
        Command::Expand(args) => expand::run(&args),
        Command::Analyze(args) => analyze::run(&args),
        Command::Verify(args) => verify::run(&args),
        Command::Gen(args) => gen::run(&args),
        Command::Bench(args) => bench::run(&args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("ziptrace: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}
