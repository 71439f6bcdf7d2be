use std::path::PathBuf;

use ziptrace_core::gen::{gen_trace, GenPattern, GenSpec};

use super::{write_file, CliError};

#[derive(clap::Args)]
pub struct Args {
    /// inc-loop, lock-loop or random.
    #[arg(long)]
    pub pattern: PatternArg,
    /// Loop iterations per worker (inc-loop/lock-loop) or event count
    /// (random).
    #[arg(short = 'n', long)]
    pub iterations: u64,
    #[arg(long, default_value_t = 4)]
    pub threads: u32,
    #[arg(long, default_value_t = 3)]
    pub locks: u32,
    #[arg(long, default_value_t = 4)]
    pub vars: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Trace file to write (stdout when omitted).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone)]
pub struct PatternArg(pub GenPattern);

impl std::str::FromStr for PatternArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(PatternArg)
    }
}

pub fn run(args: &Args) -> Result<u8, CliError> {
    let spec = GenSpec {
        pattern: args.pattern.0,
        iterations: args.iterations,
        threads: args.threads,
        locks: args.locks,
        vars: args.vars,
        seed: args.seed,
    };
    let trace = gen_trace(&spec);
    eprintln!("generated {} events", trace.len());
    match &args.output {
        Some(path) => write_file(path, &trace.to_text())?,
        None => print!("{}", trace.to_text()),
    }
    Ok(0)
}
