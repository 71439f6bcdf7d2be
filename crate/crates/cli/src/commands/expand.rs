use std::path::PathBuf;

use super::{load_input, write_file, CliError, Input};

#[derive(clap::Args)]
pub struct Args {
    /// Grammar file to expand.
    pub input: PathBuf,
    /// Trace file to write (stdout when omitted).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

pub fn run(args: &Args) -> Result<u8, CliError> {
    let slp = match load_input(&args.input)? {
        Input::Grammar(slp) => slp,
        Input::Trace(_) => {
            return Err(CliError::usage(format!(
                "{} is a trace file, not a grammar",
                args.input.display()
            )))
        }
    };
    let trace = ziptrace_core::expand(&slp)
        .map_err(|e| CliError::malformed(format!("{}: {e}", args.input.display())))?;
    match &args.output {
        Some(path) => write_file(path, &trace.to_text())?,
        None => print!("{}", trace.to_text()),
    }
    Ok(0)
}
