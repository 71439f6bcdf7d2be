use std::path::PathBuf;

use ziptrace_core::sequitur::sequitur_compress;
use ziptrace_core::{grammar_stats, normalize, serialize_slp};

use super::{read_file, time_ms, write_file, CliError};

#[derive(clap::Args)]
pub struct Args {
    /// Trace file to compress.
    pub input: PathBuf,
    /// Grammar file to write.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Split terminal runs of at least this length out of mixed rules.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(2..))]
    pub normalize_threshold: u64,
    /// Skip run splitting entirely.
    #[arg(long)]
    pub no_normalize: bool,
}

pub fn run(args: &Args) -> Result<u8, CliError> {
    let text = read_file(&args.input)?;
    let trace = ziptrace_core::parse_trace(&text)
        .map_err(|e| CliError::malformed(format!("{}: {e}", args.input.display())))?;
    if trace.is_empty() {
        eprintln!("warning: {} has no events", args.input.display());
    }
    let (slp, compress_ms) = time_ms(|| {
        let slp = sequitur_compress(&trace);
        if args.no_normalize {
            slp
        } else {
            normalize(&slp, args.normalize_threshold as usize)
        }
    });
    write_file(&args.output, &serialize_slp(&slp))?;
    let stats = grammar_stats(&slp).expect("compressor output is well-formed");
    let mut json = serde_json::to_value(&stats).expect("stats serialize");
    json["compress_ms"] = serde_json::json!(compress_ms);
    println!("{json}");
    Ok(0)
}
