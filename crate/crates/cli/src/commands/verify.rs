use std::path::PathBuf;

use ziptrace_core::verify::{run_campaign, run_differential, CampaignConfig};

use super::{load_input, oracle_cap, CliError, Input};

#[derive(clap::Args)]
pub struct Args {
    /// Trace file to verify; omit to fuzz random traces instead.
    pub input: Option<PathBuf>,
    /// Number of random traces.
    #[arg(long, default_value_t = 500)]
    pub runs: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Maximum events per random trace.
    #[arg(long, default_value_t = 200)]
    pub max_events: usize,
}

pub fn run(args: &Args) -> Result<u8, CliError> {
    let cap = oracle_cap();
    match &args.input {
        Some(path) => {
            let trace = match load_input(path)? {
                Input::Trace(t) => t,
                Input::Grammar(g) => ziptrace_core::expand(&g)
                    .map_err(|e| CliError::malformed(format!("{}: {e}", path.display())))?,
            };
            let d = run_differential(&trace, cap);
            println!(
                "{}",
                serde_json::json!({
                    "v": 1,
                    "input": path.display().to_string(),
                    "agreed": d.agreed(),
                    "race": {
                        "hb-vc": d.race_vc,
                        "hb-goldilocks": d.race_goldilocks,
                        "hb-compressed": d.race_compressed,
                        "oracle": d.race_oracle,
                    },
                    "violations": {
                        "ls-eraser": d.violations_eraser,
                        "ls-compressed": d.violations_compressed,
                        "oracle": d.violations_oracle,
                    },
                })
            );
            Ok(if d.agreed() { 0 } else { 1 })
        }
        None => {
            let cfg = CampaignConfig {
                runs: args.runs,
                seed: args.seed,
                max_events: args.max_events,
                oracle_cap: cap,
                ..CampaignConfig::default()
            };
            let disagreements = run_campaign(&cfg);
            eprintln!(
                "verified {} random traces: {} disagreement(s)",
                args.runs,
                disagreements.len()
            );
            for d in &disagreements {
                println!(
                    "{}",
                    serde_json::json!({
                        "v": 1,
                        "seed": d.seed,
                        "race": {
                            "hb-vc": d.differential.race_vc,
                            "hb-goldilocks": d.differential.race_goldilocks,
                            "hb-compressed": d.differential.race_compressed,
                            "oracle": d.differential.race_oracle,
                        },
                        "violations": {
                            "ls-eraser": d.differential.violations_eraser,
                            "ls-compressed": d.differential.violations_compressed,
                            "oracle": d.differential.violations_oracle,
                        },
                        "minimized_trace": d.minimized.to_text(),
                    })
                );
            }
            Ok(if disagreements.is_empty() { 0 } else { 1 })
        }
    }
}
