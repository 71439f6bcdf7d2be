use std::path::PathBuf;

use ziptrace_core::hb::{analyze_slp_hb, djit_detect, goldilocks_detect, HbOptions};
use ziptrace_core::lockset::{analyze_slp_lockset, eraser_detect};
use ziptrace_core::report::{EngineKind, RaceReport, RunStats, ViolationReport};
use ziptrace_core::sequitur::sequitur_compress;
use ziptrace_core::sync_set::Universe;
use ziptrace_core::trace::Trace;
use ziptrace_core::{grammar_stats, Slp};

use super::{load_input, time_ms, CliError, Input};

#[derive(clap::Args)]
pub struct Args {
    /// Trace file (baseline engines) or grammar file (compressed engines).
    pub input: PathBuf,
    /// hb-compressed, hb-vc, hb-goldilocks, ls-compressed or ls-eraser.
    #[arg(short, long)]
    pub engine: EngineArg,
    /// Compress a trace for a compressed engine (or expand a grammar for a
    /// baseline engine) instead of rejecting the mismatch.
    #[arg(long)]
    pub auto: bool,
    /// Refuse inputs whose validation reports errors (broken fork/join
    /// structure, cross-thread lock acquires). By default the engines run
    /// anyway.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Clone)]
pub struct EngineArg(pub EngineKind);

impl std::str::FromStr for EngineArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(EngineArg)
    }
}

pub fn run(args: &Args) -> Result<u8, CliError> {
    let engine = args.engine.0;
    let input_name = args.input.display().to_string();
    let loaded = load_input(&args.input)?;

    // Resolve the engine/input pairing.
    let (trace, slp): (Option<Trace>, Option<Slp>) = match (loaded, engine.is_compressed()) {
        (Input::Trace(t), false) => (Some(t), None),
        (Input::Grammar(g), true) => (None, Some(g)),
        (Input::Trace(t), true) => {
            if !args.auto {
                return Err(CliError::usage(format!(
                    "{engine} expects a grammar file; pass --auto to compress {input_name} first"
                )));
            }
            let slp = sequitur_compress(&t);
            (None, Some(slp))
        }
        (Input::Grammar(g), false) => {
            if !args.auto {
                return Err(CliError::usage(format!(
                    "{engine} expects a trace file; pass --auto to expand {input_name} first"
                )));
            }
            let t = ziptrace_core::expand(&g)
                .map_err(|e| CliError::malformed(format!("{input_name}: {e}")))?;
            (Some(t), None)
        }
    };

    if args.strict {
        let checked = match (&trace, &slp) {
            (Some(t), _) => t.clone(),
            (None, Some(g)) => ziptrace_core::expand(g)
                .map_err(|e| CliError::malformed(format!("{input_name}: {e}")))?,
            (None, None) => unreachable!(),
        };
        let diagnostics = ziptrace_core::validate(&checked);
        for d in &diagnostics {
            eprintln!("{input_name}: {d}");
        }
        if !ziptrace_core::trace::is_error_free(&diagnostics) {
            return Err(CliError::malformed(format!(
                "{input_name}: validation failed under --strict"
            )));
        }
    }

    let found = match engine {
        EngineKind::HbCompressed => {
            let slp = slp.unwrap();
            let (analysis, wall_ms) = time_ms(|| analyze_slp_hb(&slp, HbOptions::default()));
            let analysis =
                analysis.map_err(|e| CliError::malformed(format!("{input_name}: {e}")))?;
            let mut report = RaceReport::new(engine, &input_name, analysis.race_found);
            report.stats = grammar_run_stats(&slp, wall_ms)?;
            println!("{}", report.to_json());
            analysis.race_found
        }
        EngineKind::HbVectorClock | EngineKind::HbGoldilocks => {
            let trace = trace.unwrap();
            let (race, wall_ms) = time_ms(|| {
                if engine == EngineKind::HbVectorClock {
                    djit_detect(&trace)
                } else {
                    goldilocks_detect(&trace)
                }
            });
            let mut report = RaceReport::new(engine, &input_name, race.is_some());
            report.first_race = race
                .as_ref()
                .map(|r| (r.first, r.second, r.var.as_str().to_string()));
            report.stats = trace_run_stats(&trace, wall_ms);
            println!("{}", report.to_json());
            race.is_some()
        }
        EngineKind::LsCompressed => {
            let slp = slp.unwrap();
            let (analysis, wall_ms) = time_ms(|| analyze_slp_lockset(&slp));
            let analysis =
                analysis.map_err(|e| CliError::malformed(format!("{input_name}: {e}")))?;
            let violations: Vec<String> = analysis
                .violations
                .iter()
                .map(|v| v.as_str().to_string())
                .collect();
            let found = !violations.is_empty();
            let mut report = ViolationReport::new(engine, &input_name, violations);
            report.stats = grammar_run_stats(&slp, wall_ms)?;
            println!("{}", report.to_json());
            found
        }
        EngineKind::LsEraser => {
            let trace = trace.unwrap();
            let (outcome, wall_ms) = time_ms(|| eraser_detect(&trace));
            let violations: Vec<String> = outcome
                .violations
                .iter()
                .map(|v| v.as_str().to_string())
                .collect();
            let found = !violations.is_empty();
            let mut report = ViolationReport::new(engine, &input_name, violations);
            report.first_empty = Some(
                outcome
                    .first_empty
                    .iter()
                    .map(|(x, i)| (x.as_str().to_string(), *i))
                    .collect(),
            );
            report.stats = trace_run_stats(&trace, wall_ms);
            println!("{}", report.to_json());
            found
        }
    };
    Ok(if found { 1 } else { 0 })
}

pub fn trace_run_stats(trace: &Trace, wall_ms: f64) -> RunStats {
    let universe = Universe::from_trace(trace);
    RunStats {
        events: trace.len() as u64,
        threads: universe.n_threads(),
        locks: universe.n_locks(),
        vars: universe.n_vars(),
        grammar_size: None,
        compression_ratio: None,
        wall_ms,
    }
}

pub fn grammar_run_stats(slp: &Slp, wall_ms: f64) -> Result<RunStats, CliError> {
    let stats =
        grammar_stats(slp).map_err(|e| CliError::malformed(format!("invalid grammar: {e}")))?;
    let universe = Universe::from_slp(slp);
    Ok(RunStats {
        events: stats.expanded_len,
        threads: universe.n_threads(),
        locks: universe.n_locks(),
        vars: universe.n_vars(),
        grammar_size: Some(stats.size),
        compression_ratio: Some(stats.compression_ratio),
        wall_ms,
    })
}
