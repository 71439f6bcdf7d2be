use std::path::PathBuf;

use ziptrace_core::gen::{gen_trace, GenSpec};
use ziptrace_core::hb::{analyze_slp_hb, djit_detect, goldilocks_detect, HbOptions};
use ziptrace_core::lockset::{analyze_slp_lockset, eraser_detect};
use ziptrace_core::report::EngineKind;
use ziptrace_core::sequitur::sequitur_compress;
use ziptrace_core::sync_set::Universe;
use ziptrace_core::trace::Trace;

use super::{read_file, time_ms, CliError};

#[derive(clap::Args)]
pub struct Args {
    /// Trace files to benchmark.
    pub inputs: Vec<PathBuf>,
    /// Generated workloads, as `pattern:iterations[:seed]`.
    #[arg(long = "gen", value_name = "SPEC")]
    pub gen_specs: Vec<String>,
    /// Comma-separated engine list (default: all five).
    #[arg(long, value_delimiter = ',')]
    pub engines: Vec<String>,
    /// Runs per engine; the median wall time is reported.
    #[arg(long, default_value_t = 3)]
    pub repeat: usize,
}

struct BenchInput {
    name: String,
    trace: Trace,
    /// Time to parse or generate the input.
    prepare_ms: f64,
}

fn parse_gen_spec(spec: &str) -> Result<GenSpec, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() < 2 || parts.len() > 3 {
        return Err(CliError::usage(format!(
            "bad --gen spec {spec:?}; expected pattern:iterations[:seed]"
        )));
    }
    let pattern = parts[0]
        .parse()
        .map_err(|e: String| CliError::usage(format!("bad --gen spec {spec:?}: {e}")))?;
    let iterations: u64 = parts[1]
        .parse()
        .map_err(|_| CliError::usage(format!("bad iteration count in {spec:?}")))?;
    let seed: u64 = match parts.get(2) {
        Some(s) => s
            .parse()
            .map_err(|_| CliError::usage(format!("bad seed in {spec:?}")))?,
        None => 0,
    };
    Ok(GenSpec {
        pattern,
        iterations,
        threads: 4,
        locks: 3,
        vars: 4,
        seed,
    })
}

fn median(mut samples: Vec<f64>) -> f64 {
    samples.sort_by(|a, b| a.total_cmp(b));
    samples[samples.len() / 2]
}

pub fn run(args: &Args) -> Result<u8, CliError> {
    let engines: Vec<EngineKind> = if args.engines.is_empty() {
        EngineKind::ALL.to_vec()
    } else {
        args.engines
            .iter()
            .map(|s| s.parse().map_err(CliError::usage))
            .collect::<Result<_, _>>()?
    };
    let repeat = args.repeat.max(1);

    let mut inputs = Vec::new();
    for path in &args.inputs {
        let text = read_file(path)?;
        let (trace, prepare_ms) = time_ms(|| ziptrace_core::parse_trace(&text));
        let trace =
            trace.map_err(|e| CliError::malformed(format!("{}: {e}", path.display())))?;
        inputs.push(BenchInput {
            name: path.display().to_string(),
            trace,
            prepare_ms,
        });
    }
    for spec_text in &args.gen_specs {
        let spec = parse_gen_spec(spec_text)?;
        let (trace, prepare_ms) = time_ms(|| gen_trace(&spec));
        inputs.push(BenchInput {
            name: format!("gen:{spec_text}"),
            trace,
            prepare_ms,
        });
    }
    if inputs.is_empty() {
        return Err(CliError::usage(
            "nothing to benchmark; pass trace files or --gen specs",
        ));
    }

    for input in &inputs {
        let universe = Universe::from_trace(&input.trace);
        let needs_grammar = engines.iter().any(|e| e.is_compressed());
        let (slp, compress_ms) = if needs_grammar {
            let (slp, ms) = time_ms(|| sequitur_compress(&input.trace));
            (Some(slp), Some(ms))
        } else {
            (None, None)
        };
        let grammar_stats = slp
            .as_ref()
            .map(|s| ziptrace_core::grammar_stats(s).expect("compressor output is well-formed"));

        let mut rows = Vec::new();
        for &engine in &engines {
            let mut samples = Vec::with_capacity(repeat);
            let mut found = None;
            for _ in 0..repeat {
                let (hit, ms) = match engine {
                    EngineKind::HbCompressed => time_ms(|| {
                        analyze_slp_hb(slp.as_ref().unwrap(), HbOptions::default())
                            .unwrap()
                            .race_found
                    }),
                    EngineKind::HbVectorClock => time_ms(|| djit_detect(&input.trace).is_some()),
                    EngineKind::HbGoldilocks => {
                        time_ms(|| goldilocks_detect(&input.trace).is_some())
                    }
                    EngineKind::LsCompressed => time_ms(|| {
                        !analyze_slp_lockset(slp.as_ref().unwrap())
                            .unwrap()
                            .violations
                            .is_empty()
                    }),
                    EngineKind::LsEraser => {
                        time_ms(|| !eraser_detect(&input.trace).violations.is_empty())
                    }
                };
                found = Some(hit);
                samples.push(ms);
            }
            rows.push((engine, median(samples), found.unwrap_or(false)));
        }

        // Speedup: best baseline of the same family over the compressed
        // engine, when both ran.
        let best_baseline = |hb: bool| {
            rows.iter()
                .filter(|(e, _, _)| e.is_hb() == hb && !e.is_compressed())
                .map(|&(_, ms, _)| ms)
                .min_by(|a, b| a.total_cmp(b))
        };
        for &(engine, wall_ms, found) in &rows {
            let speedup = if engine.is_compressed() {
                best_baseline(engine.is_hb()).map(|base| base / wall_ms.max(1e-9))
            } else {
                None
            };
            let mut row = serde_json::json!({
                "v": 1,
                "bench": input.name,
                "engine": engine.as_str(),
                "events": input.trace.len(),
                "threads": universe.n_threads(),
                "locks": universe.n_locks(),
                "vars": universe.n_vars(),
                "prepare_ms": input.prepare_ms,
                "wall_ms": wall_ms,
                "found": found,
                "repeat": repeat,
            });
            if let (Some(stats), Some(ms)) = (&grammar_stats, compress_ms) {
                row["grammar_size"] = serde_json::json!(stats.size);
                row["compression_ratio"] = serde_json::json!(stats.compression_ratio);
                row["compress_ms"] = serde_json::json!(ms);
            }
            if let Some(s) = speedup {
                row["speedup"] = serde_json::json!(s);
            }
            println!("{row}");
        }
    }
    Ok(0)
}
