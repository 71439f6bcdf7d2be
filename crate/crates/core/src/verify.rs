//! Differential verification: every engine, one trace, one verdict.
//!
//! The compressed analyses must agree with the uncompressed baselines and,
//! under the oracle cap, with the brute-force definitions: race existence
//! across hb-compressed / vector clocks / Goldilocks / closure oracle, and
//! the violated-variable set across ls-compressed / Eraser / lockset
//! oracle.

use crate::gen::{random_trace, RandomConfig};
use crate::hb::{self, oracle::HbClosure};
use crate::lockset;
use crate::sequitur::sequitur_compress;
use crate::trace::{is_error_free, validate, Trace};

/// All engine answers for one trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Differential {
    pub race_vc: bool,
    pub race_goldilocks: bool,
    pub race_compressed: bool,
    /// `None` when the trace exceeds the oracle cap.
    pub race_oracle: Option<bool>,
    pub violations_eraser: Vec<String>,
    pub violations_compressed: Vec<String>,
    pub violations_oracle: Option<Vec<String>>,
}

impl Differential {
    /// Do all race answers and all violation sets agree?
    pub fn agreed(&self) -> bool {
        let race_ok = self.race_vc == self.race_compressed
            && self.race_goldilocks == self.race_compressed
            && self.race_oracle.is_none_or(|r| r == self.race_compressed);
        let viol_ok = self.violations_eraser == self.violations_compressed
            && self
                .violations_oracle
                .as_ref()
                .is_none_or(|v| v == &self.violations_compressed);
        race_ok && viol_ok
    }
}

/// Runs all five engines (plus the brute-force oracles when the trace fits
/// under `oracle_cap`) and collects their answers.
pub fn run_differential(trace: &Trace, oracle_cap: usize) -> Differential {
    let slp = sequitur_compress(trace);
    let race_compressed = hb::analyze_slp_hb(&slp, hb::HbOptions::default())
        .expect("sequitur output is a valid grammar")
        .race_found;
    let ls_compressed = lockset::analyze_slp_lockset(&slp)
        .expect("sequitur output is a valid grammar");
    let (race_oracle, violations_oracle) = if trace.len() <= oracle_cap {
        let closure = HbClosure::build(trace, oracle_cap).unwrap();
        let truth = lockset::oracle::lockset_oracle(trace, oracle_cap).unwrap();
        (
            Some(hb::oracle::has_race(trace, &closure)),
            Some(
                truth
                    .violations
                    .iter()
                    .map(|v| v.as_str().to_string())
                    .collect(),
            ),
        )
    } else {
        (None, None)
    };
    Differential {
        race_vc: hb::djit_detect(trace).is_some(),
        race_goldilocks: hb::goldilocks_detect(trace).is_some(),
        race_compressed,
        race_oracle,
        violations_eraser: lockset::eraser_detect(trace)
            .violations
            .iter()
            .map(|v| v.as_str().to_string())
            .collect(),
        violations_compressed: ls_compressed
            .violations
            .iter()
            .map(|v| v.as_str().to_string())
            .collect(),
        violations_oracle,
    }
}

/// Shrinks a disagreeing trace by greedy event deletion, keeping it free
/// of validation errors and still disagreeing.
pub fn minimize_disagreement(trace: &Trace, oracle_cap: usize) -> Trace {
    let mut current = trace.clone();
    loop {
        let mut shrunk = false;
        let mut i = 0;
        while i < current.len() {
            let labels: Vec<_> = current
                .labels()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, l)| l.clone())
                .collect();
            let candidate = Trace::from_labels(labels);
            if is_error_free(&validate(&candidate))
                && !run_differential(&candidate, oracle_cap).agreed()
            {
                current = candidate;
                shrunk = true;
            } else {
                i += 1;
            }
        }
        if !shrunk {
            return current;
        }
    }
}

/// Configuration for a randomized differential campaign.
#[derive(Debug, Clone)]
pub struct CampaignConfig {
    pub runs: u64,
    pub seed: u64,
    pub max_events: usize,
    pub threads: u32,
    pub locks: u32,
    pub vars: u32,
    pub oracle_cap: usize,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            runs: 500,
            seed: 0,
            max_events: 200,
            threads: 4,
            locks: 3,
            vars: 4,
            oracle_cap: crate::DEFAULT_ORACLE_CAP,
        }
    }
}

/// A disagreement found by [`run_campaign`].
#[derive(Debug, Clone)]
pub struct Disagreement {
    pub seed: u64,
    pub differential: Differential,
    pub minimized: Trace,
}

/// Runs `runs` random traces through every engine; returns all
/// disagreements (ideally none), each with a minimized witness.
pub fn run_campaign(cfg: &CampaignConfig) -> Vec<Disagreement> {
    let mut out = Vec::new();
    for i in 0..cfg.runs {
        let seed = cfg.seed.wrapping_add(i);
        // Vary the size a little so tiny traces are covered too.
        let events = 8 + (seed as usize * 37) % cfg.max_events.saturating_sub(7);
        let trace = random_trace(&RandomConfig {
            events,
            threads: cfg.threads,
            locks: cfg.locks,
            vars: cfg.vars,
            seed,
            lock_discipline: false,
        });
        let differential = run_differential(&trace, cfg.oracle_cap);
        if !differential.agreed() {
            out.push(Disagreement {
                seed,
                differential: differential.clone(),
                minimized: minimize_disagreement(&trace, cfg.oracle_cap),
            });
        }
    }
    out
}
