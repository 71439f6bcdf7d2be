//! Streaming Eraser with reentrant locks.
//!
//! `LocksHeld` looks into the future (a release left unmatched at trace end
//! protects everything before it in its thread), so a single forward pass
//! cannot honor it. Pass one finds, per (thread, lock), the last release
//! that never gets matched; pass two streams with reentrancy counters and
//! folds that correction in.

use std::collections::{BTreeMap, HashMap};

use crate::lockset::LsLock;
use crate::sync_set::{BitSet, Universe};
use crate::trace::{Operation, ThreadId, Trace, VarId};

/// Result of the streaming lockset analysis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EraserOutcome {
    /// Variables violating the discipline at end of trace, in name order.
    pub violations: Vec<VarId>,
    /// For each violated variable, the access at which the cross-thread
    /// intersection first became empty. Informational.
    pub first_empty: BTreeMap<VarId, u32>,
    /// Final per-(thread, variable) locksets; unaccessed pairs are absent
    /// (the universal set).
    pub locksets: BTreeMap<(ThreadId, VarId), std::collections::BTreeSet<LsLock>>,
}

/// Lock id layout for lockset bitsets: real locks, then the read marker,
/// then one dummy per thread.
struct LsIds {
    n_locks: usize,
}

impl LsIds {
    fn width(&self, n_threads: usize) -> usize {
        self.n_locks + 1 + n_threads
    }

    fn read_marker(&self) -> u32 {
        self.n_locks as u32
    }

    fn dummy(&self, thread: u32) -> u32 {
        (self.n_locks + 1) as u32 + thread
    }
}

/// Runs the two-pass Eraser analysis.
pub fn eraser_detect(trace: &Trace) -> EraserOutcome {
    let universe = Universe::from_trace(trace);
    let (n_threads, n_locks, n_vars) = (
        universe.n_threads(),
        universe.n_locks(),
        universe.n_vars(),
    );
    let ids = LsIds { n_locks };
    let width = ids.width(n_threads);

    // Pass 1: last release per (thread, lock) with no matching acquire in
    // the whole trace. A release is unmatched exactly when the running
    // counter underflows.
    let mut last_unmatched_rel = vec![0u32; n_threads * n_locks];
    {
        let mut depth: HashMap<(u32, u32), u32> = HashMap::new();
        for e in trace.events() {
            match e.op() {
                Operation::Acquire(l) => {
                    let key = (universe.thread_id(e.thread()), universe.lock_id(l));
                    *depth.entry(key).or_insert(0) += 1;
                }
                Operation::Release(l) => {
                    let key = (universe.thread_id(e.thread()), universe.lock_id(l));
                    let d = depth.entry(key).or_insert(0);
                    if *d == 0 {
                        last_unmatched_rel[key.0 as usize * n_locks + key.1 as usize] = e.index;
                    } else {
                        *d -= 1;
                    }
                }
                _ => {}
            }
        }
    }

    // Pass 2: stream with counters; intersect per-(thread, variable)
    // locksets as accesses arrive.
    let mut depth = vec![0u32; n_threads * n_locks];
    let mut locksets: Vec<Option<BitSet>> = vec![None; n_threads * n_vars];
    let mut first_empty: Vec<Option<u32>> = vec![None; n_vars];
    for e in trace.events() {
        let Some(x) = e.label.accessed_var() else {
            let t = universe.thread_id(e.thread()) as usize;
            match e.op() {
                Operation::Acquire(l) => {
                    depth[t * n_locks + universe.lock_id(l) as usize] += 1;
                }
                Operation::Release(l) => {
                    let d = &mut depth[t * n_locks + universe.lock_id(l) as usize];
                    *d = d.saturating_sub(1);
                }
                _ => {}
            }
            continue;
        };
        let t = universe.thread_id(e.thread());
        let x = universe.var_id(x);
        let mut event_set = BitSet::empty(width);
        for l in 0..n_locks {
            let held_now = depth[t as usize * n_locks + l] > 0;
            let future_unmatched = last_unmatched_rel[t as usize * n_locks + l] > e.index;
            if held_now || future_unmatched {
                event_set.insert(l as u32);
            }
        }
        event_set.insert(ids.dummy(t));
        if e.label.is_read() {
            event_set.insert(ids.read_marker());
        }
        let slot = &mut locksets[t as usize * n_vars + x as usize];
        match slot {
            None => *slot = Some(event_set),
            Some(s) => s.intersect_with(&event_set),
        }
        // Did this access empty the cross-thread intersection?
        if first_empty[x as usize].is_none() {
            let mut cross: Option<BitSet> = None;
            for u in 0..n_threads {
                if let Some(s) = &locksets[u * n_vars + x as usize] {
                    match &mut cross {
                        None => cross = Some(s.clone()),
                        Some(c) => c.intersect_with(s),
                    }
                }
            }
            if matches!(cross, Some(ref c) if c.is_empty()) {
                first_empty[x as usize] = Some(e.index);
            }
        }
    }

    let named = |set: &BitSet| {
        set.iter()
            .map(|id| {
                if id < n_locks as u32 {
                    LsLock::Real(universe.locks()[id as usize].clone())
                } else if id == ids.read_marker() {
                    LsLock::ReadMarker
                } else {
                    LsLock::ThreadDummy(universe.threads()[(id - ids.dummy(0)) as usize].clone())
                }
            })
            .collect::<std::collections::BTreeSet<_>>()
    };
    let mut out_locksets = BTreeMap::new();
    for t in 0..n_threads {
        for x in 0..n_vars {
            if let Some(s) = &locksets[t * n_vars + x] {
                out_locksets.insert(
                    (
                        universe.threads()[t].clone(),
                        universe.vars()[x].clone(),
                    ),
                    named(s),
                );
            }
        }
    }
    let mut violations: Vec<VarId> = first_empty
        .iter()
        .enumerate()
        .filter_map(|(x, hit)| hit.map(|_| universe.vars()[x].clone()))
        .collect();
    violations.sort();
    let first_empty = violations
        .iter()
        .map(|x| {
            (
                x.clone(),
                first_empty[universe.var_id(x) as usize].unwrap(),
            )
        })
        .collect();
    EraserOutcome {
        violations,
        first_empty,
        locksets: out_locksets,
    }
}
