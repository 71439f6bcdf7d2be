//! Brute-force lockset computation over whole traces.
//!
//! `LocksHeld` is defined against whole-trace acquire/release matching and
//! deliberately looks into the future: a release with no matching acquire
//! inside the trace protects every earlier event of its thread. The
//! streaming engine must agree with this definition, so it lives here as
//! the ground truth.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::lockset::LsLock;
use crate::trace::{Event, LockId, Operation, ThreadId, Trace, VarId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LocksHeldError {
    #[error("event is not part of this trace")]
    NotInTrace,
    #[error("locks-held is defined for read/write events only")]
    NotAnAccess,
    #[error(transparent)]
    CapExceeded(#[from] crate::hb::oracle::OracleCapExceeded),
}

/// The set of locks held by the event's thread when it performs `e`:
/// acquires before `e` not yet matched at `e`, plus releases after `e`
/// whose matching acquire is not before `e`.
pub fn locksheld_oracle(
    trace: &Trace,
    e: &Event,
    cap: usize,
) -> Result<BTreeSet<LockId>, LocksHeldError> {
    if trace.len() > cap {
        return Err(crate::hb::oracle::OracleCapExceeded {
            len: trace.len(),
            cap,
        }
        .into());
    }
    match trace.event(e.index) {
        Some(ev) if ev == e => {}
        _ => return Err(LocksHeldError::NotInTrace),
    }
    if e.label.accessed_var().is_none() {
        return Err(LocksHeldError::NotAnAccess);
    }
    Ok(locksheld_unchecked(trace, &trace.matching(), e))
}

fn locksheld_unchecked(trace: &Trace, matching: &[Option<u32>], e: &Event) -> BTreeSet<LockId> {
    let mut held = BTreeSet::new();
    for e2 in trace.events() {
        if e2.thread() != e.thread() {
            continue;
        }
        match e2.op() {
            Operation::Acquire(l) if e2.index <= e.index => {
                // Held unless released again before e.
                match matching[e2.index as usize - 1] {
                    Some(rel) if rel <= e.index => {}
                    _ => {
                        held.insert(l.clone());
                    }
                }
            }
            Operation::Release(l) if e2.index >= e.index => {
                // Protects e unless its critical section starts after e.
                match matching[e2.index as usize - 1] {
                    Some(acq) if acq >= e.index => {}
                    _ => {
                        held.insert(l.clone());
                    }
                }
            }
            _ => {}
        }
    }
    held
}

/// Whole-trace locksets: per (thread, variable) the locks protecting every
/// access, `None` for unaccessed pairs (the universal set).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocksetTruth {
    pub locksets: BTreeMap<(ThreadId, VarId), BTreeSet<LsLock>>,
    /// Variables whose cross-thread intersection is empty.
    pub violations: Vec<VarId>,
}

/// Computes locksets and violations directly from the definitions.
pub fn lockset_oracle(trace: &Trace, cap: usize) -> Result<LocksetTruth, LocksHeldError> {
    if trace.len() > cap {
        return Err(crate::hb::oracle::OracleCapExceeded {
            len: trace.len(),
            cap,
        }
        .into());
    }
    let matching = trace.matching();
    let mut locksets: BTreeMap<(ThreadId, VarId), BTreeSet<LsLock>> = BTreeMap::new();
    let mut wrote: BTreeSet<(ThreadId, VarId)> = BTreeSet::new();
    for e in trace.events() {
        let Some(x) = e.label.accessed_var() else {
            continue;
        };
        let key = (e.thread().clone(), x.clone());
        let held: BTreeSet<LsLock> = locksheld_unchecked(trace, &matching, e)
            .into_iter()
            .map(LsLock::Real)
            .collect();
        let mut event_set = held;
        event_set.insert(LsLock::ThreadDummy(e.thread().clone()));
        if e.label.is_read() {
            event_set.insert(LsLock::ReadMarker);
        } else {
            wrote.insert(key.clone());
        }
        locksets
            .entry(key)
            .and_modify(|s| *s = s.intersection(&event_set).cloned().collect())
            .or_insert(event_set);
    }
    // A writer kills the read marker for that (thread, variable).
    for key in &wrote {
        locksets.get_mut(key).unwrap().remove(&LsLock::ReadMarker);
    }
    let mut violations = Vec::new();
    for x in trace.vars() {
        let mut cross: Option<BTreeSet<LsLock>> = None;
        for ((_, var), set) in &locksets {
            if var != &x {
                continue;
            }
            cross = Some(match cross {
                None => set.clone(),
                Some(acc) => acc.intersection(set).cloned().collect(),
            });
        }
        if matches!(cross, Some(ref s) if s.is_empty()) {
            violations.push(x);
        }
    }
    Ok(LocksetTruth {
        locksets,
        violations,
    })
}
