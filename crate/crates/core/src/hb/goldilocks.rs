//! Goldilocks-style race detection: set-based happens-before tracking.
//!
//! For every variable the engine keeps the set of threads and locks with an
//! event happens-after the last write (and, per thread, the last read).
//! Synchronization events grow the sets: an acquire admits the acquiring
//! thread into sets holding the lock, a release adds the lock to sets
//! holding the thread, forks and joins do the analogous thread updates.
//! An access races exactly when its thread is missing from the relevant
//! set.

use crate::hb::oracle::RacePair;
use crate::sync_set::{BitSet, Universe};
use crate::trace::{Operation, Trace};

struct TrackedSet {
    set: BitSet,
    /// Threads with an *own* event happens-after the access. A fork only
    /// admits the child into `set`; a join is ordered only behind real
    /// child events, so its trigger consults this narrower set.
    own_event: BitSet,
    /// Index of the access event this set belongs to.
    access_index: u32,
}

impl TrackedSet {
    fn at_access(n_sync: usize, thread: u32, index: u32) -> Self {
        TrackedSet {
            set: BitSet::singleton(n_sync, thread),
            own_event: BitSet::singleton(n_sync, thread),
            access_index: index,
        }
    }
}

/// Runs the Goldilocks detector. Agrees with [`crate::hb::djit_detect`] on
/// both existence and the reported pair.
pub fn goldilocks_detect(trace: &Trace) -> Option<RacePair> {
    let universe = Universe::from_trace(trace);
    let n_sync = universe.n_sync();
    let (n_threads, n_vars) = (universe.n_threads(), universe.n_vars());
    // Per variable: last-write set; per (thread, variable): last-read set.
    let mut write_sets: Vec<Option<TrackedSet>> = (0..n_vars).map(|_| None).collect();
    let mut read_sets: Vec<Option<TrackedSet>> = (0..n_threads * n_vars).map(|_| None).collect();

    for e in trace.events() {
        let t = universe.thread_id(e.thread());
        let t_sync = t; // thread ids double as sync ids
        match e.op() {
            Operation::Read(x) => {
                let x = universe.var_id(x);
                let mut worst: Option<u32> = None;
                if let Some(w) = &write_sets[x as usize] {
                    if !w.set.contains(t_sync) {
                        worst = Some(w.access_index);
                    }
                }
                if let Some(prior) = worst {
                    return Some(RacePair {
                        first: prior,
                        second: e.index,
                        var: e.label.accessed_var().cloned().unwrap(),
                    });
                }
                read_sets[t as usize * n_vars + x as usize] =
                    Some(TrackedSet::at_access(n_sync, t_sync, e.index));
            }
            Operation::Write(x) => {
                let x = universe.var_id(x);
                let mut worst: Option<u32> = None;
                if let Some(w) = &write_sets[x as usize] {
                    if !w.set.contains(t_sync) {
                        worst = Some(w.access_index);
                    }
                }
                for u in 0..n_threads {
                    if u == t as usize {
                        continue;
                    }
                    if let Some(r) = &read_sets[u * n_vars + x as usize] {
                        if !r.set.contains(t_sync) {
                            worst = Some(worst.unwrap_or(0).max(r.access_index));
                        }
                    }
                }
                if let Some(prior) = worst {
                    return Some(RacePair {
                        first: prior,
                        second: e.index,
                        var: e.label.accessed_var().cloned().unwrap(),
                    });
                }
                write_sets[x as usize] =
                    Some(TrackedSet::at_access(n_sync, t_sync, e.index));
            }
            op => {
                // Synchronization: grow every set whose knowledge reaches
                // this event. An acquire is ordered behind any release of
                // the lock; a join only behind real events of the child.
                let acquire_gate = match op {
                    Operation::Acquire(l) => Some(universe.sync_lock(l)),
                    _ => None,
                };
                let join_gate = match op {
                    Operation::Join(u) => Some(universe.sync_thread(u)),
                    _ => None,
                };
                let publish = match op {
                    Operation::Release(l) => Some(universe.sync_lock(l)),
                    Operation::Fork(u) => Some(universe.sync_thread(u)),
                    _ => None,
                };
                let update = |tracked: &mut TrackedSet| {
                    let triggered = tracked.set.contains(t_sync)
                        || acquire_gate.is_some_and(|g| tracked.set.contains(g))
                        || join_gate.is_some_and(|g| tracked.own_event.contains(g));
                    if triggered {
                        tracked.set.insert(t_sync);
                        tracked.own_event.insert(t_sync);
                        if let Some(p) = publish {
                            tracked.set.insert(p);
                        }
                    }
                };
                for w in write_sets.iter_mut().flatten() {
                    update(w);
                }
                for r in read_sets.iter_mut().flatten() {
                    update(r);
                }
            }
        }
    }
    None
}
