//! Brute-force happens-before machinery for small traces.
//!
//! The closure is materialized as an n×n reachability bitset, built from
//! the four edge kinds: thread order, release-to-later-acquire per lock,
//! fork to first child event, and last child event to join. Everything else
//! in the module is defined directly on top of that relation, which makes
//! this the ground truth the streaming engines are tested against.

use std::collections::HashMap;

use thiserror::Error;

use crate::sync_set::{BitSet, SyncObject, Universe};
use crate::trace::{Operation, Trace};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("trace has {len} events, above the oracle cap of {cap}")]
pub struct OracleCapExceeded {
    pub len: usize,
    pub cap: usize,
}

/// The reflexive happens-before relation of one trace.
pub struct HbClosure {
    n: usize,
    words_per_row: usize,
    /// Row i holds the events reachable from event i+1 (1-based indices
    /// shifted down by one).
    reach: Vec<u64>,
}

impl HbClosure {
    /// Computes the full closure. Quadratic space, cubic-ish time; refuses
    /// traces longer than `cap`.
    pub fn build(trace: &Trace, cap: usize) -> Result<Self, OracleCapExceeded> {
        let n = trace.len();
        if n > cap {
            return Err(OracleCapExceeded { len: n, cap });
        }
        let words_per_row = n.div_ceil(64).max(1);
        let mut reach = vec![0u64; n * words_per_row];

        // Direct successor lists (edges always point forward in the trace).
        let mut succs: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut prev_of_thread: HashMap<&crate::trace::ThreadId, u32> = HashMap::new();
        let mut acquires_of_lock: HashMap<&crate::trace::LockId, Vec<u32>> = HashMap::new();
        for e in trace.events() {
            if let Operation::Acquire(l) = e.op() {
                acquires_of_lock.entry(l).or_default().push(e.index);
            }
        }
        for e in trace.events() {
            let i = e.index;
            if let Some(&p) = prev_of_thread.get(e.thread()) {
                succs[p as usize - 1].push(i);
            }
            prev_of_thread.insert(e.thread(), i);
            match e.op() {
                Operation::Release(l) => {
                    // Every later acquire of the same lock.
                    if let Some(acqs) = acquires_of_lock.get(l) {
                        let from = acqs.partition_point(|&a| a <= i);
                        for &a in &acqs[from..] {
                            succs[i as usize - 1].push(a);
                        }
                    }
                }
                Operation::Fork(t) => {
                    // First event of the child after the fork.
                    if let Some(first) = trace.events()[i as usize..]
                        .iter()
                        .find(|e2| e2.thread() == t)
                    {
                        succs[i as usize - 1].push(first.index);
                    }
                }
                Operation::Join(t) => {
                    // Last event of the child before the join.
                    if let Some(last) = trace.events()[..i as usize - 1]
                        .iter()
                        .rev()
                        .find(|e2| e2.thread() == t)
                    {
                        succs[last.index as usize - 1].push(i);
                    }
                }
                _ => {}
            }
        }

        // All edges go forward, so descending index order is reverse
        // topological; each row is its own bit plus the union of successor
        // rows.
        for i in (0..n).rev() {
            let (head, tail) = reach.split_at_mut((i + 1) * words_per_row);
            let row = &mut head[i * words_per_row..];
            row[i / 64] |= 1u64 << (i % 64);
            for &s in &succs[i] {
                let s = s as usize - 1;
                debug_assert!(s > i);
                let srow = &tail[(s - i - 1) * words_per_row..(s - i) * words_per_row];
                for (a, b) in row.iter_mut().zip(srow) {
                    *a |= b;
                }
            }
        }
        Ok(HbClosure {
            n,
            words_per_row,
            reach,
        })
    }

    /// `a ≤ b` in reflexive happens-before order (1-based event indices).
    pub fn ordered(&self, a: u32, b: u32) -> bool {
        let (a, b) = (a as usize - 1, b as usize - 1);
        debug_assert!(a < self.n && b < self.n);
        self.reach[a * self.words_per_row + b / 64] & (1u64 << (b % 64)) != 0
    }

    /// Neither `a ≤ b` nor `b ≤ a`.
    pub fn concurrent(&self, a: u32, b: u32) -> bool {
        !self.ordered(a, b) && !self.ordered(b, a)
    }
}

/// A conflicting, happens-before-unordered event pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RacePair {
    pub first: u32,
    pub second: u32,
    pub var: crate::trace::VarId,
}

/// Do `a` and `b` conflict: same variable, different threads, at least one
/// write?
pub fn conflicting(a: &crate::trace::Event, b: &crate::trace::Event) -> bool {
    if a.thread() == b.thread() {
        return false;
    }
    match (a.label.accessed_var(), b.label.accessed_var()) {
        (Some(x), Some(y)) if x == y => a.label.is_write() || b.label.is_write(),
        _ => false,
    }
}

/// The first race in streaming order (smallest second index, then largest
/// first index), or `None`. Direct enumeration over the closure.
pub fn first_race(trace: &Trace, closure: &HbClosure) -> Option<RacePair> {
    for b in trace.events() {
        let mut best: Option<u32> = None;
        for a in &trace.events()[..b.index as usize - 1] {
            if conflicting(a, b) && !closure.ordered(a.index, b.index) {
                best = Some(a.index.max(best.unwrap_or(0)));
            }
        }
        if let Some(first) = best {
            return Some(RacePair {
                first,
                second: b.index,
                var: b.label.accessed_var().cloned().unwrap(),
            });
        }
    }
    None
}

/// Is there any conflicting unordered pair?
pub fn has_race(trace: &Trace, closure: &HbClosure) -> bool {
    first_race(trace, closure).is_some()
}

/// Threads and locks with an event happens-after `e` (1-based index):
/// threads via their own events or a fork of them, locks via releases.
pub fn after_set(trace: &Trace, closure: &HbClosure, universe: &Universe, e: u32) -> BitSet {
    let mut out = BitSet::empty(universe.n_sync());
    for e2 in &trace.events()[e as usize - 1..] {
        if !closure.ordered(e, e2.index) {
            continue;
        }
        out.insert(universe.sync_thread(e2.thread()));
        match e2.op() {
            Operation::Fork(t) => out.insert(universe.sync_thread(t)),
            Operation::Release(l) => out.insert(universe.sync_lock(l)),
            _ => {}
        }
    }
    out
}

/// Threads and locks with an event happens-before `e`: threads via their
/// own events or a join of them, locks via acquires.
pub fn before_set(trace: &Trace, closure: &HbClosure, universe: &Universe, e: u32) -> BitSet {
    let mut out = BitSet::empty(universe.n_sync());
    for e2 in &trace.events()[..e as usize] {
        if !closure.ordered(e2.index, e) {
            continue;
        }
        out.insert(universe.sync_thread(e2.thread()));
        match e2.op() {
            Operation::Join(t) => out.insert(universe.sync_thread(t)),
            Operation::Acquire(l) => out.insert(universe.sync_lock(l)),
            _ => {}
        }
    }
    out
}

/// [`after_set`]/[`before_set`] with named sync objects, for assertions.
pub fn after_before_named(
    trace: &Trace,
    closure: &HbClosure,
    e: u32,
) -> (Vec<SyncObject>, Vec<SyncObject>) {
    let universe = Universe::from_trace(trace);
    let to_named = |s: &BitSet| {
        let mut v: Vec<SyncObject> = s.iter().map(|id| universe.sync_object(id)).collect();
        v.sort();
        v
    };
    (
        to_named(&after_set(trace, closure, &universe, e)),
        to_named(&before_set(trace, closure, &universe, e)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::trace::parse_trace;

    fn closure(trace: &Trace) -> HbClosure {
        HbClosure::build(trace, crate::DEFAULT_ORACLE_CAP).unwrap()
    }

    #[test]
    fn sigma1_hb_facts() {
        let t = fixtures::sigma1();
        let c = closure(&t);
        // e5 <= e10 through the critical sections on l.
        assert!(c.ordered(5, 10));
        // The race pair: e10 and e13 are concurrent.
        assert!(c.concurrent(10, 13));
        // Fork orders e1 before every thread-2 event.
        assert!(c.ordered(1, 3));
        // Join orders thread-2 events before e16.
        assert!(c.ordered(13, 16));
        // e3 and e7 are concurrent reads (not a race).
        assert!(c.concurrent(3, 7));
        for e in t.events() {
            assert!(c.ordered(e.index, e.index), "reflexivity");
        }
    }

    #[test]
    fn sigma1_first_race_is_10_13() {
        let t = fixtures::sigma1();
        let c = closure(&t);
        let race = first_race(&t, &c).unwrap();
        assert_eq!((race.first, race.second), (10, 13));
        assert_eq!(race.var.as_str(), "y");
    }

    #[test]
    fn sigma2_has_no_race() {
        let t = fixtures::sigma2();
        let c = closure(&t);
        assert!(!has_race(&t, &c));
    }

    #[test]
    fn antisymmetry_on_fixtures() {
        for t in [fixtures::sigma1(), fixtures::sigma2()] {
            let c = closure(&t);
            for a in t.events() {
                for b in t.events() {
                    if a.index != b.index && c.ordered(a.index, b.index) {
                        assert!(!c.ordered(b.index, a.index));
                    }
                }
            }
        }
    }

    #[test]
    fn single_event_after_before_is_own_thread() {
        let t = parse_trace("7|w(x)").unwrap();
        let c = closure(&t);
        let (after, before) = after_before_named(&t, &c, 1);
        let own = vec![SyncObject::Thread(crate::trace::ThreadId::new("7").unwrap())];
        assert_eq!(after, own);
        assert_eq!(before, own);
    }

    #[test]
    fn cap_is_enforced() {
        let t = parse_trace("1|w(x)\n1|w(x)\n1|w(x)").unwrap();
        assert!(HbClosure::build(&t, 2).is_err());
    }

    fn sub_chunk(text: &str, range: std::ops::Range<usize>) -> Trace {
        let lines: Vec<&str> = text.lines().collect();
        parse_trace(&lines[range].join("\n")).unwrap()
    }

    fn named(objs: &[(&str, bool)]) -> Vec<SyncObject> {
        // (token, is_lock)
        let mut v: Vec<SyncObject> = objs
            .iter()
            .map(|(tok, is_lock)| {
                if *is_lock {
                    SyncObject::Lock(crate::trace::LockId::new(tok).unwrap())
                } else {
                    SyncObject::Thread(crate::trace::ThreadId::new(tok).unwrap())
                }
            })
            .collect();
        v.sort();
        v
    }

    #[test]
    fn sigma1_chunk_after_before_sets() {
        // Chunks of sigma1 as standalone traces: E = e1..e2, C = e1..e6,
        // G = e15..e16, B = e11..e16.
        let e = sub_chunk(fixtures::SIGMA1_TEXT, 0..2);
        let (after, _) = after_before_named(&e, &closure(&e), 1);
        assert_eq!(after, named(&[("1", false), ("2", false)]));

        let c = sub_chunk(fixtures::SIGMA1_TEXT, 0..6);
        let (after, _) = after_before_named(&c, &closure(&c), 1);
        assert_eq!(after, named(&[("1", false), ("2", false), ("l", true)]));

        let g = sub_chunk(fixtures::SIGMA1_TEXT, 14..16);
        let (_, before) = after_before_named(&g, &closure(&g), 2);
        assert_eq!(before, named(&[("1", false), ("2", false)]));

        let b = sub_chunk(fixtures::SIGMA1_TEXT, 10..16);
        let (_, before) = after_before_named(&b, &closure(&b), 6);
        assert_eq!(before, named(&[("1", false), ("2", false), ("l", true)]));
    }

    #[test]
    fn sigma2_chunk_after_before_sets() {
        // W = e1..e2, U = e1..e5, X = e3..e5 of sigma2.
        let w = sub_chunk(fixtures::SIGMA2_TEXT, 0..2);
        let (after, _) = after_before_named(&w, &closure(&w), 1);
        assert_eq!(after, named(&[("1", false)]));

        let u = sub_chunk(fixtures::SIGMA2_TEXT, 0..5);
        let (after, _) = after_before_named(&u, &closure(&u), 1);
        assert_eq!(after, named(&[("1", false), ("2", false), ("l", true)]));
        // e3 is position 3 within U.
        let (_, before) = after_before_named(&u, &closure(&u), 3);
        assert_eq!(before, named(&[("1", false), ("l", true)]));

        let x = sub_chunk(fixtures::SIGMA2_TEXT, 2..5);
        let (_, before) = after_before_named(&x, &closure(&x), 1);
        assert_eq!(before, named(&[("1", false)]));
    }

    #[test]
    fn rel_acq_edges_do_not_require_well_nesting() {
        // An unmatched release still orders later acquires of the lock.
        let t = parse_trace("1|w(x)\n1|rel(l)\n2|acq(l)\n2|w(x)").unwrap();
        let c = closure(&t);
        assert!(c.ordered(1, 4));
        assert!(!has_race(&t, &c));
    }
}
