//! Lockset checking directly on a grammar.
//!
//! Per nonterminal the summary holds, for each (thread, lock), how many
//! acquires and releases its chunk leaves unmatched, and per (thread,
//! variable) the lockset over the chunk's accesses — `Top` when the pair
//! never accesses. Concatenating chunks matches counters with `max{0,..}`
//! arithmetic; a left chunk's accesses gain the locks whose releases dangle
//! into the right chunk, and symmetrically. Violations found in any chunk
//! survive into every enclosing chunk, so the start symbol accumulates the
//! full violated-variable set.

use std::collections::{BTreeMap, BTreeSet};

use crate::lockset::LsLock;
use crate::slp::{RuleId, Slp, SlpError, Symbol};
use crate::sync_set::{BitSet, Universe};
use crate::trace::{EventLabel, Operation, ThreadId, VarId};

/// A lockset over reals + read marker + thread dummies, or the universal
/// set for unaccessed (thread, variable) pairs.
///
/// `Top` is absorbing under union and neutral under intersection; it is
/// never materialized because the lock universe is chunk-relative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LockSetValue {
    Top,
    Finite(BitSet),
}

impl LockSetValue {
    pub fn is_top(&self) -> bool {
        matches!(self, LockSetValue::Top)
    }

    fn union_locks(&self, extra: &BitSet) -> LockSetValue {
        match self {
            LockSetValue::Top => LockSetValue::Top,
            LockSetValue::Finite(s) => {
                let mut out = s.clone();
                out.union_with(extra);
                LockSetValue::Finite(out)
            }
        }
    }

    fn intersect(&self, other: &LockSetValue) -> LockSetValue {
        match (self, other) {
            (LockSetValue::Top, v) => v.clone(),
            (v, LockSetValue::Top) => v.clone(),
            (LockSetValue::Finite(a), LockSetValue::Finite(b)) => {
                let mut out = a.clone();
                out.intersect_with(b);
                LockSetValue::Finite(out)
            }
        }
    }
}

/// Per-chunk lockset bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LockSetSummary {
    /// Unmatched acquires per `(thread, lock)` (flat `t * n_locks + l`).
    pub open_acq: Vec<u64>,
    /// Unmatched releases per `(thread, lock)`.
    pub open_rel: Vec<u64>,
    /// Lockset per `(thread, var)` (flat `t * n_vars + x`).
    pub lockset: Vec<LockSetValue>,
    /// Variables violated in this chunk or any sub-chunk.
    pub violated: BitSet,
}

/// Bit layout inside lockset values: real locks `0..L`, read marker `L`,
/// thread dummies `L+1..`.
fn ls_width(u: &Universe) -> usize {
    u.n_locks() + 1 + u.n_threads()
}

fn read_marker(u: &Universe) -> u32 {
    u.n_locks() as u32
}

fn thread_dummy(u: &Universe, t: u32) -> u32 {
    (u.n_locks() + 1) as u32 + t
}

impl LockSetSummary {
    fn empty(u: &Universe) -> Self {
        LockSetSummary {
            open_acq: vec![0; u.n_threads() * u.n_locks()],
            open_rel: vec![0; u.n_threads() * u.n_locks()],
            lockset: vec![LockSetValue::Top; u.n_threads() * u.n_vars()],
            violated: BitSet::empty(u.n_vars()),
        }
    }

    pub fn open_acq_of(&self, u: &Universe, t: &ThreadId, l: &crate::trace::LockId) -> u64 {
        self.open_acq[u.lock_key(u.thread_id(t), u.lock_id(l))]
    }

    pub fn open_rel_of(&self, u: &Universe, t: &ThreadId, l: &crate::trace::LockId) -> u64 {
        self.open_rel[u.lock_key(u.thread_id(t), u.lock_id(l))]
    }

    /// Named lockset of a (thread, variable) pair; `None` is `Top`.
    pub fn lockset_named(
        &self,
        u: &Universe,
        t: &ThreadId,
        x: &VarId,
    ) -> Option<BTreeSet<LsLock>> {
        match &self.lockset[u.read_key(u.thread_id(t), u.var_id(x))] {
            LockSetValue::Top => None,
            LockSetValue::Finite(s) => Some(
                s.iter()
                    .map(|id| {
                        if id < u.n_locks() as u32 {
                            LsLock::Real(u.locks()[id as usize].clone())
                        } else if id == read_marker(u) {
                            LsLock::ReadMarker
                        } else {
                            LsLock::ThreadDummy(
                                u.threads()[(id - thread_dummy(u, 0)) as usize].clone(),
                            )
                        }
                    })
                    .collect(),
            ),
        }
    }
}

/// Summary of a single-event chunk: one counter tick for acquire/release,
/// one two-or-one-element lockset for an access, `Top`/zero elsewhere.
pub fn ls_summarize_terminal(label: &EventLabel, u: &Universe) -> LockSetSummary {
    let mut s = LockSetSummary::empty(u);
    let t = u.thread_id(&label.thread);
    match &label.op {
        Operation::Acquire(l) => {
            s.open_acq[u.lock_key(t, u.lock_id(l))] = 1;
        }
        Operation::Release(l) => {
            s.open_rel[u.lock_key(t, u.lock_id(l))] = 1;
        }
        Operation::Read(x) => {
            let mut set = BitSet::empty(ls_width(u));
            set.insert(read_marker(u));
            set.insert(thread_dummy(u, t));
            s.lockset[u.read_key(t, u.var_id(x))] = LockSetValue::Finite(set);
        }
        Operation::Write(x) => {
            let set = BitSet::singleton(ls_width(u), thread_dummy(u, t));
            s.lockset[u.read_key(t, u.var_id(x))] = LockSetValue::Finite(set);
        }
        _ => {}
    }
    s
}

/// Records every variable whose cross-thread lockset intersection is empty.
/// `Top` entries (unaccessed pairs) stand for the universal set and are
/// skipped.
fn check_violations(s: &mut LockSetSummary, u: &Universe) {
    let n_vars = u.n_vars();
    for x in 0..n_vars {
        if s.violated.contains(x as u32) {
            continue;
        }
        let mut cross: Option<BitSet> = None;
        for t in 0..u.n_threads() {
            if let LockSetValue::Finite(set) = &s.lockset[t * n_vars + x] {
                match &mut cross {
                    None => cross = Some(set.clone()),
                    Some(c) => c.intersect_with(set),
                }
            }
        }
        if matches!(cross, Some(ref c) if c.is_empty()) {
            s.violated.insert(x as u32);
        }
    }
}

/// Summary of the concatenation of two adjacent chunks, violations of the
/// combined chunk included.
pub fn ls_combine(left: &LockSetSummary, right: &LockSetSummary, u: &Universe) -> LockSetSummary {
    let (n_threads, n_locks, n_vars) = (u.n_threads(), u.n_locks(), u.n_vars());
    let mut out = LockSetSummary::empty(u);

    // Counter matching: right releases consume left acquires.
    for k in 0..n_threads * n_locks {
        out.open_acq[k] = right.open_acq[k] + left.open_acq[k].saturating_sub(right.open_rel[k]);
        out.open_rel[k] = left.open_rel[k] + right.open_rel[k].saturating_sub(left.open_acq[k]);
    }

    // Per thread: locks protecting the other side's accesses because they
    // dangle across the boundary.
    let mut aug_left = vec![BitSet::empty(ls_width(u)); n_threads];
    let mut aug_right = vec![BitSet::empty(ls_width(u)); n_threads];
    for t in 0..n_threads {
        for l in 0..n_locks {
            let k = t * n_locks + l;
            // Released to the right more often than acquired on the left:
            // the outermost release is unmatched, so it protects the left.
            if right.open_rel[k] > left.open_acq[k] {
                aug_left[t].insert(l as u32);
            }
            if left.open_acq[k] > right.open_rel[k] {
                aug_right[t].insert(l as u32);
            }
        }
    }
    for t in 0..n_threads {
        for x in 0..n_vars {
            let k = t * n_vars + x;
            out.lockset[k] = left.lockset[k]
                .union_locks(&aug_left[t])
                .intersect(&right.lockset[k].union_locks(&aug_right[t]));
        }
    }

    out.violated.union_with(&left.violated);
    out.violated.union_with(&right.violated);
    check_violations(&mut out, u);
    out
}

/// Per-(thread, variable) locksets by name; unaccessed pairs absent.
pub type NamedLocksets = BTreeMap<(ThreadId, VarId), BTreeSet<LsLock>>;

/// Result of a compressed lockset analysis.
pub struct LsAnalysis {
    /// Violated variables of the derived trace, in name order.
    pub violations: Vec<VarId>,
    pub universe: Universe,
    pub summaries: Vec<Option<LockSetSummary>>,
}

impl LsAnalysis {
    pub fn summary(&self, rule: RuleId) -> &LockSetSummary {
        self.summaries[rule as usize]
            .as_ref()
            .expect("rule not reachable from start")
    }

    /// Final locksets at the start symbol, named, `Top` entries omitted.
    pub fn start_locksets(&self, slp: &Slp) -> NamedLocksets {
        let s = self.summary(slp.start());
        let mut out = BTreeMap::new();
        for t in self.universe.threads() {
            for x in self.universe.vars() {
                if let Some(set) = s.lockset_named(&self.universe, t, x) {
                    out.insert((t.clone(), x.clone()), set);
                }
            }
        }
        out
    }
}

/// Detects lockset-discipline violations for the trace an SLP derives, in
/// time linear in the grammar size.
pub fn analyze_slp_lockset(slp: &Slp) -> Result<LsAnalysis, SlpError> {
    slp.check()?;
    let universe = Universe::from_slp(slp);
    let order = slp.topological_order()?;
    let mut summaries: Vec<Option<LockSetSummary>> = vec![None; slp.n_rules()];
    for &rule in &order {
        let mut acc: Option<LockSetSummary> = None;
        for sym in slp.rule(rule) {
            let next = match sym {
                Symbol::Terminal(label) => ls_summarize_terminal(label, &universe),
                Symbol::NonTerminal(child) => summaries[*child as usize]
                    .clone()
                    .expect("children precede parents in topological order"),
            };
            acc = Some(match acc.take() {
                None => next,
                Some(prev) => ls_combine(&prev, &next, &universe),
            });
        }
        let mut summary = acc.unwrap_or_else(|| LockSetSummary::empty(&universe));
        // Single-symbol bodies never went through ls_combine's check.
        check_violations(&mut summary, &universe);
        summaries[rule as usize] = Some(summary);
    }
    let mut violations: Vec<VarId> = summaries[slp.start() as usize]
        .as_ref()
        .map(|s| s.violated.iter().map(|x| universe.var(x).clone()).collect())
        .unwrap_or_default();
    violations.sort();
    Ok(LsAnalysis {
        violations,
        universe,
        summaries,
    })
}
