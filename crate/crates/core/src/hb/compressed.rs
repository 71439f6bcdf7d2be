//! Happens-before race detection directly on a grammar.
//!
//! Every nonterminal gets one summary, computed bottom-up in reverse rank
//! order, so a chunk shared between many positions is analyzed once. A
//! summary carries, per thread-or-lock `u`, the threads and locks reachable
//! happens-after the first `u`-event of the chunk (`after_first`) and
//! dually `before_last`; plus, per access key, the after-set of the last
//! read/write and the before-set of the first read/write. Two adjacent
//! chunks race exactly when some write's after-set is disjoint from a
//! conflicting access's before-set on the other side, and the summaries
//! compose without looking inside the chunks again.

use crate::hb::vector_clock::clock_snapshots;
use crate::slp::{RuleId, Slp, SlpError, Symbol};
use crate::sync_set::{BitSet, SyncObject, Universe};
use crate::trace::{EventLabel, Operation, VarId};

/// Per-chunk happens-before bookkeeping. Empty sets mean "no witness".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HbSummary {
    pub race: bool,
    /// Indexed by thread-or-lock id: after-set of the chunk's first
    /// `u`-event (an own event or a join of `u`; for locks, an acquire).
    pub after_first: Vec<BitSet>,
    /// Dual: before-set of the last `u`-event (own event or fork of `u`;
    /// for locks, a release).
    pub before_last: Vec<BitSet>,
    /// Indexed by `thread * n_vars + var`: after-set of the last read.
    pub after_last_read: Vec<BitSet>,
    /// Indexed by var: after-set of the last write.
    pub after_last_write: Vec<BitSet>,
    /// Indexed by `thread * n_vars + var`: before-set of the first read.
    pub before_first_read: Vec<BitSet>,
    /// Indexed by var: before-set of the first write.
    pub before_first_write: Vec<BitSet>,
}

impl HbSummary {
    fn empty(u: &Universe) -> Self {
        let sync = || vec![BitSet::empty(u.n_sync()); u.n_sync()];
        let per_var = || vec![BitSet::empty(u.n_sync()); u.n_vars()];
        let per_read = || vec![BitSet::empty(u.n_sync()); u.n_threads() * u.n_vars()];
        HbSummary {
            race: false,
            after_first: sync(),
            before_last: sync(),
            after_last_read: per_read(),
            after_last_write: per_var(),
            before_first_read: per_read(),
            before_first_write: per_var(),
        }
    }

    /// Named contents of `after_last_write[x]`, sorted; empty = no write.
    pub fn aw_named(&self, u: &Universe, x: &VarId) -> Vec<SyncObject> {
        named(&self.after_last_write[u.var_id(x) as usize], u)
    }

    pub fn bw_named(&self, u: &Universe, x: &VarId) -> Vec<SyncObject> {
        named(&self.before_first_write[u.var_id(x) as usize], u)
    }

    pub fn ar_named(&self, u: &Universe, t: &crate::trace::ThreadId, x: &VarId) -> Vec<SyncObject> {
        named(
            &self.after_last_read[u.read_key(u.thread_id(t), u.var_id(x))],
            u,
        )
    }

    pub fn br_named(&self, u: &Universe, t: &crate::trace::ThreadId, x: &VarId) -> Vec<SyncObject> {
        named(
            &self.before_first_read[u.read_key(u.thread_id(t), u.var_id(x))],
            u,
        )
    }

    pub fn af_named(&self, u: &Universe, obj: &SyncObject) -> Vec<SyncObject> {
        named(&self.after_first[sync_id(u, obj) as usize], u)
    }

    pub fn bl_named(&self, u: &Universe, obj: &SyncObject) -> Vec<SyncObject> {
        named(&self.before_last[sync_id(u, obj) as usize], u)
    }
}

fn sync_id(u: &Universe, obj: &SyncObject) -> u32 {
    match obj {
        SyncObject::Thread(t) => u.sync_thread(t),
        SyncObject::Lock(l) => u.sync_lock(l),
    }
}

fn named(set: &BitSet, u: &Universe) -> Vec<SyncObject> {
    let mut v: Vec<SyncObject> = set.iter().map(|id| u.sync_object(id)).collect();
    v.sort();
    v
}

/// What a single event contributes to after-sets: its thread, plus the
/// child of a fork, plus the lock of a release.
fn after_contribution(label: &EventLabel, u: &Universe, out: &mut BitSet) {
    out.insert(u.sync_thread(&label.thread));
    match &label.op {
        Operation::Fork(t) => out.insert(u.sync_thread(t)),
        Operation::Release(l) => out.insert(u.sync_lock(l)),
        _ => {}
    }
}

/// Dual: its thread, plus the child of a join, plus the lock of an
/// acquire.
fn before_contribution(label: &EventLabel, u: &Universe, out: &mut BitSet) {
    out.insert(u.sync_thread(&label.thread));
    match &label.op {
        Operation::Join(t) => out.insert(u.sync_thread(t)),
        Operation::Acquire(l) => out.insert(u.sync_lock(l)),
        _ => {}
    }
}

/// Summary of a single-event chunk.
pub fn summarize_terminal(label: &EventLabel, u: &Universe) -> HbSummary {
    let mut s = HbSummary::empty(u);
    let mut after = BitSet::empty(u.n_sync());
    after_contribution(label, u, &mut after);
    let mut before = BitSet::empty(u.n_sync());
    before_contribution(label, u, &mut before);

    let t = u.sync_thread(&label.thread);
    // The event witnesses `u`-membership for: its own thread, the joined
    // thread (after side), the forked thread (before side), the acquired
    // lock (after side), the released lock (before side).
    s.after_first[t as usize] = after.clone();
    s.before_last[t as usize] = before.clone();
    match &label.op {
        Operation::Join(child) => {
            s.after_first[u.sync_thread(child) as usize] = after.clone();
        }
        Operation::Fork(child) => {
            s.before_last[u.sync_thread(child) as usize] = before.clone();
        }
        Operation::Acquire(l) => {
            s.after_first[u.sync_lock(l) as usize] = after.clone();
        }
        Operation::Release(l) => {
            s.before_last[u.sync_lock(l) as usize] = before.clone();
        }
        _ => {}
    }
    match &label.op {
        Operation::Read(x) => {
            let key = u.read_key(u.thread_id(&label.thread), u.var_id(x));
            s.after_last_read[key] = after;
            s.before_first_read[key] = before;
        }
        Operation::Write(x) => {
            let x = u.var_id(x) as usize;
            s.after_last_write[x] = after;
            s.before_first_write[x] = before;
        }
        _ => {}
    }
    s
}

/// `out ∪= ⋃_{u' ∈ seed} table[u']`.
fn union_over(out: &mut BitSet, seed: &BitSet, table: &[BitSet]) {
    for id in seed.iter() {
        out.union_with(&table[id as usize]);
    }
}

/// Composes the after-set of a left-chunk event with the right chunk: the
/// set grows by the after-first sets of everything it already reaches.
fn extend_after(left: &BitSet, right_af: &[BitSet], n_sync: usize) -> BitSet {
    let mut out = BitSet::empty(n_sync);
    out.union_with(left);
    union_over(&mut out, left, right_af);
    out
}

fn extend_before(right: &BitSet, left_bl: &[BitSet], n_sync: usize) -> BitSet {
    let mut out = BitSet::empty(n_sync);
    out.union_with(right);
    union_over(&mut out, right, left_bl);
    out
}

/// Summary of the concatenation of two adjacent chunks.
pub fn combine(left: &HbSummary, right: &HbSummary, u: &Universe) -> HbSummary {
    let n_sync = u.n_sync();
    let mut out = HbSummary::empty(u);

    // A first `u`-witness in the left chunk pins after_first there (its
    // after-set is pushed through the right chunk); otherwise the right
    // chunk's value stands. Events in the right chunk can never happen
    // before anything in the left one, so the cases are exclusive.
    for id in 0..n_sync {
        let l = &left.after_first[id];
        out.after_first[id] = if l.is_empty() {
            right.after_first[id].clone()
        } else {
            extend_after(l, &right.after_first, n_sync)
        };
        let r = &right.before_last[id];
        out.before_last[id] = if r.is_empty() {
            left.before_last[id].clone()
        } else {
            extend_before(r, &left.before_last, n_sync)
        };
    }

    // Last access in the right chunk wins; otherwise the left access's
    // after-set is pushed through the right chunk.
    let push_after = |l: &BitSet, r: &BitSet| -> BitSet {
        if !r.is_empty() {
            r.clone()
        } else if l.is_empty() {
            BitSet::empty(n_sync)
        } else {
            extend_after(l, &right.after_first, n_sync)
        }
    };
    let push_before = |l: &BitSet, r: &BitSet| -> BitSet {
        if !l.is_empty() {
            l.clone()
        } else if r.is_empty() {
            BitSet::empty(n_sync)
        } else {
            extend_before(r, &left.before_last, n_sync)
        }
    };
    for k in 0..out.after_last_read.len() {
        out.after_last_read[k] = push_after(&left.after_last_read[k], &right.after_last_read[k]);
        out.before_first_read[k] =
            push_before(&left.before_first_read[k], &right.before_first_read[k]);
    }
    for k in 0..out.after_last_write.len() {
        out.after_last_write[k] =
            push_after(&left.after_last_write[k], &right.after_last_write[k]);
        out.before_first_write[k] =
            push_before(&left.before_first_write[k], &right.before_first_write[k]);
    }

    // Cross races: a left write against right writes and reads, and left
    // reads against right writes. Only keys present on both sides are
    // tested; disjoint witness sets mean unordered conflicting accesses.
    let mut race = left.race || right.race;
    let n_vars = u.n_vars();
    for x in 0..n_vars {
        if race {
            break;
        }
        let aw = &left.after_last_write[x];
        if !aw.is_empty() {
            let bw = &right.before_first_write[x];
            if !bw.is_empty() && !aw.intersects(bw) {
                race = true;
                break;
            }
            for t in 0..u.n_threads() {
                let br = &right.before_first_read[t * n_vars + x];
                if !br.is_empty() && !aw.intersects(br) {
                    race = true;
                    break;
                }
            }
        }
        if race {
            break;
        }
        let bw = &right.before_first_write[x];
        if !bw.is_empty() {
            for t in 0..u.n_threads() {
                let ar = &left.after_last_read[t * n_vars + x];
                if !ar.is_empty() && !ar.intersects(bw) {
                    race = true;
                    break;
                }
            }
        }
    }
    out.race = race;
    out
}

/// Summary of an all-terminal run via one vector-clock pass instead of a
/// length-many summary fold. Extensionally equal to the fold.
pub fn summarize_run(labels: &[EventLabel], u: &Universe) -> HbSummary {
    debug_assert!(!labels.is_empty());
    if labels.len() == 1 {
        return summarize_terminal(&labels[0], u);
    }
    let snaps = clock_snapshots(labels, u);
    let k = labels.len();
    let n_vars = u.n_vars();

    // Witness positions (0-based within the run).
    let mut first_tj: Vec<Option<usize>> = vec![None; u.n_sync()];
    let mut last_tf: Vec<Option<usize>> = vec![None; u.n_sync()];
    let mut first_read: Vec<Option<usize>> = vec![None; u.n_threads() * n_vars];
    let mut last_read: Vec<Option<usize>> = vec![None; u.n_threads() * n_vars];
    let mut first_write: Vec<Option<usize>> = vec![None; n_vars];
    let mut last_write: Vec<Option<usize>> = vec![None; n_vars];
    for (i, label) in labels.iter().enumerate() {
        let t = u.sync_thread(&label.thread) as usize;
        first_tj[t].get_or_insert(i);
        last_tf[t] = Some(i);
        match &label.op {
            Operation::Join(child) => {
                first_tj[u.sync_thread(child) as usize].get_or_insert(i);
            }
            Operation::Fork(child) => {
                last_tf[u.sync_thread(child) as usize] = Some(i);
            }
            Operation::Acquire(l) => {
                first_tj[u.sync_lock(l) as usize].get_or_insert(i);
            }
            Operation::Release(l) => {
                last_tf[u.sync_lock(l) as usize] = Some(i);
            }
            Operation::Read(x) => {
                let key = u.read_key(u.thread_id(&label.thread), u.var_id(x));
                first_read[key].get_or_insert(i);
                last_read[key] = Some(i);
            }
            Operation::Write(x) => {
                let x = u.var_id(x) as usize;
                first_write[x].get_or_insert(i);
                last_write[x] = Some(i);
            }
        }
    }

    let after_of = |i: usize| -> BitSet {
        let mut out = BitSet::empty(u.n_sync());
        for (j, label) in labels.iter().enumerate().take(k).skip(i) {
            if snaps.ordered(i, j) {
                after_contribution(label, u, &mut out);
            }
        }
        out
    };
    let before_of = |i: usize| -> BitSet {
        let mut out = BitSet::empty(u.n_sync());
        for (j, label) in labels.iter().enumerate().take(i + 1) {
            if snaps.ordered(j, i) {
                before_contribution(label, u, &mut out);
            }
        }
        out
    };

    let mut s = HbSummary::empty(u);
    s.race = snaps.race;
    for id in 0..u.n_sync() {
        if let Some(i) = first_tj[id] {
            s.after_first[id] = after_of(i);
        }
        if let Some(i) = last_tf[id] {
            s.before_last[id] = before_of(i);
        }
    }
    for key in 0..first_read.len() {
        if let Some(i) = last_read[key] {
            s.after_last_read[key] = after_of(i);
        }
        if let Some(i) = first_read[key] {
            s.before_first_read[key] = before_of(i);
        }
    }
    for x in 0..n_vars {
        if let Some(i) = last_write[x] {
            s.after_last_write[x] = after_of(i);
        }
        if let Some(i) = first_write[x] {
            s.before_first_write[x] = before_of(i);
        }
    }
    s
}

/// Knobs for [`analyze_slp_hb`].
#[derive(Debug, Clone, Copy)]
pub struct HbOptions {
    /// Summarize all-terminal runs with one vector-clock pass instead of
    /// folding per-event summaries.
    pub vc_run_shortcut: bool,
}

impl Default for HbOptions {
    fn default() -> Self {
        HbOptions {
            vc_run_shortcut: true,
        }
    }
}

/// Result of a compressed happens-before analysis.
pub struct HbAnalysis {
    /// Does the derived trace contain a race? (Existence only; the
    /// compressed analysis does not name an event pair.)
    pub race_found: bool,
    pub universe: Universe,
    /// One summary per rule reachable from the start symbol.
    pub summaries: Vec<Option<HbSummary>>,
}

impl HbAnalysis {
    pub fn summary(&self, rule: RuleId) -> &HbSummary {
        self.summaries[rule as usize]
            .as_ref()
            .expect("rule not reachable from start")
    }
}

/// Decides race existence for the trace an SLP derives, in time linear in
/// the grammar size.
///
/// Summaries are computed bottom-up, one per nonterminal; longer rule
/// bodies are folded left to right, which matches chunk concatenation.
pub fn analyze_slp_hb(slp: &Slp, opts: HbOptions) -> Result<HbAnalysis, SlpError> {
    slp.check()?;
    let universe = Universe::from_slp(slp);
    let order = slp.topological_order()?;
    let mut summaries: Vec<Option<HbSummary>> = vec![None; slp.n_rules()];
    for &rule in &order {
        let body = slp.rule(rule);
        let mut acc: Option<HbSummary> = None;
        let fold = |acc: &mut Option<HbSummary>, next: HbSummary| {
            *acc = Some(match acc.take() {
                None => next,
                Some(prev) => combine(&prev, &next, &universe),
            });
        };
        let mut run: Vec<EventLabel> = Vec::new();
        for sym in body {
            match sym {
                Symbol::Terminal(label) => {
                    if opts.vc_run_shortcut {
                        run.push(label.clone());
                    } else {
                        fold(&mut acc, summarize_terminal(label, &universe));
                    }
                }
                Symbol::NonTerminal(child) => {
                    if !run.is_empty() {
                        fold(&mut acc, summarize_run(&run, &universe));
                        run.clear();
                    }
                    let child_summary = summaries[*child as usize]
                        .as_ref()
                        .expect("children precede parents in topological order");
                    match acc.take() {
                        None => acc = Some(child_summary.clone()),
                        Some(prev) => acc = Some(combine(&prev, child_summary, &universe)),
                    }
                }
            }
        }
        if !run.is_empty() {
            fold(&mut acc, summarize_run(&run, &universe));
        }
        summaries[rule as usize] = Some(acc.unwrap_or_else(|| HbSummary::empty(&universe)));
    }
    let race_found = summaries[slp.start() as usize]
        .as_ref()
        .map(|s| s.race)
        .unwrap_or(false);
    Ok(HbAnalysis {
        race_found,
        universe,
        summaries,
    })
}
