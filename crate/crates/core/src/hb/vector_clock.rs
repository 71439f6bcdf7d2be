//! Streaming vector-clock race detection (Djit+ with full clocks, no
//! epochs).
//!
//! Each thread carries a clock vector; releases, forks and joins publish
//! and absorb clocks so that event `a` happens-before event `b` exactly
//! when `a`'s snapshot component for its own thread is at most `b`'s.
//! Lock clocks accumulate across releases, so the release-to-any-later-
//! acquire ordering holds even on traces that misuse locks.
//!
//! Per variable the engine keeps the clock (and index) of every thread's
//! last write and last read; a race is reported at the first access that is
//! unordered with one of those, paired with the latest such access.

use crate::hb::oracle::RacePair;
use crate::sync_set::Universe;
use crate::trace::{EventLabel, Operation, Trace};

/// Thread and lock clocks, updated event by event.
struct ClockState {
    n_threads: usize,
    /// Flat `[thread][thread]` clock matrix.
    thread_clocks: Vec<u64>,
    /// Flat `[lock][thread]` clock matrix.
    lock_clocks: Vec<u64>,
    /// Clock published by a fork, held back until the child performs an
    /// event: a fork orders only the child's later events, so a join that
    /// sees no child event must not observe the fork.
    pending_fork: Vec<Option<Vec<u64>>>,
}

fn join_into(dst: &mut [u64], src: &[u64]) {
    for (a, b) in dst.iter_mut().zip(src) {
        *a = (*a).max(*b);
    }
}

impl ClockState {
    fn new(universe: &Universe) -> Self {
        let t = universe.n_threads();
        let mut thread_clocks = vec![0u64; t * t];
        for i in 0..t {
            thread_clocks[i * t + i] = 1;
        }
        ClockState {
            n_threads: t,
            thread_clocks,
            lock_clocks: vec![0u64; universe.n_locks() * t],
            pending_fork: vec![None; t],
        }
    }

    fn thread_row(&self, t: u32) -> &[u64] {
        let n = self.n_threads;
        &self.thread_clocks[t as usize * n..(t as usize + 1) * n]
    }

    fn rows(&mut self, a: usize, b: usize) -> (&mut [u64], &[u64]) {
        let n = self.n_threads;
        debug_assert_ne!(a, b);
        if a < b {
            let (lo, hi) = self.thread_clocks.split_at_mut(b * n);
            (&mut lo[a * n..(a + 1) * n], &hi[..n])
        } else {
            let (lo, hi) = self.thread_clocks.split_at_mut(a * n);
            (&mut hi[..n], &lo[b * n..(b + 1) * n])
        }
    }

    /// Acquire/join absorption; runs before the event's snapshot is taken.
    fn absorb(&mut self, t: u32, op: &Operation, universe: &Universe) {
        let n = self.n_threads;
        if let Some(p) = self.pending_fork[t as usize].take() {
            join_into(
                &mut self.thread_clocks[t as usize * n..(t as usize + 1) * n],
                &p,
            );
        }
        match op {
            Operation::Acquire(l) => {
                let l = universe.lock_id(l) as usize;
                let (locks, threads) = (&self.lock_clocks, &mut self.thread_clocks);
                let src = &locks[l * n..(l + 1) * n];
                join_into(&mut threads[t as usize * n..(t as usize + 1) * n], src);
            }
            Operation::Join(u) => {
                let u = universe.thread_id(u);
                if u != t {
                    let (dst, src) = self.rows(t as usize, u as usize);
                    join_into(dst, src);
                }
            }
            _ => {}
        }
    }

    /// Release/fork/join publication; runs after the snapshot.
    fn publish(&mut self, t: u32, op: &Operation, universe: &Universe) {
        let n = self.n_threads;
        match op {
            Operation::Release(l) => {
                let l = universe.lock_id(l) as usize;
                let src = &self.thread_clocks[t as usize * n..(t as usize + 1) * n];
                let dst = &mut self.lock_clocks[l * n..(l + 1) * n];
                join_into(dst, src);
                self.thread_clocks[t as usize * n + t as usize] += 1;
            }
            Operation::Fork(u) => {
                let u = universe.thread_id(u);
                if u != t {
                    let row = self.thread_clocks[t as usize * n..(t as usize + 1) * n].to_vec();
                    match &mut self.pending_fork[u as usize] {
                        Some(p) => join_into(p, &row),
                        slot => *slot = Some(row),
                    }
                    self.thread_clocks[t as usize * n + t as usize] += 1;
                }
            }
            Operation::Join(u) => {
                let u = universe.thread_id(u) as usize;
                self.thread_clocks[u * n + u] += 1;
            }
            _ => {}
        }
    }
}

/// Per-variable access clocks: one slot per thread for writes and reads.
struct AccessState {
    n_threads: usize,
    write_clock: Vec<u64>,
    write_index: Vec<u32>,
    read_clock: Vec<u64>,
    read_index: Vec<u32>,
}

impl AccessState {
    fn new(universe: &Universe) -> Self {
        let slots = universe.n_vars() * universe.n_threads();
        AccessState {
            n_threads: universe.n_threads(),
            write_clock: vec![0; slots],
            write_index: vec![0; slots],
            read_clock: vec![0; slots],
            read_index: vec![0; slots],
        }
    }

    fn slot(&self, x: u32, t: usize) -> usize {
        x as usize * self.n_threads + t
    }

    /// Latest prior access unordered with the current one, if any.
    /// `own` is the current thread's clock row.
    fn check(&self, x: u32, t: u32, own: &[u64], against_reads: bool) -> Option<u32> {
        let mut worst: Option<u32> = None;
        for (u, &own_u) in own.iter().enumerate().take(self.n_threads) {
            if u == t as usize {
                continue;
            }
            let s = self.slot(x, u);
            if self.write_clock[s] > own_u {
                worst = Some(worst.unwrap_or(0).max(self.write_index[s]));
            }
            if against_reads && self.read_clock[s] > own_u {
                worst = Some(worst.unwrap_or(0).max(self.read_index[s]));
            }
        }
        worst
    }
}

/// Runs the vector-clock detector over a trace.
///
/// Returns the first race in streaming order: the racy access paired with
/// the latest conflicting earlier access it is unordered with.
pub fn djit_detect(trace: &Trace) -> Option<RacePair> {
    let universe = Universe::from_trace(trace);
    let mut clocks = ClockState::new(&universe);
    let mut accesses = AccessState::new(&universe);
    for e in trace.events() {
        let t = universe.thread_id(e.thread());
        clocks.absorb(t, e.op(), &universe);
        match e.op() {
            Operation::Read(x) => {
                let x = universe.var_id(x);
                let own = clocks.thread_row(t);
                if let Some(prior) = accesses.check(x, t, own, false) {
                    return Some(RacePair {
                        first: prior,
                        second: e.index,
                        var: e.label.accessed_var().cloned().unwrap(),
                    });
                }
                let s = accesses.slot(x, t as usize);
                accesses.read_clock[s] = own[t as usize];
                accesses.read_index[s] = e.index;
            }
            Operation::Write(x) => {
                let x = universe.var_id(x);
                let own = clocks.thread_row(t);
                if let Some(prior) = accesses.check(x, t, own, true) {
                    return Some(RacePair {
                        first: prior,
                        second: e.index,
                        var: e.label.accessed_var().cloned().unwrap(),
                    });
                }
                let s = accesses.slot(x, t as usize);
                accesses.write_clock[s] = own[t as usize];
                accesses.write_index[s] = e.index;
            }
            _ => {}
        }
        clocks.publish(t, e.op(), &universe);
    }
    None
}

/// Vector-clock snapshots of a label run, one clock row per event, plus
/// whether the run contains a race.
///
/// Snapshot `i` is the clock of the performing thread at event `i` (after
/// acquire/join absorption). Event `i` happens-before event `j` within the
/// run exactly when `snapshot(j)[thread(i)] >= snapshot(i)[thread(i)]`.
pub struct ClockSnapshots {
    n_threads: usize,
    thread_of: Vec<u32>,
    clocks: Vec<u64>,
    pub race: bool,
}

impl ClockSnapshots {
    pub fn snapshot(&self, event: usize) -> &[u64] {
        &self.clocks[event * self.n_threads..(event + 1) * self.n_threads]
    }

    /// Universe thread id of the event's performer.
    pub fn thread_of(&self, event: usize) -> u32 {
        self.thread_of[event]
    }

    /// Reflexive happens-before between run positions (0-based).
    pub fn ordered(&self, a: usize, b: usize) -> bool {
        debug_assert!(a <= b);
        let t = self.thread_of[a] as usize;
        self.snapshot(b)[t] >= self.snapshot(a)[t]
    }
}

/// Runs the clock pass over a label sequence against a fixed universe.
pub fn clock_snapshots(labels: &[EventLabel], universe: &Universe) -> ClockSnapshots {
    let n = universe.n_threads();
    let mut clocks = ClockState::new(universe);
    let mut accesses = AccessState::new(universe);
    let mut out = Vec::with_capacity(labels.len() * n);
    let mut thread_of = Vec::with_capacity(labels.len());
    let mut race = false;
    for (i, label) in labels.iter().enumerate() {
        let t = universe.thread_id(&label.thread);
        thread_of.push(t);
        clocks.absorb(t, &label.op, universe);
        let own = clocks.thread_row(t);
        out.extend_from_slice(own);
        match &label.op {
            Operation::Read(x) => {
                let x = universe.var_id(x);
                if !race && accesses.check(x, t, own, false).is_some() {
                    race = true;
                }
                let s = accesses.slot(x, t as usize);
                accesses.read_clock[s] = own[t as usize];
                accesses.read_index[s] = i as u32 + 1;
            }
            Operation::Write(x) => {
                let x = universe.var_id(x);
                if !race && accesses.check(x, t, own, true).is_some() {
                    race = true;
                }
                let s = accesses.slot(x, t as usize);
                accesses.write_clock[s] = own[t as usize];
                accesses.write_index[s] = i as u32 + 1;
            }
            _ => {}
        }
        clocks.publish(t, &label.op, universe);
    }
    ClockSnapshots {
        n_threads: n,
        thread_of,
        clocks: out,
        race,
    }
}
