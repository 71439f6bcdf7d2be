//! Dense indexing of threads, locks and variables, plus small bitsets over
//! threads-and-locks.
//!
//! The compositional analyses spend their time unioning and intersecting
//! sets whose universe is `Threads ∪ Locks`; a flat bitset keeps those
//! operations at a handful of word ops.

use std::collections::HashMap;
use std::fmt;

use crate::slp::{Slp, Symbol};
use crate::trace::{EventLabel, LockId, Operation, ThreadId, Trace, VarId};

/// A thread or a lock.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SyncObject {
    Thread(ThreadId),
    Lock(LockId),
}

impl fmt::Display for SyncObject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SyncObject::Thread(t) => write!(f, "{t}"),
            SyncObject::Lock(l) => write!(f, "{l}"),
        }
    }
}

/// Dense ids for the threads, locks and variables of one trace or grammar.
///
/// Threads get ids `0..T`, locks `T..T+L` (so a single bitset covers both),
/// variables get their own `0..V` space.
#[derive(Debug, Clone, Default)]
pub struct Universe {
    threads: Vec<ThreadId>,
    locks: Vec<LockId>,
    vars: Vec<VarId>,
    thread_ids: HashMap<ThreadId, u32>,
    lock_ids: HashMap<LockId, u32>,
    var_ids: HashMap<VarId, u32>,
}

impl Universe {
    pub fn from_labels<'a>(labels: impl Iterator<Item = &'a EventLabel>) -> Self {
        let mut u = Universe::default();
        for label in labels {
            u.add_thread(&label.thread);
            match &label.op {
                Operation::Read(x) | Operation::Write(x) => u.add_var(x),
                Operation::Acquire(l) | Operation::Release(l) => u.add_lock(l),
                Operation::Fork(t) | Operation::Join(t) => u.add_thread(t),
            }
        }
        u
    }

    pub fn from_trace(trace: &Trace) -> Self {
        Self::from_labels(trace.labels())
    }

    /// Universe over every terminal of the grammar.
    pub fn from_slp(slp: &Slp) -> Self {
        let mut u = Universe::default();
        for body in slp.rule_bodies() {
            for sym in body {
                if let Symbol::Terminal(label) = sym {
                    u.add_thread(&label.thread);
                    match &label.op {
                        Operation::Read(x) | Operation::Write(x) => u.add_var(x),
                        Operation::Acquire(l) | Operation::Release(l) => u.add_lock(l),
                        Operation::Fork(t) | Operation::Join(t) => u.add_thread(t),
                    }
                }
            }
        }
        u
    }

    fn add_thread(&mut self, t: &ThreadId) {
        if !self.thread_ids.contains_key(t) {
            self.thread_ids.insert(t.clone(), self.threads.len() as u32);
            self.threads.push(t.clone());
        }
    }

    fn add_lock(&mut self, l: &LockId) {
        if !self.lock_ids.contains_key(l) {
            self.lock_ids.insert(l.clone(), self.locks.len() as u32);
            self.locks.push(l.clone());
        }
    }

    fn add_var(&mut self, x: &VarId) {
        if !self.var_ids.contains_key(x) {
            self.var_ids.insert(x.clone(), self.vars.len() as u32);
            self.vars.push(x.clone());
        }
    }

    pub fn n_threads(&self) -> usize {
        self.threads.len()
    }

    pub fn n_locks(&self) -> usize {
        self.locks.len()
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    /// Size of the thread-or-lock id space.
    pub fn n_sync(&self) -> usize {
        self.threads.len() + self.locks.len()
    }

    pub fn thread_id(&self, t: &ThreadId) -> u32 {
        self.thread_ids[t]
    }

    pub fn lock_id(&self, l: &LockId) -> u32 {
        self.lock_ids[l]
    }

    pub fn var_id(&self, x: &VarId) -> u32 {
        self.var_ids[x]
    }

    /// Thread-or-lock id of a thread.
    pub fn sync_thread(&self, t: &ThreadId) -> u32 {
        self.thread_id(t)
    }

    /// Thread-or-lock id of a lock.
    pub fn sync_lock(&self, l: &LockId) -> u32 {
        self.threads.len() as u32 + self.lock_id(l)
    }

    pub fn threads(&self) -> &[ThreadId] {
        &self.threads
    }

    pub fn locks(&self) -> &[LockId] {
        &self.locks
    }

    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn var(&self, id: u32) -> &VarId {
        &self.vars[id as usize]
    }

    pub fn thread(&self, id: u32) -> &ThreadId {
        &self.threads[id as usize]
    }

    /// The thread or lock behind a combined id.
    pub fn sync_object(&self, id: u32) -> SyncObject {
        let id = id as usize;
        if id < self.threads.len() {
            SyncObject::Thread(self.threads[id].clone())
        } else {
            SyncObject::Lock(self.locks[id - self.threads.len()].clone())
        }
    }

    /// Key into `(thread, var)`-indexed tables.
    pub fn read_key(&self, t: u32, x: u32) -> usize {
        t as usize * self.vars.len() + x as usize
    }

    /// Key into `(thread, lock)`-indexed tables.
    pub fn lock_key(&self, t: u32, l: u32) -> usize {
        t as usize * self.locks.len() + l as usize
    }
}

/// A fixed-width bitset; empty means "no witness" throughout the analyses.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    pub fn empty(universe_size: usize) -> Self {
        BitSet {
            words: vec![0; universe_size.div_ceil(64)],
        }
    }

    pub fn singleton(universe_size: usize, id: u32) -> Self {
        let mut s = Self::empty(universe_size);
        s.insert(id);
        s
    }

    pub fn insert(&mut self, id: u32) {
        self.words[id as usize / 64] |= 1u64 << (id % 64);
    }

    pub fn contains(&self, id: u32) -> bool {
        self.words[id as usize / 64] & (1u64 << (id % 64)) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn union_with(&mut self, other: &BitSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn intersect_with(&mut self, other: &BitSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn intersects(&self, other: &BitSet) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn is_superset(&self, other: &BitSet) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & b == *b)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros();
                w &= w - 1;
                Some(i as u32 * 64 + bit)
            })
        })
    }
}

impl fmt::Debug for BitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bitset_basics() {
        let mut a = BitSet::empty(70);
        a.insert(0);
        a.insert(65);
        assert!(a.contains(65));
        assert!(!a.contains(64));
        assert_eq!(a.iter().collect::<Vec<_>>(), vec![0, 65]);
        let b = BitSet::singleton(70, 65);
        assert!(a.intersects(&b));
        assert!(a.is_superset(&b));
        let mut c = a.clone();
        c.intersect_with(&b);
        assert_eq!(c, b);
    }

    #[test]
    fn universe_ids_are_dense_and_disjoint() {
        let t = crate::trace::parse_trace("1|fork(2)\n2|acq(l)\n2|w(x)\n2|rel(l)\n1|join(2)")
            .unwrap();
        let u = Universe::from_trace(&t);
        assert_eq!(u.n_threads(), 2);
        assert_eq!(u.n_locks(), 1);
        assert_eq!(u.n_vars(), 1);
        let l = LockId::new("l").unwrap();
        assert_eq!(u.sync_lock(&l), 2);
        assert_eq!(u.sync_object(2), SyncObject::Lock(l));
    }
}
