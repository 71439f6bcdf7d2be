//! Lockset-discipline checking (Eraser-style, with reentrant locks).
//!
//! A variable violates the discipline when no lock (real or dummy)
//! protects every access across all threads. Dummy locks keep the check
//! quiet for read-only variables (`Λ`) and thread-local variables (one
//! dummy per thread).
//!
//! - [`oracle`]: whole-trace `LocksHeld` and locksets, the ground truth;
//! - [`eraser`]: two-pass streaming engine over the uncompressed trace;
//! - [`compressed`]: per-nonterminal open-acquire/open-release counters and
//!   lockset maps composed directly on a grammar.

pub mod compressed;
pub mod eraser;
pub mod oracle;

use std::fmt;

use crate::trace::{LockId, ThreadId};

/// A lockset element: a program lock or one of the dummy locks.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LsLock {
    Real(LockId),
    /// Protects variables that are only ever read.
    ReadMarker,
    /// Protects variables only one thread touches.
    ThreadDummy(ThreadId),
}

impl fmt::Display for LsLock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LsLock::Real(l) => write!(f, "{l}"),
            LsLock::ReadMarker => write!(f, "read-only"),
            LsLock::ThreadDummy(t) => write!(f, "local:{t}"),
        }
    }
}

pub use compressed::{analyze_slp_lockset, LockSetSummary, LockSetValue, LsAnalysis};
pub use eraser::{eraser_detect, EraserOutcome};
