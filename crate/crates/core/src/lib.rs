//! Race detection on grammar-compressed concurrency traces.
//!
//! Traces of multi-threaded executions are compressed into straight-line
//! programs (single-string grammars) with Sequitur, and two classical
//! dynamic analyses run directly on the compressed form, in time linear in
//! the grammar size:
//!
//! - happens-before race detection ([`hb`]), cross-checked against a
//!   Djit+-style vector-clock detector, the Goldilocks detector and a
//!   brute-force closure oracle;
//! - lockset-discipline checking ([`lockset`]), cross-checked against
//!   Eraser with reentrant locks and dummy-lock refinements.
//!
//! [`verify`] wires all engines together for differential testing and
//! [`gen`] produces deterministic synthetic workloads.

pub mod fixtures;
pub mod gen;
pub mod hb;
pub mod lockset;
pub mod report;
pub mod sequitur;
pub mod slp;
pub mod sync_set;
pub mod trace;
pub mod verify;

pub use slp::{expand, grammar_stats, normalize, parse_slp, serialize_slp, validate_slp, Slp};
pub use trace::{parse_trace, trace_stats, validate, Trace};

/// Default event-count ceiling for the brute-force oracles.
pub const DEFAULT_ORACLE_CAP: usize = 2000;
