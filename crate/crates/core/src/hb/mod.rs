//! Happens-before race detection.
//!
//! Four routes to the same answer:
//!
//! - [`oracle`]: brute-force transitive closure, the ground truth for small
//!   traces;
//! - [`vector_clock`]: streaming Djit+-style detector with full vector
//!   clocks;
//! - [`goldilocks`]: streaming detector tracking thread/lock sets per
//!   access;
//! - [`compressed`]: the per-nonterminal summary analysis that decides race
//!   existence directly on a grammar.

pub mod compressed;
pub mod goldilocks;
pub mod oracle;
pub mod vector_clock;

pub use compressed::{analyze_slp_hb, HbAnalysis, HbOptions, HbSummary};
pub use goldilocks::goldilocks_detect;
pub use oracle::{HbClosure, RacePair};
pub use vector_clock::djit_detect;
