//! Event traces of multi-threaded executions.
//!
//! A trace is a finite sequence of events, each attributed to a thread.
//! Operations cover shared-memory accesses (`r(x)` / `w(x)`), lock
//! acquire/release (`acq(l)` / `rel(l)`, reentrant), and thread structure
//! (`fork(t)` / `join(t)`). Events are identified by their 1-based position;
//! two occurrences of the same label are distinct events.
//!
//! The on-disk format is line oriented: one `<thread>|<op>` per line,
//! `#` starts a comment line, blank lines are skipped.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// An identifier token: non-empty, `[A-Za-z0-9_]+`.
///
/// Tokens are shared (`Arc`) so cloning labels across millions of events is
/// cheap. Numeric-looking tokens stay tokens; `07` and `7` are different.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ident(Arc<str>);

impl Ident {
    pub fn new(token: &str) -> Result<Self, BadToken> {
        if token.is_empty() {
            return Err(BadToken(token.to_string()));
        }
        if !token.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_') {
            return Err(BadToken(token.to_string()));
        }
        Ok(Ident(Arc::from(token)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid identifier token {0:?} (expected non-empty [A-Za-z0-9_]+)")]
pub struct BadToken(pub String);

macro_rules! ident_kind {
    ($(#[$doc:meta])* $name:ident, $tag:literal) => {
        $(#[$doc])*
        #[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub Ident);

        impl $name {
            pub fn new(token: &str) -> Result<Self, BadToken> {
                Ident::new(token).map($name)
            }

            pub fn as_str(&self) -> &str {
                self.0.as_str()
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt(f)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($tag, "({:?})"), self.0)
            }
        }
    };
}

// The three namespaces are disjoint by construction: the kind lives in the
// type, so thread "1" and lock "1" never compare equal.
ident_kind!(
    /// A thread name.
    ThreadId,
    "Thread"
);
ident_kind!(
    /// A lock name.
    LockId,
    "Lock"
);
ident_kind!(
    /// A shared-variable name.
    VarId,
    "Var"
);

/// What a single event does.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Operation {
    Read(VarId),
    Write(VarId),
    Acquire(LockId),
    Release(LockId),
    Fork(ThreadId),
    Join(ThreadId),
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operation::Read(x) => write!(f, "r({x})"),
            Operation::Write(x) => write!(f, "w({x})"),
            Operation::Acquire(l) => write!(f, "acq({l})"),
            Operation::Release(l) => write!(f, "rel({l})"),
            Operation::Fork(t) => write!(f, "fork({t})"),
            Operation::Join(t) => write!(f, "join({t})"),
        }
    }
}

/// A thread paired with an operation. Labels are the compressible alphabet:
/// two occurrences of the same label are equal labels (but distinct events).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct EventLabel {
    pub thread: ThreadId,
    pub op: Operation,
}

impl EventLabel {
    pub fn new(thread: ThreadId, op: Operation) -> Self {
        EventLabel { thread, op }
    }

    /// The variable accessed, if this is a read or write.
    pub fn accessed_var(&self) -> Option<&VarId> {
        match &self.op {
            Operation::Read(x) | Operation::Write(x) => Some(x),
            _ => None,
        }
    }

    pub fn is_write(&self) -> bool {
        matches!(self.op, Operation::Write(_))
    }

    pub fn is_read(&self) -> bool {
        matches!(self.op, Operation::Read(_))
    }
}

impl fmt::Display for EventLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.thread, self.op)
    }
}

impl fmt::Debug for EventLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{},{}>", self.thread, self.op)
    }
}

/// An event: a label at a 1-based trace position. Position order is trace
/// order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub index: u32,
    pub label: EventLabel,
}

impl Event {
    pub fn thread(&self) -> &ThreadId {
        &self.label.thread
    }

    pub fn op(&self) -> &Operation {
        &self.label.op
    }
}

/// An immutable event sequence with contiguous 1-based indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Trace {
    events: Vec<Event>,
}

impl Trace {
    /// Builds a trace, assigning index `i` to the `i`-th label.
    pub fn from_labels(labels: impl IntoIterator<Item = EventLabel>) -> Self {
        let events = labels
            .into_iter()
            .enumerate()
            .map(|(i, label)| Event {
                index: (i + 1) as u32,
                label,
            })
            .collect();
        Trace { events }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn labels(&self) -> impl Iterator<Item = &EventLabel> + '_ {
        self.events.iter().map(|e| &e.label)
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// The event at 1-based index `index`.
    pub fn event(&self, index: u32) -> Option<&Event> {
        self.events.get(index.checked_sub(1)? as usize)
    }

    /// All threads of the trace, including fork/join targets that never
    /// perform an event themselves.
    pub fn threads(&self) -> BTreeSet<ThreadId> {
        let mut out = BTreeSet::new();
        for e in &self.events {
            out.insert(e.thread().clone());
            match e.op() {
                Operation::Fork(t) | Operation::Join(t) => {
                    out.insert(t.clone());
                }
                _ => {}
            }
        }
        out
    }

    /// All locks acquired or released in the trace.
    pub fn locks(&self) -> BTreeSet<LockId> {
        let mut out = BTreeSet::new();
        for e in &self.events {
            match e.op() {
                Operation::Acquire(l) | Operation::Release(l) => {
                    out.insert(l.clone());
                }
                _ => {}
            }
        }
        out
    }

    /// All variables read or written in the trace.
    pub fn vars(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        for e in &self.events {
            if let Some(x) = e.label.accessed_var() {
                out.insert(x.clone());
            }
        }
        out
    }

    /// The subsequence of events performed by `thread`, original indices
    /// preserved. Unknown threads yield an empty list.
    pub fn project(&self, thread: &ThreadId) -> Vec<&Event> {
        self.events
            .iter()
            .filter(|e| e.thread() == thread)
            .collect()
    }

    /// For every event, the index of its matching acquire/release, if any.
    ///
    /// Locks are reentrant: a release matches the last acquire of the same
    /// (thread, lock) that no earlier release of that thread has matched.
    /// Non-acquire/release events map to `None`, as do unmatched ones.
    pub fn matching(&self) -> Vec<Option<u32>> {
        let mut out = vec![None; self.events.len()];
        // Stack of open acquire indices per (thread, lock).
        let mut open: HashMap<(&ThreadId, &LockId), Vec<u32>> = HashMap::new();
        for e in &self.events {
            match e.op() {
                Operation::Acquire(l) => {
                    open.entry((e.thread(), l)).or_default().push(e.index);
                }
                Operation::Release(l) => {
                    if let Some(acq) = open.entry((e.thread(), l)).or_default().pop() {
                        out[acq as usize - 1] = Some(e.index);
                        out[e.index as usize - 1] = Some(acq);
                    }
                }
                _ => {}
            }
        }
        out
    }

    /// The matching acquire of a release (or vice versa), or `None` when
    /// unmatched within the trace.
    pub fn match_event(&self, event: &Event) -> Result<Option<&Event>, MatchError> {
        match self.event(event.index) {
            Some(e) if e == event => {}
            _ => return Err(MatchError::NotInTrace),
        }
        if !matches!(
            event.op(),
            Operation::Acquire(_) | Operation::Release(_)
        ) {
            return Err(MatchError::NotLockEvent);
        }
        let m = self.matching()[event.index as usize - 1];
        Ok(m.and_then(|i| self.event(i)))
    }

    /// Serializes to the line-oriented trace format. `parse_trace` of the
    /// result is the identity.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&e.label.to_string());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatchError {
    #[error("event is not part of this trace")]
    NotInTrace,
    #[error("event is not an acquire or release")]
    NotLockEvent,
}

/// Summary counts and access maps for a trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStats {
    pub n_events: usize,
    pub threads: BTreeSet<ThreadId>,
    pub locks: BTreeSet<LockId>,
    pub vars: BTreeSet<VarId>,
    /// (thread, variable) pairs with at least one read.
    pub rvars: BTreeSet<(ThreadId, VarId)>,
    /// Variables with at least one write.
    pub wvars: BTreeSet<VarId>,
    /// Read event indices per (thread, variable), in trace order.
    pub reads: BTreeMap<(ThreadId, VarId), Vec<u32>>,
    /// Write event indices per variable, in trace order.
    pub writes: BTreeMap<VarId, Vec<u32>>,
    /// Maximum number of simultaneously unmatched acquires over all
    /// (thread, lock) pairs.
    pub max_reentrancy: u32,
}

impl TraceStats {
    /// First index of a non-empty index list.
    pub fn first(indices: &[u32]) -> Option<u32> {
        indices.first().copied()
    }

    /// Last index of a non-empty index list.
    pub fn last(indices: &[u32]) -> Option<u32> {
        indices.last().copied()
    }
}

/// Computes [`TraceStats`] for a trace.
pub fn trace_stats(trace: &Trace) -> TraceStats {
    let mut reads: BTreeMap<(ThreadId, VarId), Vec<u32>> = BTreeMap::new();
    let mut writes: BTreeMap<VarId, Vec<u32>> = BTreeMap::new();
    let mut depth: HashMap<(&ThreadId, &LockId), u32> = HashMap::new();
    let mut max_reentrancy = 0u32;
    for e in trace.events() {
        match e.op() {
            Operation::Read(x) => reads
                .entry((e.thread().clone(), x.clone()))
                .or_default()
                .push(e.index),
            Operation::Write(x) => writes.entry(x.clone()).or_default().push(e.index),
            Operation::Acquire(l) => {
                let d = depth.entry((e.thread(), l)).or_insert(0);
                *d += 1;
                max_reentrancy = max_reentrancy.max(*d);
            }
            Operation::Release(l) => {
                let d = depth.entry((e.thread(), l)).or_insert(0);
                *d = d.saturating_sub(1);
            }
            _ => {}
        }
    }
    TraceStats {
        n_events: trace.len(),
        threads: trace.threads(),
        locks: trace.locks(),
        vars: trace.vars(),
        rvars: reads.keys().cloned().collect(),
        wvars: writes.keys().cloned().collect(),
        reads,
        writes,
        max_reentrancy,
    }
}

/// A parse failure, positioned at a 1-based physical line.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("expected `<thread>|<op>`")]
    MissingSeparator,
    #[error("unknown operation {0:?}")]
    UnknownOp(String),
    #[error("malformed operation {0:?} (expected `op(token)`)")]
    MalformedOp(String),
    #[error(transparent)]
    BadToken(#[from] BadToken),
}

/// Parses the line-oriented trace format.
///
/// Event indices are assigned 1-based over event lines only; comments and
/// blank lines do not count. An empty input is a valid 0-event trace.
pub fn parse_trace(text: &str) -> Result<Trace, ParseError> {
    let mut interner: HashMap<Box<str>, Ident> = HashMap::new();
    let mut labels = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let label = parse_label_interned(line, &mut interner).map_err(|kind| ParseError {
            line: lineno + 1,
            kind,
        })?;
        labels.push(label);
    }
    Ok(Trace::from_labels(labels))
}

/// Parses a single `<thread>|<op>` event label.
pub fn parse_label(text: &str) -> Result<EventLabel, ParseErrorKind> {
    parse_label_interned(text, &mut HashMap::new())
}

fn parse_label_interned(
    text: &str,
    interner: &mut HashMap<Box<str>, Ident>,
) -> Result<EventLabel, ParseErrorKind> {
    let mut intern = |tok: &str| -> Result<Ident, ParseErrorKind> {
        if let Some(id) = interner.get(tok) {
            return Ok(id.clone());
        }
        let id = Ident::new(tok)?;
        interner.insert(tok.into(), id.clone());
        Ok(id)
    };
    let (thread_tok, op_part) = text
        .split_once('|')
        .ok_or(ParseErrorKind::MissingSeparator)?;
    let thread = ThreadId(intern(thread_tok)?);
    let (name, rest) = op_part
        .split_once('(')
        .ok_or_else(|| ParseErrorKind::MalformedOp(op_part.to_string()))?;
    let operand = rest
        .strip_suffix(')')
        .ok_or_else(|| ParseErrorKind::MalformedOp(op_part.to_string()))?;
    let operand = intern(operand)?;
    let op = match name {
        "r" => Operation::Read(VarId(operand)),
        "w" => Operation::Write(VarId(operand)),
        "acq" => Operation::Acquire(LockId(operand)),
        "rel" => Operation::Release(LockId(operand)),
        "fork" => Operation::Fork(ThreadId(operand)),
        "join" => Operation::Join(ThreadId(operand)),
        _ => return Err(ParseErrorKind::UnknownOp(name.to_string())),
    };
    Ok(EventLabel { thread, op })
}

/// Severity of a well-formedness diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    /// Legal but noteworthy (e.g. locks still held at trace end).
    Warning,
    /// The structural assumptions the analyses rely on are broken.
    Error,
}

/// A well-formedness finding for one event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub event_index: u32,
    pub kind: DiagnosticKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiagnosticKind {
    /// A forked thread performed an event before its fork.
    EventBeforeFork(ThreadId),
    /// `join(t)` where `t` is never forked.
    JoinOfUnforked(ThreadId),
    /// `t` is forked and joined by different threads.
    ForkJoinParentMismatch(ThreadId),
    /// Release with no open acquire of the same (thread, lock).
    UnmatchedRelease(LockId),
    /// Acquire left open at trace end.
    UnmatchedAcquire(LockId),
    /// A thread acquired a lock currently held by a different thread.
    CrossThreadAcquire(LockId, ThreadId),
    /// `fork(t)` or `join(t)` performed by `t` itself.
    SelfForkOrJoin,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev} at event {}: ", self.event_index)?;
        match &self.kind {
            DiagnosticKind::EventBeforeFork(t) => {
                write!(f, "thread {t} performs an event before it is forked")
            }
            DiagnosticKind::JoinOfUnforked(t) => write!(f, "join of never-forked thread {t}"),
            DiagnosticKind::ForkJoinParentMismatch(t) => {
                write!(f, "thread {t} is forked and joined by different parents")
            }
            DiagnosticKind::UnmatchedRelease(l) => {
                write!(f, "release of {l} with no matching acquire")
            }
            DiagnosticKind::UnmatchedAcquire(l) => {
                write!(f, "acquire of {l} never released")
            }
            DiagnosticKind::CrossThreadAcquire(l, t) => {
                write!(f, "acquire of {l} while held by thread {t}")
            }
            DiagnosticKind::SelfForkOrJoin => write!(f, "thread forks or joins itself"),
        }
    }
}

/// Checks the structural assumptions of the analyses.
///
/// Fork/join violations and cross-thread acquires are errors; locks left
/// open or released without an acquire are warnings. Diagnostics are the
/// output; no trace is rejected here.
pub fn validate(trace: &Trace) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    // First fork of each thread.
    let mut fork_at: HashMap<&ThreadId, (u32, &ThreadId)> = HashMap::new();
    for e in trace.events() {
        if let Operation::Fork(t) = e.op() {
            fork_at.entry(t).or_insert((e.index, e.thread()));
        }
    }
    let mut depth: HashMap<(&ThreadId, &LockId), u32> = HashMap::new();
    let mut holder: HashMap<&LockId, &ThreadId> = HashMap::new();
    for e in trace.events() {
        if let Some(&(fork_idx, _)) = fork_at.get(e.thread()) {
            if e.index < fork_idx {
                out.push(Diagnostic {
                    severity: Severity::Error,
                    event_index: e.index,
                    kind: DiagnosticKind::EventBeforeFork(e.thread().clone()),
                });
            }
        }
        match e.op() {
            Operation::Fork(t) | Operation::Join(t) if t == e.thread() => {
                out.push(Diagnostic {
                    severity: Severity::Error,
                    event_index: e.index,
                    kind: DiagnosticKind::SelfForkOrJoin,
                });
            }
            Operation::Join(t) => match fork_at.get(t) {
                None => out.push(Diagnostic {
                    severity: Severity::Error,
                    event_index: e.index,
                    kind: DiagnosticKind::JoinOfUnforked(t.clone()),
                }),
                Some(&(_, parent)) if parent != e.thread() => out.push(Diagnostic {
                    severity: Severity::Error,
                    event_index: e.index,
                    kind: DiagnosticKind::ForkJoinParentMismatch(t.clone()),
                }),
                _ => {}
            },
            Operation::Acquire(l) => {
                match holder.get(l) {
                    Some(&t) if t != e.thread() => out.push(Diagnostic {
                        severity: Severity::Error,
                        event_index: e.index,
                        kind: DiagnosticKind::CrossThreadAcquire(l.clone(), t.clone()),
                    }),
                    _ => {}
                }
                holder.insert(l, e.thread());
                *depth.entry((e.thread(), l)).or_insert(0) += 1;
            }
            Operation::Release(l) => {
                let d = depth.entry((e.thread(), l)).or_insert(0);
                if *d == 0 {
                    out.push(Diagnostic {
                        severity: Severity::Warning,
                        event_index: e.index,
                        kind: DiagnosticKind::UnmatchedRelease(l.clone()),
                    });
                } else {
                    *d -= 1;
                    if *d == 0 && holder.get(l) == Some(&e.thread()) {
                        holder.remove(l);
                    }
                }
            }
            _ => {}
        }
    }
    // Acquires still open at trace end: warn at the outermost open acquire.
    let matching = trace.matching();
    for e in trace.events() {
        if let Operation::Acquire(l) = e.op() {
            if matching[e.index as usize - 1].is_none() {
                out.push(Diagnostic {
                    severity: Severity::Warning,
                    event_index: e.index,
                    kind: DiagnosticKind::UnmatchedAcquire(l.clone()),
                });
            }
        }
    }
    out.sort_by_key(|d| d.event_index);
    out
}

/// True when no [`Severity::Error`] diagnostic is present.
pub fn is_error_free(diagnostics: &[Diagnostic]) -> bool {
    diagnostics.iter().all(|d| d.severity != Severity::Error)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn trace(text: &str) -> Trace {
        parse_trace(text).unwrap()
    }

    #[test]
    fn parse_two_events() {
        let t = trace("1|w(x)\n1|fork(2)");
        assert_eq!(t.len(), 2);
        let threads: Vec<_> = t.threads().iter().map(|t| t.as_str().to_string()).collect();
        assert_eq!(threads, ["1", "2"]);
    }

    #[test]
    fn parse_sigma1_fixture() {
        let t = fixtures::sigma1();
        assert_eq!(t.len(), 16);
        let stats = trace_stats(&t);
        assert_eq!(stats.threads.len(), 2);
        assert_eq!(
            stats.locks.iter().map(|l| l.as_str()).collect::<Vec<_>>(),
            ["l"]
        );
        assert_eq!(
            stats.wvars.iter().map(|x| x.as_str()).collect::<Vec<_>>(),
            ["x", "y"]
        );
        let rvars: Vec<_> = stats
            .rvars
            .iter()
            .map(|(t, x)| (t.as_str(), x.as_str()))
            .collect();
        assert_eq!(rvars, [("1", "x"), ("2", "x")]);
    }

    #[test]
    fn parse_unknown_op_is_an_error() {
        let err = parse_trace("1|foo(x)").unwrap_err();
        assert_eq!(err.line, 1);
        assert!(matches!(err.kind, ParseErrorKind::UnknownOp(_)));
    }

    #[test]
    fn parse_error_line_numbers_count_comments() {
        let err = parse_trace("# header\n\n1|w(x)\n1|r(").unwrap_err();
        assert_eq!(err.line, 4);
    }

    #[test]
    fn empty_input_is_a_zero_event_trace() {
        let t = trace("");
        assert!(t.is_empty());
        let stats = trace_stats(&t);
        assert_eq!(stats.max_reentrancy, 0);
        assert!(stats.threads.is_empty());
    }

    #[test]
    fn roundtrip_through_text() {
        let t = fixtures::sigma1();
        assert_eq!(parse_trace(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn reentrant_matching() {
        let t = trace("1|acq(l)\n1|acq(l)\n1|rel(l)\n1|rel(l)");
        let m = t.matching();
        assert_eq!(m, vec![Some(4), Some(3), Some(2), Some(1)]);
        let e3 = t.event(3).unwrap();
        assert_eq!(t.match_event(e3).unwrap().unwrap().index, 2);
    }

    #[test]
    fn sigma1_match_e6_is_e4() {
        let t = fixtures::sigma1();
        let e6 = t.event(6).unwrap();
        assert_eq!(t.match_event(e6).unwrap().unwrap().index, 4);
    }

    #[test]
    fn unmatched_release_has_no_match() {
        let t = trace("1|rel(l)");
        let e1 = t.event(1).unwrap();
        assert_eq!(t.match_event(e1).unwrap(), None);
    }

    #[test]
    fn match_event_usage_errors() {
        let t = trace("1|w(x)");
        let e1 = t.event(1).unwrap();
        assert_eq!(t.match_event(e1), Err(MatchError::NotLockEvent));
        let foreign = Event {
            index: 7,
            label: e1.label.clone(),
        };
        assert_eq!(t.match_event(&foreign), Err(MatchError::NotInTrace));
    }

    #[test]
    fn project_sigma1_thread2() {
        let t = fixtures::sigma1();
        let p = t.project(&ThreadId::new("2").unwrap());
        let indices: Vec<u32> = p.iter().map(|e| e.index).collect();
        assert_eq!(indices, [3, 4, 5, 6, 11, 12, 13, 14]);
    }

    #[test]
    fn project_unknown_thread_is_empty() {
        let t = fixtures::sigma1();
        assert!(t.project(&ThreadId::new("99").unwrap()).is_empty());
    }

    #[test]
    fn project_single_thread_is_identity() {
        let t = trace("1|w(x)\n1|r(x)\n1|acq(l)");
        let p = t.project(&ThreadId::new("1").unwrap());
        assert_eq!(p.len(), t.len());
    }

    #[test]
    fn sigma1_access_maps() {
        let t = fixtures::sigma1();
        let stats = trace_stats(&t);
        let key = (ThreadId::new("2").unwrap(), VarId::new("x").unwrap());
        assert_eq!(stats.reads[&key], vec![3, 11]);
        let y = VarId::new("y").unwrap();
        assert_eq!(stats.writes[&y], vec![5, 10, 13, 16]);
        assert_eq!(TraceStats::last(&stats.reads[&key]), Some(11));
        assert_eq!(TraceStats::first(&stats.writes[&y]), Some(5));
    }

    #[test]
    fn reentrancy_depth() {
        let t = trace("1|acq(l)\n1|acq(l)");
        assert_eq!(trace_stats(&t).max_reentrancy, 2);
    }

    #[test]
    fn validate_sigma1_is_clean() {
        assert!(validate(&fixtures::sigma1()).is_empty());
    }

    #[test]
    fn validate_join_of_unforked() {
        let diags = validate(&trace("1|join(2)"));
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].severity, Severity::Error);
        assert!(matches!(diags[0].kind, DiagnosticKind::JoinOfUnforked(_)));
    }

    #[test]
    fn validate_unmatched_release_is_warning() {
        let diags = validate(&trace("1|rel(l)"));
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].severity, Severity::Warning);
        assert!(matches!(
            diags[0].kind,
            DiagnosticKind::UnmatchedRelease(_)
        ));
    }

    #[test]
    fn validate_cross_thread_acquire() {
        let diags = validate(&trace("1|acq(l)\n2|acq(l)"));
        assert!(diags
            .iter()
            .any(|d| matches!(d.kind, DiagnosticKind::CrossThreadAcquire(..))
                && d.severity == Severity::Error));
    }

    #[test]
    fn validate_event_before_fork_and_mismatch() {
        let diags = validate(&trace("2|w(x)\n1|fork(2)\n3|join(2)\n1|fork(3)"));
        assert!(diags
            .iter()
            .any(|d| matches!(d.kind, DiagnosticKind::EventBeforeFork(_))));
        assert!(diags
            .iter()
            .any(|d| matches!(d.kind, DiagnosticKind::ForkJoinParentMismatch(_))));
    }

    #[test]
    fn validate_self_fork() {
        let diags = validate(&trace("1|fork(1)"));
        assert!(matches!(diags[0].kind, DiagnosticKind::SelfForkOrJoin));
    }

    #[test]
    fn bad_tokens_rejected() {
        assert!(parse_trace("1|w(x-y)").is_err());
        assert!(parse_trace("|w(x)").is_err());
        assert!(parse_trace("1|w()").is_err());
    }
}
