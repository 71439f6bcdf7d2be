//! Straight-line programs: context-free grammars deriving exactly one
//! string.
//!
//! Every nonterminal has exactly one rule and the reference graph is
//! acyclic, so each nonterminal derives a unique label sequence (its
//! *chunk*). Rule bodies are not forced into binary form; the analyses fold
//! over arbitrary-arity bodies.
//!
//! The on-disk format:
//!
//! ```text
//! slp v1
//! start @0
//! @0 := @1 @1
//! @1 := 1|r(x) 1|w(x)
//! ```

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::trace::{parse_label, EventLabel, Trace};

/// Index of a rule within an [`Slp`].
pub type RuleId = u32;

/// One grammar symbol: an event label or a reference to a rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Symbol {
    Terminal(EventLabel),
    NonTerminal(RuleId),
}

/// A single-string grammar. `rules[id]` is the unique body of nonterminal
/// `id`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slp {
    start: RuleId,
    rules: Vec<Vec<Symbol>>,
}

impl Slp {
    /// Builds a grammar without checking invariants; run [`validate_slp`]
    /// or [`Slp::check`] before analysis.
    pub fn new(start: RuleId, rules: Vec<Vec<Symbol>>) -> Self {
        Slp { start, rules }
    }

    pub fn start(&self) -> RuleId {
        self.start
    }

    pub fn n_rules(&self) -> usize {
        self.rules.len()
    }

    pub fn rule(&self, id: RuleId) -> &[Symbol] {
        &self.rules[id as usize]
    }

    pub fn rule_bodies(&self) -> impl Iterator<Item = &[Symbol]> {
        self.rules.iter().map(|b| b.as_slice())
    }

    /// The same rule set with a different start symbol; expanding it yields
    /// the chunk `rule` derives.
    pub fn rooted_at(&self, rule: RuleId) -> Slp {
        Slp {
            start: rule,
            rules: self.rules.clone(),
        }
    }

    /// Errors if the grammar violates any SLP invariant.
    pub fn check(&self) -> Result<(), SlpError> {
        match validate_slp(self)
            .into_iter()
            .find(|d| d.severity() == SlpSeverity::Error)
        {
            None => Ok(()),
            Some(d) => Err(SlpError(d)),
        }
    }

    /// Rule ids in an order where every rule appears after all rules it
    /// references (reverse rank order). Only rules reachable from the start
    /// symbol are listed.
    ///
    /// Errors when the reference graph has a cycle or an undefined
    /// reference, since no such order exists then.
    pub fn topological_order(&self) -> Result<Vec<RuleId>, SlpError> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        let mut marks = vec![Mark::New; self.rules.len()];
        let mut order = Vec::new();
        // Iterative DFS; (rule, next symbol position) frames.
        let mut stack: Vec<(RuleId, usize)> = Vec::new();
        if self.start as usize >= self.rules.len() {
            return Err(SlpError(SlpDiagnostic::UndefinedReference {
                referrer: self.start,
                target: self.start,
            }));
        }
        stack.push((self.start, 0));
        marks[self.start as usize] = Mark::Active;
        while let Some(&(rule, pos)) = stack.last() {
            let body = &self.rules[rule as usize];
            let mut next_child = None;
            let mut p = pos;
            while p < body.len() {
                let sym = &body[p];
                p += 1;
                if let Symbol::NonTerminal(child) = *sym {
                    if child as usize >= self.rules.len() {
                        return Err(SlpError(SlpDiagnostic::UndefinedReference {
                            referrer: rule,
                            target: child,
                        }));
                    }
                    match marks[child as usize] {
                        Mark::New => {
                            next_child = Some(child);
                            break;
                        }
                        Mark::Active => {
                            return Err(SlpError(SlpDiagnostic::Cycle { rule: child }))
                        }
                        Mark::Done => {}
                    }
                }
            }
            stack.last_mut().unwrap().1 = p;
            match next_child {
                Some(child) => {
                    marks[child as usize] = Mark::Active;
                    stack.push((child, 0));
                }
                None => {
                    stack.pop();
                    marks[rule as usize] = Mark::Done;
                    order.push(rule);
                }
            }
        }
        Ok(order)
    }

    /// Length of the chunk each rule derives. Indexed by rule id; rules
    /// unreachable from the start symbol get length 0.
    pub fn chunk_lengths(&self) -> Result<Vec<u64>, SlpError> {
        let order = self.topological_order()?;
        let mut lengths = vec![0u64; self.rules.len()];
        for &rule in &order {
            let mut n = 0u64;
            for sym in self.rule(rule) {
                n += match sym {
                    Symbol::Terminal(_) => 1,
                    Symbol::NonTerminal(child) => lengths[*child as usize],
                };
            }
            lengths[rule as usize] = n;
        }
        Ok(lengths)
    }
}

/// Severity of an SLP diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlpSeverity {
    Warning,
    Error,
}

/// One grammar well-formedness finding.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SlpDiagnostic {
    #[error("rule @{rule} participates in a reference cycle")]
    Cycle { rule: RuleId },
    #[error("rule @{referrer} references undefined rule @{target}")]
    UndefinedReference { referrer: RuleId, target: RuleId },
    #[error("rule @{rule} is unreachable from the start symbol")]
    Unreachable { rule: RuleId },
    #[error("rule @{rule} has an empty body")]
    EmptyRule { rule: RuleId },
}

impl SlpDiagnostic {
    pub fn severity(&self) -> SlpSeverity {
        match self {
            SlpDiagnostic::Unreachable { .. } => SlpSeverity::Warning,
            _ => SlpSeverity::Error,
        }
    }
}

/// An invariant violation that stops expansion or analysis.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid grammar: {0}")]
pub struct SlpError(pub SlpDiagnostic);

/// Checks all SLP invariants and reports every violation.
///
/// An empty *start* rule is legal (the grammar of the empty trace); empty
/// bodies elsewhere are errors.
pub fn validate_slp(slp: &Slp) -> Vec<SlpDiagnostic> {
    let mut out = Vec::new();
    let n = slp.rules.len();
    let mut reachable = vec![false; n];
    if (slp.start as usize) < n {
        reachable[slp.start as usize] = true;
    } else {
        out.push(SlpDiagnostic::UndefinedReference {
            referrer: slp.start,
            target: slp.start,
        });
    }
    // Reachability over the reference graph.
    let mut work: Vec<RuleId> = if (slp.start as usize) < n {
        vec![slp.start]
    } else {
        vec![]
    };
    while let Some(rule) = work.pop() {
        for sym in slp.rule(rule) {
            if let Symbol::NonTerminal(child) = sym {
                if (*child as usize) < n {
                    if !reachable[*child as usize] {
                        reachable[*child as usize] = true;
                        work.push(*child);
                    }
                } else {
                    out.push(SlpDiagnostic::UndefinedReference {
                        referrer: rule,
                        target: *child,
                    });
                }
            }
        }
    }
    for (id, body) in slp.rules.iter().enumerate() {
        let id = id as RuleId;
        if body.is_empty() && id != slp.start {
            out.push(SlpDiagnostic::EmptyRule { rule: id });
        }
        if !reachable[id as usize] {
            out.push(SlpDiagnostic::Unreachable { rule: id });
        }
    }
    // Cycle detection among defined rules (three-color DFS).
    let mut color = vec![0u8; n]; // 0 new, 1 active, 2 done
    for root in 0..n {
        if color[root] != 0 {
            continue;
        }
        let mut stack: Vec<(u32, usize)> = vec![(root as u32, 0)];
        color[root] = 1;
        while let Some(&(rule, pos)) = stack.last() {
            let body = &slp.rules[rule as usize];
            let mut next_child = None;
            let mut p = pos;
            while p < body.len() {
                let sym = &body[p];
                p += 1;
                if let Symbol::NonTerminal(child) = *sym {
                    if (child as usize) < n {
                        match color[child as usize] {
                            0 => {
                                next_child = Some(child);
                                break;
                            }
                            1 if !out.contains(&SlpDiagnostic::Cycle { rule: child }) => {
                                out.push(SlpDiagnostic::Cycle { rule: child });
                            }
                            _ => {}
                        }
                    }
                }
            }
            stack.last_mut().unwrap().1 = p;
            match next_child {
                Some(child) => {
                    color[child as usize] = 1;
                    stack.push((child, 0));
                }
                None => {
                    color[rule as usize] = 2;
                    stack.pop();
                }
            }
        }
    }
    out
}

/// Derives the unique label string of the grammar and converts it to a
/// trace with positional indices.
pub fn expand(slp: &Slp) -> Result<Trace, SlpError> {
    slp.check()?;
    let lengths = slp.chunk_lengths()?;
    let total = lengths[slp.start as usize];
    let mut labels: Vec<EventLabel> = Vec::with_capacity(total as usize);
    // Explicit stack of symbols still to emit, in reverse order.
    let mut stack: Vec<&Symbol> = Vec::new();
    stack.extend(slp.rule(slp.start).iter().rev());
    while let Some(sym) = stack.pop() {
        match sym {
            Symbol::Terminal(label) => labels.push(label.clone()),
            Symbol::NonTerminal(id) => stack.extend(slp.rule(*id).iter().rev()),
        }
    }
    Ok(Trace::from_labels(labels))
}

/// Size and compression figures of a grammar.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GrammarStats {
    /// Distinct terminal labels.
    pub n_terminals: usize,
    pub n_nonterminals: usize,
    /// Grammar size: distinct terminals plus nonterminals.
    pub size: usize,
    /// Length of the derived trace.
    pub expanded_len: u64,
    /// `expanded_len / size`.
    pub compression_ratio: f64,
}

/// Computes [`GrammarStats`]. The size measure is distinct terminals plus
/// nonterminals; the ratio divides the expanded event count by it.
pub fn grammar_stats(slp: &Slp) -> Result<GrammarStats, SlpError> {
    let lengths = slp.chunk_lengths()?;
    let mut terminals = std::collections::HashSet::new();
    for body in slp.rule_bodies() {
        for sym in body {
            if let Symbol::Terminal(label) = sym {
                terminals.insert(label);
            }
        }
    }
    let n_terminals = terminals.len();
    let n_nonterminals = slp.n_rules();
    let size = n_terminals + n_nonterminals;
    let expanded_len = lengths[slp.start as usize];
    Ok(GrammarStats {
        n_terminals,
        n_nonterminals,
        size,
        expanded_len,
        compression_ratio: if size == 0 {
            0.0
        } else {
            expanded_len as f64 / size as f64
        },
    })
}

/// Splits long terminal runs inside mixed rules into fresh rules.
///
/// Every maximal run of at least `run_threshold` consecutive terminals in a
/// body that also contains nonterminals moves to a fresh nonterminal.
/// All-terminal bodies and shorter runs are untouched; the expansion never
/// changes.
///
/// Panics if `run_threshold < 2`.
pub fn normalize(slp: &Slp, run_threshold: usize) -> Slp {
    assert!(run_threshold >= 2, "run_threshold must be at least 2");
    let mut rules = slp.rules.clone();
    let mut fresh: Vec<Vec<Symbol>> = Vec::new();
    let next_id = |fresh: &Vec<Vec<Symbol>>, base: usize| (base + fresh.len()) as RuleId;
    let base = rules.len();
    for body in rules.iter_mut() {
        if body.iter().all(|s| matches!(s, Symbol::Terminal(_))) {
            continue;
        }
        let mut rebuilt: Vec<Symbol> = Vec::with_capacity(body.len());
        let mut run: Vec<Symbol> = Vec::new();
        let mut flush = |rebuilt: &mut Vec<Symbol>, run: &mut Vec<Symbol>| {
            if run.len() >= run_threshold {
                let id = next_id(&fresh, base);
                fresh.push(std::mem::take(run));
                rebuilt.push(Symbol::NonTerminal(id));
            } else {
                rebuilt.append(run);
            }
        };
        for sym in body.drain(..) {
            match sym {
                Symbol::Terminal(_) => run.push(sym),
                Symbol::NonTerminal(_) => {
                    flush(&mut rebuilt, &mut run);
                    rebuilt.push(sym);
                }
            }
        }
        flush(&mut rebuilt, &mut run);
        *body = rebuilt;
    }
    rules.extend(fresh);
    Slp::new(slp.start, rules)
}

/// A grammar-file parse failure at a 1-based physical line.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct SlpParseError {
    pub line: usize,
    pub message: String,
}

fn slp_err(line: usize, message: impl Into<String>) -> SlpParseError {
    SlpParseError {
        line,
        message: message.into(),
    }
}

/// Parses the grammar file format. Rule ids are renumbered densely in
/// file order; `serialize_slp` restores the same text for its own output.
pub fn parse_slp(text: &str) -> Result<Slp, SlpParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.is_empty() && !l.trim_start().starts_with('#'));
    let (lineno, header) = lines.next().ok_or_else(|| slp_err(0, "empty grammar file"))?;
    if header != "slp v1" {
        return Err(slp_err(lineno, "expected header `slp v1`"));
    }
    let (lineno, start_line) = lines
        .next()
        .ok_or_else(|| slp_err(lineno, "missing `start @<id>` line"))?;
    let start_tok = start_line
        .strip_prefix("start ")
        .ok_or_else(|| slp_err(lineno, "expected `start @<id>`"))?;
    let parse_ref = |tok: &str, lineno: usize| -> Result<u64, SlpParseError> {
        tok.strip_prefix('@')
            .and_then(|d| d.parse::<u64>().ok())
            .ok_or_else(|| slp_err(lineno, format!("expected `@<digits>`, got {tok:?}")))
    };
    let start_file_id = parse_ref(start_tok.trim(), lineno)?;
    // File ids may be sparse; collect bodies first, then renumber.
    // Body entries are (file id, None) for references, (_, Some) for
    // terminals.
    type RawBody = Vec<(u64, Option<EventLabel>)>;
    let mut bodies: Vec<(u64, RawBody)> = Vec::new();
    let mut defined: HashMap<u64, usize> = HashMap::new();
    for (lineno, line) in lines {
        let (head, rhs) = line
            .split_once(":=")
            .ok_or_else(|| slp_err(lineno, "expected `@<id> := <sym> ...`"))?;
        let file_id = parse_ref(head.trim(), lineno)?;
        if defined.contains_key(&file_id) {
            return Err(slp_err(lineno, format!("duplicate rule definition @{file_id}")));
        }
        let mut body = Vec::new();
        for tok in rhs.split_whitespace() {
            if let Some(digits) = tok.strip_prefix('@') {
                let id = digits
                    .parse::<u64>()
                    .map_err(|_| slp_err(lineno, format!("bad rule reference {tok:?}")))?;
                body.push((id, None));
            } else {
                let label = parse_label(tok)
                    .map_err(|e| slp_err(lineno, format!("bad terminal {tok:?}: {e}")))?;
                body.push((0, Some(label)));
            }
        }
        defined.insert(file_id, bodies.len());
        bodies.push((file_id, body));
    }
    let lookup = |id: u64| -> Option<RuleId> { defined.get(&id).map(|&i| i as RuleId) };
    let start = lookup(start_file_id)
        .ok_or_else(|| slp_err(2, format!("start rule @{start_file_id} is not defined")))?;
    let mut rules = Vec::with_capacity(bodies.len());
    for (_, body) in bodies {
        let mut out = Vec::with_capacity(body.len());
        for (id, label) in body {
            out.push(match label {
                Some(l) => Symbol::Terminal(l),
                // Undefined references are preserved as dangling ids so
                // validate_slp can report them uniformly.
                None => Symbol::NonTerminal(lookup(id).unwrap_or(u32::MAX)),
            });
        }
        rules.push(out);
    }
    Ok(Slp::new(start, rules))
}

/// Writes the grammar file format; `parse_slp` of the result is the
/// identity.
pub fn serialize_slp(slp: &Slp) -> String {
    let mut out = String::from("slp v1\n");
    out.push_str(&format!("start @{}\n", slp.start));
    for (id, body) in slp.rules.iter().enumerate() {
        out.push_str(&format!("@{id} :="));
        for sym in body {
            out.push(' ');
            match sym {
                Symbol::Terminal(label) => out.push_str(&label.to_string()),
                Symbol::NonTerminal(r) => out.push_str(&format!("@{r}")),
            }
        }
        out.push('\n');
    }
    out
}

impl fmt::Display for Slp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_slp(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn label(text: &str) -> EventLabel {
        parse_label(text).unwrap()
    }

    #[test]
    fn expand_repeated_rule() {
        let slp = Slp::new(
            0,
            vec![
                vec![Symbol::NonTerminal(1), Symbol::NonTerminal(1)],
                vec![Symbol::Terminal(label("1|r(x)")), Symbol::Terminal(label("1|w(x)"))],
            ],
        );
        let trace = expand(&slp).unwrap();
        assert_eq!(trace.len(), 4);
        assert_eq!(trace.to_text(), "1|r(x)\n1|w(x)\n1|r(x)\n1|w(x)\n");
    }

    #[test]
    fn expand_sigma1_grammar() {
        let slp = fixtures::sigma1_grammar();
        assert_eq!(expand(&slp).unwrap(), fixtures::sigma1());
    }

    #[test]
    fn self_reference_is_a_cycle() {
        let slp = Slp::new(0, vec![vec![Symbol::NonTerminal(0)]]);
        let diags = validate_slp(&slp);
        assert!(diags.iter().any(|d| matches!(d, SlpDiagnostic::Cycle { .. })));
        assert!(expand(&slp).is_err());
    }

    #[test]
    fn unreachable_rule_is_a_warning() {
        let slp = Slp::new(
            0,
            vec![
                vec![Symbol::Terminal(label("1|w(x)"))],
                vec![Symbol::Terminal(label("1|r(x)"))],
            ],
        );
        let diags = validate_slp(&slp);
        assert_eq!(diags, vec![SlpDiagnostic::Unreachable { rule: 1 }]);
        assert_eq!(diags[0].severity(), SlpSeverity::Warning);
        assert!(slp.check().is_ok());
    }

    #[test]
    fn sigma1_grammar_is_clean() {
        assert!(validate_slp(&fixtures::sigma1_grammar()).is_empty());
    }

    #[test]
    fn empty_non_start_rule_is_an_error() {
        let slp = Slp::new(
            0,
            vec![vec![Symbol::NonTerminal(1), Symbol::NonTerminal(1)], vec![]],
        );
        let diags = validate_slp(&slp);
        assert!(diags.contains(&SlpDiagnostic::EmptyRule { rule: 1 }));
        assert!(slp.check().is_err());
    }

    #[test]
    fn empty_start_rule_is_legal() {
        let slp = Slp::new(0, vec![vec![]]);
        assert!(validate_slp(&slp).is_empty());
        assert!(expand(&slp).unwrap().is_empty());
        let text = serialize_slp(&slp);
        assert_eq!(parse_slp(&text).unwrap(), slp);
    }

    #[test]
    fn normalize_splits_long_runs() {
        // A -> b1 b2 C d1 d2 with threshold 2 becomes A -> B C D.
        let slp = Slp::new(
            0,
            vec![
                vec![
                    Symbol::Terminal(label("1|r(b1)")),
                    Symbol::Terminal(label("1|r(b2)")),
                    Symbol::NonTerminal(1),
                    Symbol::Terminal(label("1|r(d1)")),
                    Symbol::Terminal(label("1|r(d2)")),
                ],
                vec![Symbol::Terminal(label("2|w(c)"))],
            ],
        );
        let norm = normalize(&slp, 2);
        assert_eq!(
            norm.rule(0),
            &[
                Symbol::NonTerminal(2),
                Symbol::NonTerminal(1),
                Symbol::NonTerminal(3)
            ]
        );
        assert_eq!(norm.rule(2).len(), 2);
        assert_eq!(norm.rule(3).len(), 2);
        assert_eq!(expand(&norm).unwrap(), expand(&slp).unwrap());
    }

    #[test]
    fn normalize_leaves_all_terminal_rules_alone() {
        let slp = Slp::new(
            0,
            vec![vec![
                Symbol::Terminal(label("1|r(x)")),
                Symbol::Terminal(label("1|w(x)")),
                Symbol::Terminal(label("1|r(y)")),
            ]],
        );
        assert_eq!(normalize(&slp, 2), slp);
    }

    #[test]
    fn normalize_ignores_short_runs() {
        let slp = Slp::new(
            0,
            vec![
                vec![Symbol::Terminal(label("1|r(x)")), Symbol::NonTerminal(1)],
                vec![Symbol::Terminal(label("1|w(x)"))],
            ],
        );
        assert_eq!(normalize(&slp, 2), slp);
    }

    #[test]
    fn slp_file_roundtrip() {
        let slp = fixtures::sigma1_grammar();
        let text = serialize_slp(&slp);
        assert_eq!(parse_slp(&text).unwrap(), slp);
        assert_eq!(serialize_slp(&parse_slp(&text).unwrap()), text);
    }

    #[test]
    fn parse_slp_missing_start_rule() {
        let err = parse_slp("slp v1\nstart @0\n@1 := 1|w(x)\n").unwrap_err();
        assert!(err.message.contains("start rule"));
    }

    #[test]
    fn parse_slp_empty_file() {
        assert!(parse_slp("").is_err());
        assert!(parse_slp("# only a comment\n").is_err());
    }

    #[test]
    fn parse_slp_duplicate_rule() {
        let err = parse_slp("slp v1\nstart @0\n@0 := 1|w(x)\n@0 := 1|r(x)\n").unwrap_err();
        assert!(err.message.contains("duplicate"));
        assert_eq!(err.line, 4);
    }

    #[test]
    fn grammar_stats_trivial() {
        let slp = Slp::new(
            0,
            vec![vec![
                Symbol::Terminal(label("1|r(x)")),
                Symbol::Terminal(label("1|w(x)")),
                Symbol::Terminal(label("1|r(y)")),
            ]],
        );
        let stats = grammar_stats(&slp).unwrap();
        assert_eq!(stats.size, 4);
        assert_eq!(stats.expanded_len, 3);
        assert!((stats.compression_ratio - 0.75).abs() < 1e-12);
    }

    #[test]
    fn topological_order_children_first() {
        let slp = fixtures::sigma1_grammar();
        let order = slp.topological_order().unwrap();
        let pos: HashMap<RuleId, usize> =
            order.iter().enumerate().map(|(i, &r)| (r, i)).collect();
        for (id, body) in slp.rule_bodies().enumerate() {
            for sym in body {
                if let Symbol::NonTerminal(child) = sym {
                    assert!(pos[child] < pos[&(id as RuleId)]);
                }
            }
        }
    }
}
