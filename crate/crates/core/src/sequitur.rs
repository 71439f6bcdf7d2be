//! Sequitur: online grammar inference over event labels.
//!
//! The input is consumed left to right, appending each label to the start
//! rule and restoring two invariants after every step:
//!
//! - *digram uniqueness*: no pair of adjacent symbols occurs twice without
//!   overlap anywhere in the grammar. On a repeat, the digram becomes (or
//!   reuses) a rule and both occurrences are substituted.
//! - *rule utility*: every rule other than the start rule is referenced at
//!   least twice. When a substitution drops a rule's use count to one, the
//!   surviving use is expanded in place and the rule deleted.
//!
//! Rule bodies are kept as doubly-linked symbol lists in an arena, each with
//! a guard node, so substitutions splice in O(1). The digram index maps a
//! symbol pair to the arena node of its (unique) left symbol.

use std::collections::HashMap;

use crate::slp::{RuleId, Slp, Symbol};
use crate::trace::{EventLabel, Trace};

/// Symbol key used for digram hashing: terminal label id or rule id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Sym {
    Terminal(u32),
    Rule(u32),
    /// Guard of rule `r`; never part of a digram.
    Guard(u32),
}

const NIL: u32 = u32::MAX;

struct Node {
    sym: Sym,
    prev: u32,
    next: u32,
}

struct RuleState {
    guard: u32,
    /// References from other rule bodies; the start rule stays at 0.
    refs: u32,
    alive: bool,
}

struct Builder {
    nodes: Vec<Node>,
    free: Vec<u32>,
    rules: Vec<RuleState>,
    digrams: HashMap<(Sym, Sym), u32>,
}

impl Builder {
    fn new() -> Self {
        let mut b = Builder {
            nodes: Vec::new(),
            free: Vec::new(),
            rules: Vec::new(),
            digrams: HashMap::new(),
        };
        b.new_rule();
        b
    }

    fn new_rule(&mut self) -> u32 {
        let id = self.rules.len() as u32;
        let guard = self.alloc(Sym::Guard(id));
        self.nodes[guard as usize].prev = guard;
        self.nodes[guard as usize].next = guard;
        self.rules.push(RuleState {
            guard,
            refs: 0,
            alive: true,
        });
        id
    }

    fn alloc(&mut self, sym: Sym) -> u32 {
        if let Some(id) = self.free.pop() {
            self.nodes[id as usize] = Node {
                sym,
                prev: NIL,
                next: NIL,
            };
            id
        } else {
            self.nodes.push(Node {
                sym,
                prev: NIL,
                next: NIL,
            });
            (self.nodes.len() - 1) as u32
        }
    }

    fn sym(&self, n: u32) -> Sym {
        self.nodes[n as usize].sym
    }

    fn next(&self, n: u32) -> u32 {
        self.nodes[n as usize].next
    }

    fn prev(&self, n: u32) -> u32 {
        self.nodes[n as usize].prev
    }

    fn is_guard(&self, n: u32) -> bool {
        matches!(self.sym(n), Sym::Guard(_))
    }

    /// Drops the digram index entry anchored at `n`, if it is the anchor.
    fn forget_digram(&mut self, n: u32) {
        let next = self.next(n);
        if next == NIL || self.is_guard(n) || self.is_guard(next) {
            return;
        }
        let key = (self.sym(n), self.sym(next));
        if self.digrams.get(&key) == Some(&n) {
            self.digrams.remove(&key);
        }
    }

    /// Makes `right` follow `left`, maintaining the digram index.
    ///
    /// Breaking `left`'s old adjacency forgets the entry anchored there.
    /// Inside a run of equal symbols only one pair carries the index entry
    /// (the others overlap it); when the break uncovers such a pair, the
    /// entry is re-anchored to it.
    fn join(&mut self, left: u32, right: u32) {
        if self.nodes[left as usize].next != NIL {
            self.forget_digram(left);
            let (rp, rn) = (self.prev(right), self.next(right));
            if rp != NIL
                && rn != NIL
                && !self.is_guard(right)
                && self.sym(right) == self.sym(rp)
                && self.sym(right) == self.sym(rn)
            {
                self.digrams.insert((self.sym(right), self.sym(rn)), right);
            }
            let (lp, ln) = (self.prev(left), self.next(left));
            if lp != NIL
                && ln != NIL
                && !self.is_guard(left)
                && self.sym(left) == self.sym(lp)
                && self.sym(left) == self.sym(ln)
            {
                self.digrams.insert((self.sym(lp), self.sym(left)), lp);
            }
        }
        self.nodes[left as usize].next = right;
        self.nodes[right as usize].prev = left;
    }

    /// Inserts freshly allocated `node` after `after` in its list.
    fn link_after(&mut self, after: u32, node: u32) {
        debug_assert_eq!(self.nodes[node as usize].next, NIL);
        self.join(node, self.next(after));
        self.join(after, node);
    }

    /// Unlinks `n`, forgetting the digrams it participates in. Does not
    /// touch rule reference counts.
    fn unlink(&mut self, n: u32) {
        self.forget_digram(n);
        self.join(self.prev(n), self.next(n));
        // Freed nodes read as guards so a stale reference can never look
        // like a live digram.
        self.nodes[n as usize].sym = Sym::Guard(NIL);
        self.free.push(n);
    }

    /// Appends a terminal to the start rule and restores the invariants.
    fn push_terminal(&mut self, label_id: u32) {
        let guard = self.rules[0].guard;
        let node = self.alloc(Sym::Terminal(label_id));
        let last = self.prev(guard);
        self.link_after(last, node);
        self.check_digram(last);
    }

    /// Re-establishes digram uniqueness for the digram starting at `n`.
    fn check_digram(&mut self, n: u32) {
        let next = self.next(n);
        if self.is_guard(n) || self.is_guard(next) {
            return;
        }
        let key = (self.sym(n), self.sym(next));
        match self.digrams.get(&key) {
            None => {
                self.digrams.insert(key, n);
            }
            Some(&m) if m == n => {}
            Some(&m) => {
                // Overlapping occurrences (aaa) are left alone.
                if self.next(m) == n || self.next(n) == m {
                    return;
                }
                self.handle_repeat(n, m);
            }
        }
    }

    /// True when `n` anchors a complete two-symbol rule body; returns that
    /// rule.
    fn complete_body(&self, n: u32) -> Option<u32> {
        if self.is_guard(self.prev(n)) && !self.is_guard(self.next(n))
            && self.is_guard(self.next(self.next(n)))
        {
            match self.sym(self.prev(n)) {
                Sym::Guard(r) if r != NIL => Some(r),
                _ => None,
            }
        } else {
            None
        }
    }

    /// `fresh` and `existing` anchor two non-overlapping occurrences of the
    /// same digram.
    fn handle_repeat(&mut self, fresh: u32, existing: u32) {
        let (a, b) = (self.sym(fresh), self.sym(self.next(fresh)));
        let rule = if let Some(r) = self.complete_body(existing) {
            // The existing occurrence is a complete rule body: reuse it.
            self.substitute(fresh, r);
            r
        } else if let Some(r) = self.complete_body(fresh) {
            self.substitute(existing, r);
            self.digrams.insert((a, b), fresh);
            r
        } else {
            let r = self.new_rule();
            let guard = self.rules[r as usize].guard;
            let first = self.alloc(a);
            let second = self.alloc(b);
            self.link_after(guard, first);
            self.link_after(first, second);
            if let Sym::Rule(child) = a {
                self.rules[child as usize].refs += 1;
            }
            if let Sym::Rule(child) = b {
                self.rules[child as usize].refs += 1;
            }
            let at = self.substitute(existing, r);
            // The cascade behind that substitution can rewrite the fresh
            // occurrence; only replace it if it still anchors this digram.
            if self.sym(fresh) == a && self.sym(self.next(fresh)) == b {
                self.substitute(fresh, r);
            } else if self.rules[r as usize].refs == 1 {
                // Single-use rule after all: fold it back in. The cascade
                // may also have moved the use away from `at`.
                let use_site = if matches!(self.sym(at), Sym::Rule(rr) if rr == r) {
                    at
                } else {
                    self.find_single_use(r)
                };
                self.expand_single_use(use_site, r);
                return;
            }
            // The rule body is now the canonical location of the digram;
            // going through check_digram also resolves any occurrence a
            // cascade registered in the meantime.
            let first = self.next(self.rules[r as usize].guard);
            self.check_digram(first);
            r
        };
        if !self.rules[rule as usize].alive {
            return;
        }
        // Utility: a symbol of the (re)used body may now hold the last
        // reference to some rule.
        let guard = self.rules[rule as usize].guard;
        let first = self.next(guard);
        if let Sym::Rule(child) = self.sym(first) {
            if self.rules[child as usize].refs == 1 {
                self.expand_single_use(first, child);
            }
        }
        let last = self.prev(guard);
        if last != guard {
            if let Sym::Rule(child) = self.sym(last) {
                if self.rules[child as usize].refs == 1 {
                    self.expand_single_use(last, child);
                }
            }
        }
    }

    /// Replaces the digram anchored at `n` with a reference to `rule`,
    /// then re-checks the digrams formed at the seam. Returns the
    /// replacement node.
    fn substitute(&mut self, n: u32, rule: u32) -> u32 {
        let second = self.next(n);
        for victim in [n, second] {
            if let Sym::Rule(child) = self.sym(victim) {
                self.rules[child as usize].refs -= 1;
            }
        }
        let before = self.prev(n);
        self.unlink(second);
        self.unlink(n);
        let node = self.alloc(Sym::Rule(rule));
        self.rules[rule as usize].refs += 1;
        self.link_after(before, node);
        self.check_digram(node);
        self.check_digram(before);
        node
    }

    /// Locates the unique live node referencing `rule`. Cold path; only
    /// reached when a substitution cascade relocated the final use.
    fn find_single_use(&self, rule: u32) -> u32 {
        for (i, n) in self.nodes.iter().enumerate() {
            if matches!(n.sym, Sym::Rule(r) if r == rule) {
                return i as u32;
            }
        }
        unreachable!("rule with refcount 1 has no use site")
    }

    /// Inlines the body of `rule` at `node`, its single remaining use, and
    /// deletes the rule.
    fn expand_single_use(&mut self, node: u32, rule: u32) {
        debug_assert_eq!(self.rules[rule as usize].refs, 1);
        let guard = self.rules[rule as usize].guard;
        let first = self.next(guard);
        let last = self.prev(guard);
        debug_assert!(!self.is_guard(first), "expanding an empty rule");
        // The body's internal digram entries stay valid: nodes keep their
        // identity, only the splice points change.
        let before = self.prev(node);
        let after = self.next(node);
        self.forget_digram(node);
        self.join(before, first);
        self.join(last, after);
        self.nodes[node as usize].sym = Sym::Guard(NIL);
        self.free.push(node);
        self.nodes[guard as usize].sym = Sym::Guard(NIL);
        self.free.push(guard);
        self.rules[rule as usize].alive = false;
        self.rules[rule as usize].refs = 0;
        self.check_digram(before);
        self.check_digram(last);
    }

    /// Converts the arena into an [`Slp`], renumbering live rules densely
    /// in creation order and resolving terminal ids through `labels`.
    fn into_slp(self, labels: &[EventLabel]) -> Slp {
        let mut id_map = vec![NIL; self.rules.len()];
        let mut next = 0u32;
        for (i, r) in self.rules.iter().enumerate() {
            if r.alive {
                id_map[i] = next;
                next += 1;
            }
        }
        let mut rules = Vec::with_capacity(next as usize);
        for (i, r) in self.rules.iter().enumerate() {
            if !r.alive {
                continue;
            }
            let mut body = Vec::new();
            let mut n = self.next(r.guard);
            while n != r.guard {
                body.push(match self.sym(n) {
                    Sym::Terminal(t) => Symbol::Terminal(labels[t as usize].clone()),
                    Sym::Rule(child) => Symbol::NonTerminal(id_map[child as usize]),
                    Sym::Guard(_) => unreachable!("guard inside a rule body"),
                });
                n = self.next(n);
            }
            debug_assert_eq!(id_map[i] as usize, rules.len());
            rules.push(body);
        }
        Slp::new(0, rules)
    }
}

/// Compresses a trace into a straight-line program.
///
/// The result expands to exactly the input. Digram uniqueness and rule
/// utility hold on the output (see [`check_invariants`]); an empty trace
/// yields a grammar whose start rule is empty.
pub fn sequitur_compress(trace: &Trace) -> Slp {
    let mut label_ids: HashMap<&EventLabel, u32> = HashMap::new();
    let mut labels: Vec<EventLabel> = Vec::new();
    let mut builder = Builder::new();
    for event in trace.events() {
        let id = *label_ids.entry(&event.label).or_insert_with(|| {
            labels.push(event.label.clone());
            (labels.len() - 1) as u32
        });
        builder.push_terminal(id);
    }
    builder.into_slp(&labels)
}

/// Scans a grammar for violations of the two Sequitur invariants.
///
/// Returns human-readable violation descriptions; empty means the grammar
/// satisfies digram uniqueness (up to overlapping occurrences) and rule
/// utility.
pub fn check_invariants(slp: &Slp) -> Vec<String> {
    let mut violations = Vec::new();
    // Digram uniqueness: each digram may occur once, plus overlapping
    // repeats immediately adjacent to it (runs like `a a a`).
    let mut seen: HashMap<(&Symbol, &Symbol), (usize, usize)> = HashMap::new();
    for (rule, body) in slp.rule_bodies().enumerate() {
        for pos in 0..body.len().saturating_sub(1) {
            let key = (&body[pos], &body[pos + 1]);
            match seen.get(&key) {
                None => {
                    seen.insert(key, (rule, pos));
                }
                Some(&(r0, p0)) => {
                    let overlaps = r0 == rule && pos == p0 + 1;
                    if overlaps {
                        // Chain of overlapping occurrences; advance the anchor.
                        seen.insert(key, (rule, pos));
                    } else {
                        violations.push(format!(
                            "digram repeated: rule @{r0} pos {p0} and rule @{rule} pos {pos}"
                        ));
                    }
                }
            }
        }
    }
    // Rule utility: every non-start rule referenced at least twice.
    let mut refs = vec![0usize; slp.n_rules()];
    for body in slp.rule_bodies() {
        for sym in body {
            if let Symbol::NonTerminal(r) = sym {
                if (*r as usize) < refs.len() {
                    refs[*r as usize] += 1;
                }
            }
        }
    }
    for (rule, &count) in refs.iter().enumerate() {
        if rule as RuleId != slp.start() && count < 2 {
            violations.push(format!("rule @{rule} referenced {count} time(s)"));
        }
    }
    violations
}
