//! Small example traces and grammars used across the test suites and docs.
//!
//! `sigma1` is a two-thread trace with a write/write race on `y` and lockset
//! violations on `x` and `y`; `sigma2` is race- and violation-free. Both
//! come with hand-built grammars whose chunk structure the compositional
//! analyses are exercised against.

use crate::slp::{Slp, Symbol};
use crate::trace::{parse_trace, Trace};

/// 16-event racy trace over threads {1,2}, lock `l`, variables `x`,`y`.
pub const SIGMA1_TEXT: &str = "\
1|w(x)
1|fork(2)
2|r(x)
2|acq(l)
2|w(y)
2|rel(l)
1|r(x)
1|acq(l)
1|rel(l)
1|w(y)
2|r(x)
2|acq(l)
2|w(y)
2|rel(l)
1|join(2)
1|w(y)
";

/// 11-event trace over threads {1,2}, lock `l`, variables `x`,`y`,`z`:
/// `x` is read-only, `y` is lock-protected, `z` is thread-local. No race,
/// no lockset violation.
pub const SIGMA2_TEXT: &str = "\
1|r(x)
1|acq(l)
1|w(y)
1|rel(l)
2|acq(l)
2|r(x)
2|w(y)
2|rel(l)
2|r(x)
1|w(z)
1|r(z)
";

pub fn sigma1() -> Trace {
    parse_trace(SIGMA1_TEXT).expect("sigma1 fixture parses")
}

pub fn sigma2() -> Trace {
    parse_trace(SIGMA2_TEXT).expect("sigma2 fixture parses")
}

fn terminals(trace: &Trace, indices: &[u32]) -> Vec<Symbol> {
    indices
        .iter()
        .map(|&i| Symbol::Terminal(trace.event(i).unwrap().label.clone()))
        .collect()
}

/// Rule ids of the named chunks in [`sigma1_grammar`].
pub mod sigma1_rules {
    use crate::slp::RuleId;
    pub const S: RuleId = 0;
    pub const A: RuleId = 1;
    pub const B: RuleId = 2;
    pub const C: RuleId = 3;
    pub const D: RuleId = 4;
    pub const E: RuleId = 5;
    pub const F: RuleId = 6;
    pub const G: RuleId = 7;
}

/// The reference grammar of `sigma1`:
///
/// ```text
/// S -> A B    A -> C D    C -> E F    B -> F G
/// E -> e1 e2              F -> e3 e4 e5 e6
/// D -> e7 e8 e9 e10       G -> e15 e16
/// ```
///
/// `F` derives both `e3..e6` and `e11..e14` (identical label runs), which is
/// the sharing the compressed analyses exploit.
pub fn sigma1_grammar() -> Slp {
    use sigma1_rules::*;
    let t = sigma1();
    let mut rules = vec![Vec::new(); 8];
    rules[S as usize] = vec![Symbol::NonTerminal(A), Symbol::NonTerminal(B)];
    rules[A as usize] = vec![Symbol::NonTerminal(C), Symbol::NonTerminal(D)];
    rules[B as usize] = vec![Symbol::NonTerminal(F), Symbol::NonTerminal(G)];
    rules[C as usize] = vec![Symbol::NonTerminal(E), Symbol::NonTerminal(F)];
    rules[D as usize] = terminals(&t, &[7, 8, 9, 10]);
    rules[E as usize] = terminals(&t, &[1, 2]);
    rules[F as usize] = terminals(&t, &[3, 4, 5, 6]);
    rules[G as usize] = terminals(&t, &[15, 16]);
    Slp::new(S, rules)
}

/// Rule ids of the named chunks in [`sigma2_grammar`].
pub mod sigma2_rules {
    use crate::slp::RuleId;
    pub const S: RuleId = 0;
    pub const U: RuleId = 1;
    pub const V: RuleId = 2;
    pub const W: RuleId = 3;
    pub const X: RuleId = 4;
    pub const Y: RuleId = 5;
    pub const Z: RuleId = 6;
}

/// The reference grammar of `sigma2`:
///
/// ```text
/// S -> U V    U -> W X    V -> Y Z
/// W -> e1 e2    X -> e3 e4 e5    Y -> e6 e7    Z -> e8 e9 e10 e11
/// ```
///
/// Chunk boundaries deliberately cut through critical sections: `W` holds an
/// unmatched acquire, `X` the matching release.
pub fn sigma2_grammar() -> Slp {
    use sigma2_rules::*;
    let t = sigma2();
    let mut rules = vec![Vec::new(); 7];
    rules[S as usize] = vec![Symbol::NonTerminal(U), Symbol::NonTerminal(V)];
    rules[U as usize] = vec![Symbol::NonTerminal(W), Symbol::NonTerminal(X)];
    rules[V as usize] = vec![Symbol::NonTerminal(Y), Symbol::NonTerminal(Z)];
    rules[W as usize] = terminals(&t, &[1, 2]);
    rules[X as usize] = terminals(&t, &[3, 4, 5]);
    rules[Y as usize] = terminals(&t, &[6, 7]);
    rules[Z as usize] = terminals(&t, &[8, 9, 10, 11]);
    Slp::new(S, rules)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slp::{expand, validate_slp};

    #[test]
    fn grammars_expand_to_their_traces() {
        assert_eq!(expand(&sigma1_grammar()).unwrap(), sigma1());
        assert_eq!(expand(&sigma2_grammar()).unwrap(), sigma2());
    }

    #[test]
    fn grammars_are_well_formed() {
        assert!(validate_slp(&sigma1_grammar()).is_empty());
        assert!(validate_slp(&sigma2_grammar()).is_empty());
    }
}
