//! Deterministic synthetic trace generation.
//!
//! Three patterns: `inc-loop` (two workers hammering an unprotected
//! counter; racy and extremely compressible), `lock-loop` (the same loop
//! with every iteration under one lock; race-free), and `random`
//! (seeded well-formed traces for differential testing).

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::trace::{EventLabel, LockId, Operation, ThreadId, Trace, VarId};

/// Workload shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenPattern {
    IncLoop,
    LockLoop,
    Random,
}

impl std::str::FromStr for GenPattern {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inc-loop" => Ok(GenPattern::IncLoop),
            "lock-loop" => Ok(GenPattern::LockLoop),
            "random" => Ok(GenPattern::Random),
            other => Err(format!("unknown pattern {other:?}")),
        }
    }
}

/// A fully-determined workload: equal specs generate equal traces.
#[derive(Debug, Clone)]
pub struct GenSpec {
    pub pattern: GenPattern,
    /// Loop iterations per worker, or target event count for `random`.
    pub iterations: u64,
    pub threads: u32,
    pub locks: u32,
    pub vars: u32,
    pub seed: u64,
}

pub fn gen_trace(spec: &GenSpec) -> Trace {
    match spec.pattern {
        GenPattern::IncLoop => counter_loop(spec.iterations, false),
        GenPattern::LockLoop => counter_loop(spec.iterations, true),
        GenPattern::Random => random_trace(&RandomConfig {
            events: spec.iterations as usize,
            threads: spec.threads.max(1),
            locks: spec.locks,
            vars: spec.vars.max(1),
            seed: spec.seed,
            lock_discipline: false,
        }),
    }
}

/// Main forks two workers; each runs `n` iterations of read-increment on
/// the shared counter, locked or not; main joins both.
fn counter_loop(n: u64, locked: bool) -> Trace {
    let main = ThreadId::new("1").unwrap();
    let workers = [ThreadId::new("2").unwrap(), ThreadId::new("3").unwrap()];
    let y = VarId::new("y").unwrap();
    let l = LockId::new("l").unwrap();
    let mut labels = Vec::with_capacity((n as usize) * 2 * if locked { 4 } else { 2 } + 4);
    for w in &workers {
        labels.push(EventLabel::new(main.clone(), Operation::Fork(w.clone())));
    }
    for w in &workers {
        for _ in 0..n {
            if locked {
                labels.push(EventLabel::new(w.clone(), Operation::Acquire(l.clone())));
            }
            labels.push(EventLabel::new(w.clone(), Operation::Read(y.clone())));
            labels.push(EventLabel::new(w.clone(), Operation::Write(y.clone())));
            if locked {
                labels.push(EventLabel::new(w.clone(), Operation::Release(l.clone())));
            }
        }
    }
    for w in &workers {
        labels.push(EventLabel::new(main.clone(), Operation::Join(w.clone())));
    }
    Trace::from_labels(labels)
}

/// Knobs for the random generator.
#[derive(Debug, Clone)]
pub struct RandomConfig {
    pub events: usize,
    pub threads: u32,
    pub locks: u32,
    pub vars: u32,
    pub seed: u64,
    /// Wrap every access in the variable's designated lock; the resulting
    /// trace is race- and violation-free.
    pub lock_discipline: bool,
}

/// Generates a well-formed random trace: forks precede child events, forks
/// and joins share the parent, locks are mutually exclusive and per-thread
/// well-nested with bounded reentrancy. Unreleased locks at trace end are
/// possible (and legal).
pub fn random_trace(cfg: &RandomConfig) -> Trace {
    const MAX_REENTRANCY: usize = 3;
    let mut rng = StdRng::seed_from_u64(cfg.seed);
    let n_threads = cfg.threads.max(1) as usize;
    let threads: Vec<ThreadId> = (1..=n_threads)
        .map(|i| ThreadId::new(&i.to_string()).unwrap())
        .collect();
    let locks: Vec<LockId> = (0..cfg.locks)
        .map(|i| LockId::new(&format!("l{i}")).unwrap())
        .collect();
    let vars: Vec<VarId> = (0..cfg.vars.max(1))
        .map(|i| VarId::new(&format!("v{i}")).unwrap())
        .collect();

    // How eagerly accesses take locks (drawn per trace so both racy and
    // clean traces appear).
    let discipline_bias: f64 = if cfg.lock_discipline {
        1.0
    } else {
        *[0.0, 0.3, 0.7, 1.0].get(rng.random_range(0..4)).unwrap()
    };

    let mut active = vec![false; n_threads];
    let mut forked = vec![false; n_threads];
    let mut joined = vec![false; n_threads];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n_threads];
    active[0] = true;
    forked[0] = true; // the root needs no fork
    let mut stacks: Vec<Vec<usize>> = vec![Vec::new(); n_threads];
    let mut owner: Vec<Option<usize>> = vec![None; locks.len()];
    let mut depth: Vec<usize> = vec![0; locks.len()];

    let mut labels: Vec<EventLabel> = Vec::with_capacity(cfg.events);
    let push = |labels: &mut Vec<EventLabel>, t: usize, op: Operation| {
        labels.push(EventLabel::new(threads[t].clone(), op));
    };

    #[derive(Clone, Copy, PartialEq)]
    enum Action {
        Access,
        Acquire,
        Release,
        Fork,
        Join,
    }
    const WEIGHTS: [(Action, u32); 5] = [
        (Action::Access, 55),
        (Action::Acquire, 15),
        (Action::Release, 15),
        (Action::Fork, 8),
        (Action::Join, 7),
    ];

    'outer: while labels.len() < cfg.events {
        // Visit active threads in random order; take the first that can
        // act. Generation ends early only when nothing is feasible at all.
        let mut order: Vec<usize> = (0..n_threads).filter(|&t| active[t]).collect();
        for i in (1..order.len()).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let mut acted = false;
        for &t in &order {
            let lock_open =
                |l: usize| owner[l].is_none() || (owner[l] == Some(t) && depth[l] < MAX_REENTRANCY);
            // In discipline mode an access needs its variable's lock.
            let accessible: Vec<usize> = if cfg.lock_discipline && !locks.is_empty() {
                (0..vars.len()).filter(|&v| lock_open(v % locks.len())).collect()
            } else {
                (0..vars.len()).collect()
            };
            let feasible = |a: Action| match a {
                Action::Access => !accessible.is_empty(),
                Action::Acquire => (0..locks.len()).any(lock_open),
                Action::Release => !stacks[t].is_empty(),
                Action::Fork => (0..n_threads).any(|u| !forked[u]),
                // Joining a lock-holding child would orphan its locks.
                Action::Join => children[t]
                    .iter()
                    .any(|&c| !joined[c] && stacks[c].is_empty()),
            };
            let total: u32 = WEIGHTS
                .iter()
                .filter(|(a, _)| feasible(*a))
                .map(|&(_, w)| w)
                .sum();
            if total == 0 {
                continue;
            }
            let mut roll = rng.random_range(0..total);
            let action = WEIGHTS
                .iter()
                .filter(|(a, _)| feasible(*a))
                .find(|&&(_, w)| {
                    if roll < w {
                        true
                    } else {
                        roll -= w;
                        false
                    }
                })
                .unwrap()
                .0;
            match action {
                Action::Access => {
                    let v = accessible[rng.random_range(0..accessible.len())];
                    let op = if rng.random_bool(0.5) {
                        Operation::Write(vars[v].clone())
                    } else {
                        Operation::Read(vars[v].clone())
                    };
                    let guard_lock = match (locks.is_empty(), rng.random_bool(discipline_bias)) {
                        (false, true) => Some(v % locks.len()).filter(|&l| lock_open(l)),
                        _ => None,
                    };
                    match guard_lock {
                        Some(l) => {
                            push(&mut labels, t, Operation::Acquire(locks[l].clone()));
                            push(&mut labels, t, op);
                            push(&mut labels, t, Operation::Release(locks[l].clone()));
                        }
                        None if cfg.lock_discipline && !locks.is_empty() => {
                            // Discipline demands the wrap; accessible
                            // guarantees the lock is available.
                            let l = v % locks.len();
                            push(&mut labels, t, Operation::Acquire(locks[l].clone()));
                            push(&mut labels, t, op);
                            push(&mut labels, t, Operation::Release(locks[l].clone()));
                        }
                        None => push(&mut labels, t, op),
                    }
                }
                Action::Acquire => {
                    let open: Vec<usize> = (0..locks.len()).filter(|&l| lock_open(l)).collect();
                    let l = open[rng.random_range(0..open.len())];
                    push(&mut labels, t, Operation::Acquire(locks[l].clone()));
                    owner[l] = Some(t);
                    depth[l] += 1;
                    stacks[t].push(l);
                }
                Action::Release => {
                    let l = *stacks[t].last().unwrap();
                    push(&mut labels, t, Operation::Release(locks[l].clone()));
                    stacks[t].pop();
                    depth[l] -= 1;
                    if depth[l] == 0 {
                        owner[l] = None;
                    }
                }
                Action::Fork => {
                    let child = (0..n_threads).find(|&u| !forked[u]).unwrap();
                    push(&mut labels, t, Operation::Fork(threads[child].clone()));
                    forked[child] = true;
                    active[child] = true;
                    children[t].push(child);
                }
                Action::Join => {
                    let &child = children[t]
                        .iter()
                        .find(|&&c| !joined[c] && stacks[c].is_empty())
                        .unwrap();
                    push(&mut labels, t, Operation::Join(threads[child].clone()));
                    joined[child] = true;
                    active[child] = false;
                }
            }
            acted = true;
            break;
        }
        if !acted {
            break 'outer;
        }
    }
    labels.truncate(cfg.events);
    Trace::from_labels(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{is_error_free, validate};

    #[test]
    fn inc_loop_event_count() {
        let spec = GenSpec {
            pattern: GenPattern::IncLoop,
            iterations: 3,
            threads: 3,
            locks: 0,
            vars: 1,
            seed: 0,
        };
        let t = gen_trace(&spec);
        assert_eq!(t.len(), 16);
        assert!(validate(&t).is_empty());
    }

    #[test]
    fn lock_loop_is_race_free_at_small_n() {
        let spec = GenSpec {
            pattern: GenPattern::LockLoop,
            iterations: 4,
            threads: 3,
            locks: 1,
            vars: 1,
            seed: 0,
        };
        let t = gen_trace(&spec);
        assert_eq!(t.len(), 8 * 4 + 4);
        let closure = crate::hb::HbClosure::build(&t, crate::DEFAULT_ORACLE_CAP).unwrap();
        assert!(!crate::hb::oracle::has_race(&t, &closure));
        assert!(crate::hb::djit_detect(&t).is_none());
    }

    #[test]
    fn inc_loop_races() {
        let spec = GenSpec {
            pattern: GenPattern::IncLoop,
            iterations: 2,
            threads: 3,
            locks: 0,
            vars: 1,
            seed: 0,
        };
        assert!(crate::hb::djit_detect(&gen_trace(&spec)).is_some());
    }

    #[test]
    fn random_is_deterministic() {
        let cfg = RandomConfig {
            events: 120,
            threads: 4,
            locks: 3,
            vars: 4,
            seed: 42,
            lock_discipline: false,
        };
        assert_eq!(random_trace(&cfg), random_trace(&cfg));
    }

    #[test]
    fn random_traces_have_no_validation_errors() {
        for seed in 0..50 {
            for discipline in [false, true] {
                let cfg = RandomConfig {
                    events: 80,
                    threads: 4,
                    locks: 3,
                    vars: 4,
                    seed,
                    lock_discipline: discipline,
                };
                let t = random_trace(&cfg);
                let diags = validate(&t);
                assert!(
                    is_error_free(&diags),
                    "seed {seed} discipline {discipline}: {diags:?}"
                );
            }
        }
    }

    #[test]
    fn disciplined_traces_are_race_free() {
        for seed in 0..30 {
            let cfg = RandomConfig {
                events: 90,
                threads: 4,
                locks: 3,
                vars: 4,
                seed,
                lock_discipline: true,
            };
            let t = random_trace(&cfg);
            let closure = crate::hb::HbClosure::build(&t, crate::DEFAULT_ORACLE_CAP).unwrap();
            assert!(!crate::hb::oracle::has_race(&t, &closure), "seed {seed}");
        }
    }
}
