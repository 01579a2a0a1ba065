//! Budgeted maximization of the reach objective.
//!
//! `simple_greedy` scores every remaining candidate each round and keeps
//! the argmax; candidates of one round are evaluated concurrently and
//! merged with an order-independent rule (higher value wins, ties to the
//! lowest state index), so results do not depend on scheduling.
//!
//! `lazy_greedy` is the CELF-style variant: stale marginal gains are kept
//! as upper bounds in a max-priority queue — valid because the objective
//! has diminishing returns — and a candidate is only re-scored when it
//! surfaces at the top. A candidate accepted with a gain computed in the
//! current round is guaranteed to be the true argmax. Both variants share
//! the same tie-break and the same update-based evaluation path, so they
//! select identical sets.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::chain::{ChainSpec, StateSet};
use crate::lup::UpdatePolicy;
use crate::objective::{CandidateEval, SelectionHandle};
use crate::{Error, Result};

/// Rounds stop once the best marginal gain drops to this level; the
/// objective is saturated and further picks are noise.
pub const GAIN_SATURATION: f64 = 1e-12;

/// Per-round audit counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RoundStats {
    /// Objective evaluations performed during the round.
    pub evals: usize,
    /// Rank-1 updates appended while scoring the round.
    pub updates: usize,
    /// Transparent refactorizations triggered while scoring the round.
    pub refactors: usize,
}

/// Audit record of one optimizer run.
#[derive(Debug, Clone, Default)]
pub struct GreedyTrace {
    /// Selected states in pick order.
    pub chosen: Vec<usize>,
    /// Objective value after each pick; non-decreasing.
    pub f_values: Vec<f64>,
    /// Marginal gain of each pick.
    pub gains: Vec<f64>,
    /// Total objective evaluations, including the initial solve of the
    /// empty selection.
    pub n_evals: usize,
    /// Total rank-1 updates performed.
    pub n_updates: usize,
    /// Total transparent refactorizations.
    pub n_refactors: usize,
    /// Counters per accepted round (evaluations spent in an aborted final
    /// round still show up in the totals).
    pub rounds: Vec<RoundStats>,
    /// Wall time per accepted round.
    pub round_times: Vec<Duration>,
    /// Budget left unused after an early exit.
    pub budget_unused: usize,
}

fn check_budget(spec: &ChainSpec, k: usize) -> Result<()> {
    let n = spec.n_transient();
    if k == 0 || k > n {
        return Err(Error::InvalidBudget { k, n });
    }
    Ok(())
}

fn better(a: (CandidateEval, usize), b: (CandidateEval, usize)) -> (CandidateEval, usize) {
    let refactors = a.1 + b.1;
    let pick =
        if b.0.result.f > a.0.result.f || (b.0.result.f == a.0.result.f && b.0.state < a.0.state) {
            b.0
        } else {
            a.0
        };
    (pick, refactors)
}

/// Plain greedy: `k` rounds of exhaustive candidate scoring.
pub fn simple_greedy(spec: &ChainSpec, k: usize) -> Result<(StateSet, GreedyTrace)> {
    simple_greedy_with(spec, k, UpdatePolicy::default())
}

pub fn simple_greedy_with(
    spec: &ChainSpec,
    k: usize,
    policy: UpdatePolicy,
) -> Result<(StateSet, GreedyTrace)> {
    check_budget(spec, k)?;
    let n = spec.n_transient();
    let mut handle = SelectionHandle::with_policy(spec, StateSet::new(), policy)?;
    let mut trace = GreedyTrace {
        n_evals: 1,
        ..GreedyTrace::default()
    };

    for round in 1..=k {
        let started = Instant::now();
        let candidates: Vec<usize> = (1..=n)
            .filter(|&z| !handle.selection().contains(z))
            .collect();
        if candidates.is_empty() {
            trace.budget_unused = k - round + 1;
            break;
        }
        let evals = candidates.len();
        let scored = candidates
            .into_par_iter()
            .map(|z| -> Result<(CandidateEval, usize)> {
                let cand = handle.evaluate_candidate(z)?;
                let refactor = usize::from(cand.refactorized());
                Ok((cand, refactor))
            })
            .try_reduce_with(|a, b| Ok(better(a, b)))
            .expect("candidate list is nonempty");
        let (best, refactors) = scored?;

        trace.n_evals += evals;
        trace.n_updates += evals - refactors;
        trace.n_refactors += refactors;

        let gain = best.gain_over(handle.result());
        if gain <= GAIN_SATURATION {
            trace.budget_unused = k - round + 1;
            break;
        }
        trace.chosen.push(best.state);
        trace.f_values.push(best.result.f);
        trace.gains.push(gain);
        trace.rounds.push(RoundStats {
            evals,
            updates: evals - refactors,
            refactors,
        });
        trace.round_times.push(started.elapsed());
        handle.commit(best);
    }

    Ok((handle.selection().clone(), trace))
}

#[derive(Debug)]
struct QueueEntry {
    bound: f64,
    state: usize,
}

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for QueueEntry {}
impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.state.cmp(&self.state))
    }
}

/// Max-priority queue of candidates keyed by stale upper bounds on their
/// marginal gains, with per-round freshness flags. Outdated heap entries
/// are dropped lazily when popped.
#[derive(Debug)]
pub struct LazyQueue {
    heap: BinaryHeap<QueueEntry>,
    bound: Vec<f64>,
    fresh: Vec<bool>,
}

impl LazyQueue {
    /// All states start with an infinite upper bound.
    pub fn new(n: usize) -> Self {
        let mut heap = BinaryHeap::with_capacity(n);
        for state in 1..=n {
            heap.push(QueueEntry {
                bound: f64::INFINITY,
                state,
            });
        }
        Self {
            heap,
            bound: vec![f64::INFINITY; n + 1],
            fresh: vec![false; n + 1],
        }
    }

    /// Invalidates every freshness flag at the start of a round.
    pub fn begin_round(&mut self) {
        self.fresh.iter_mut().for_each(|f| *f = false);
    }

    /// Pops the candidate with the largest bound (ties to the lowest
    /// state index), skipping entries that are outdated or already
    /// selected. Returns the state and whether its bound was computed in
    /// the current round.
    pub fn pop(&mut self, selected: &StateSet) -> Option<(usize, bool)> {
        while let Some(entry) = self.heap.pop() {
            if selected.contains(entry.state) || entry.bound != self.bound[entry.state] {
                continue;
            }
            return Some((entry.state, self.fresh[entry.state]));
        }
        None
    }

    /// Records a freshly computed gain as the state's new bound and
    /// requeues it.
    pub fn refresh(&mut self, state: usize, gain: f64) {
        self.bound[state] = gain;
        self.fresh[state] = true;
        self.heap.push(QueueEntry { bound: gain, state });
    }

    /// Requeues a state whose bound is still valid (used when a fresh
    /// candidate is popped but not accepted).
    pub fn requeue(&mut self, state: usize) {
        self.heap.push(QueueEntry {
            bound: self.bound[state],
            state,
        });
    }
}

/// Lazy greedy: one initial factorization, rank-1 updates for every
/// candidate score, and stale-bound pruning of the candidate scans.
/// Selects the same states as [`simple_greedy`] with fewer evaluations.
pub fn lazy_greedy(spec: &ChainSpec, k: usize) -> Result<(StateSet, GreedyTrace)> {
    lazy_greedy_with(spec, k, UpdatePolicy::default())
}

pub fn lazy_greedy_with(
    spec: &ChainSpec,
    k: usize,
    policy: UpdatePolicy,
) -> Result<(StateSet, GreedyTrace)> {
    check_budget(spec, k)?;
    let n = spec.n_transient();
    let mut handle = SelectionHandle::with_policy(spec, StateSet::new(), policy)?;
    let mut trace = GreedyTrace {
        n_evals: 1,
        ..GreedyTrace::default()
    };
    let mut queue = LazyQueue::new(n);
    // fresh evaluations of the current round, reusable on acceptance
    let mut cached: Vec<Option<CandidateEval>> = (0..=n).map(|_| None).collect();

    'rounds: for round in 1..=k {
        let started = Instant::now();
        queue.begin_round();
        cached.iter_mut().for_each(|c| *c = None);
        let mut stats = RoundStats::default();

        loop {
            let Some((state, is_fresh)) = queue.pop(handle.selection()) else {
                trace.budget_unused = k - round + 1;
                break 'rounds;
            };
            if is_fresh {
                // bound computed against the current selection: true argmax
                let cand = cached[state].take().expect("fresh candidate is cached");
                let gain = cand.gain_over(handle.result());
                trace.n_evals += stats.evals;
                trace.n_updates += stats.updates;
                trace.n_refactors += stats.refactors;
                if gain <= GAIN_SATURATION {
                    queue.requeue(state);
                    trace.budget_unused = k - round + 1;
                    break 'rounds;
                }
                trace.chosen.push(state);
                trace.f_values.push(cand.result.f);
                trace.gains.push(gain);
                trace.rounds.push(stats);
                trace.round_times.push(started.elapsed());
                handle.commit(cand);
                break;
            }
            let cand = handle.evaluate_candidate(state)?;
            stats.evals += 1;
            if cand.refactorized() {
                stats.refactors += 1;
            } else {
                stats.updates += 1;
            }
            queue.refresh(state, cand.gain_over(handle.result()));
            cached[state] = Some(cand);
        }
    }

    Ok((handle.selection().clone(), trace))
}
