//! The reach objective: the probability that a walk started from the
//! initial distribution is ever absorbed at the target, evaluated through
//! the linear system `(I - A(S)) c = b(S)` and the inner product
//! `f = <pi, c>`.
//!
//! [`SelectionHandle`] keeps the factorization of the current selection
//! alive so each candidate `S ∪ {z}` costs one row-replacement update and
//! one pair of triangular solves instead of a fresh factorization.

use crate::chain::{ChainSpec, StateSet};
use crate::lup::{LupFactors, RowReplacement, UpdatePolicy};
use crate::{Error, Result};

/// Clamping the solved reach vector into `[0, 1]` beyond this magnitude
/// deserves a warning; see [`ReachResult::max_clamp`].
pub const CLAMP_WARN: f64 = 1e-9;

/// Result of one objective evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachResult {
    /// Per-state reach probabilities, clamped into `[0, 1]`; state `i` at
    /// position `i - 1`.
    pub c: Vec<f64>,
    /// `<pi, c>`.
    pub f: f64,
    /// Solver residual `‖(I - A) c - b‖_∞` before clamping.
    pub residual: f64,
    /// Largest excursion outside `[0, 1]` removed by clamping; values
    /// above [`CLAMP_WARN`] indicate a poorly conditioned solve.
    pub max_clamp: f64,
}

fn finish(spec: &ChainSpec, factors: &LupFactors, b: &[f64]) -> Result<ReachResult> {
    let raw = factors.solve(b)?;
    let residual = factors.residual(&raw, b);
    let mut max_clamp: f64 = 0.0;
    let c: Vec<f64> = raw
        .into_iter()
        .map(|v| {
            let clamped = v.clamp(0.0, 1.0);
            max_clamp = max_clamp.max((v - clamped).abs());
            clamped
        })
        .collect();
    let f = spec
        .pi()
        .iter()
        .zip(&c)
        .map(|(&p, &ci)| p * ci)
        .sum::<f64>();
    Ok(ReachResult {
        c,
        f,
        residual,
        max_clamp,
    })
}

/// Evaluates `f(S)` with a fresh factorization.
pub fn eval_reach(spec: &ChainSpec, selection: &StateSet) -> Result<ReachResult> {
    let asm = spec.assemble(selection)?;
    let factors = LupFactors::factorize(&asm.system_matrix())?;
    finish(spec, &factors, &asm.b)
}

/// Probability of stepping into the target in exactly one move from the
/// initial distribution: the myopic lower bound on the full objective.
/// Out-of-range members of `selection` contribute nothing.
pub fn one_step_value(spec: &ChainSpec, selection: &StateSet) -> f64 {
    selection
        .iter()
        .filter(|&z| z >= 1 && z <= spec.n_transient())
        .map(|z| spec.pi()[z - 1] * spec.link_prob(z))
        .sum()
}

/// `f(S ∪ {z}) − f(S)`, computed through the handle's rank-1 update path.
pub fn marginal_gain(handle: &SelectionHandle<'_>, z: usize) -> Result<f64> {
    Ok(handle.evaluate_candidate(z)?.result.f - handle.result().f)
}

/// Evaluation of one candidate extension, carrying the updated factors so
/// an accepted candidate can be committed without re-solving.
#[derive(Debug, Clone)]
pub struct CandidateEval {
    pub state: usize,
    pub result: ReachResult,
    factors: LupFactors,
    b: Vec<f64>,
}

impl CandidateEval {
    pub fn gain_over(&self, base: &ReachResult) -> f64 {
        self.result.f - base.f
    }

    /// Whether evaluating this candidate triggered a transparent
    /// refactorization instead of appending a rank-1 update.
    pub fn refactorized(&self) -> bool {
        self.factors.update_count() == 0
    }
}

/// Factorization of the current selection's system, reused across
/// candidate evaluations. Candidates branch immutably, so a handle can be
/// shared across threads while a round of candidates is scored.
#[derive(Debug)]
pub struct SelectionHandle<'a> {
    spec: &'a ChainSpec,
    selection: StateSet,
    factors: LupFactors,
    b: Vec<f64>,
    result: ReachResult,
}

impl<'a> SelectionHandle<'a> {
    pub fn new(spec: &'a ChainSpec, selection: StateSet) -> Result<Self> {
        Self::with_policy(spec, selection, UpdatePolicy::default())
    }

    pub fn with_policy(
        spec: &'a ChainSpec,
        selection: StateSet,
        policy: UpdatePolicy,
    ) -> Result<Self> {
        let asm = spec.assemble(&selection)?;
        let factors = LupFactors::factorize_with(&asm.system_matrix(), policy)?;
        let result = finish(spec, &factors, &asm.b)?;
        Ok(Self {
            spec,
            selection,
            factors,
            b: asm.b,
            result,
        })
    }

    pub fn spec(&self) -> &ChainSpec {
        self.spec
    }

    pub fn selection(&self) -> &StateSet {
        &self.selection
    }

    pub fn result(&self) -> &ReachResult {
        &self.result
    }

    /// Scores `S ∪ {z}` via a row-replacement update of the current
    /// factors. Requires `z ∉ S`.
    pub fn evaluate_candidate(&self, z: usize) -> Result<CandidateEval> {
        if z == 0 || z > self.spec.n_transient() {
            return Err(Error::StateOutOfRange {
                state: z,
                n: self.spec.n_transient(),
            });
        }
        if self.selection.contains(z) {
            return Err(Error::AlreadySelected { state: z });
        }
        let row = self.spec.system_row(z, true)?;
        let factors = self.factors.replace_row(&RowReplacement::new(z - 1, row))?;
        let mut b = self.b.clone();
        b[z - 1] = self.spec.link_prob(z);
        let result = finish(self.spec, &factors, &b)?;
        Ok(CandidateEval {
            state: z,
            result,
            factors,
            b,
        })
    }

    /// Adopts an evaluated candidate as the new current selection.
    pub fn commit(&mut self, candidate: CandidateEval) {
        self.selection.insert(candidate.state);
        self.factors = candidate.factors;
        self.b = candidate.b;
        self.result = candidate.result;
    }
}
