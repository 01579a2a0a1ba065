//! Select which states of a Markov chain to re-link toward a designated
//! absorbing target so that a random walk started from the initial
//! distribution reaches the target with maximal probability.
//!
//! The crate is organized around a small pipeline:
//!
//! - [`chain`] defines problem instances: transient states with two
//!   transition tables (linked / unlinked), absorbing states, and the
//!   row-selection that assembles a concrete chain from a chosen state set.
//! - [`lup`] factors `I - A` once as a permuted sparse LU and applies
//!   row-replacement rank-1 updates, so evaluating a candidate selection
//!   costs two triangular solves instead of a fresh factorization.
//! - [`objective`] evaluates the reach probability `f(S) = <pi, c(S)>`
//!   through the linear system `(I - A(S)) c = b(S)`.
//! - [`greedy`] maximizes `f` under a cardinality budget: a plain greedy
//!   sweep and a lazy (CELF-style) variant that reuses stale marginal
//!   gains as upper bounds.
//! - [`tag_graph`] builds the bipartite item-tag chain and folds it to a
//!   tags-only chain via two-step transitions.
//! - [`baselines`] implements the comparison selectors (PageRank, degree,
//!   one-step, random, true tags).
//! - [`oracle`] holds independent ground truth: a dense solver, Monte
//!   Carlo walkers, exhaustive subset search, and vertex-cover instance
//!   generators with exact absorption thresholds.
//! - [`harness`] provides the text formats, synthetic data generation,
//!   and the k-sweep experiment runner behind the CLI.
//!
//! Transient states are numbered `1..=n` in every public interface and in
//! the text formats; dense vectors such as `pi` and `c` store state `i` at
//! position `i - 1`. Matrix-level code ([`sparse`], [`lup`]) is 0-based.

pub mod baselines;
pub mod chain;
pub mod greedy;
pub mod harness;
pub mod lup;
pub mod objective;
pub mod oracle;
pub mod sparse;
pub mod tag_graph;

pub use chain::{AssembledChain, ChainSpec, StateSet, ValidationReport};
pub use greedy::{lazy_greedy, simple_greedy, GreedyTrace};
pub use lup::{LupFactors, UpdatePolicy};
pub use objective::{eval_reach, marginal_gain, one_step_value, ReachResult, SelectionHandle};
pub use tag_graph::{FoldedChain, TagGraph};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// The matrix being factored or updated is singular; for chains this
    /// means some transient state cannot reach absorption.
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("state index {state} outside 1..={n}")]
    StateOutOfRange { state: usize, n: usize },
    #[error("state {state} is already selected")]
    AlreadySelected { state: usize },
    #[error("budget k={k} outside 1..={n}")]
    InvalidBudget { k: usize, n: usize },
    #[error("chain validation failed:\n{0}")]
    Validation(ValidationReport),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("duplicate edge {item} - {tag}")]
    DuplicateEdge { item: String, tag: String },
    #[error("{count} subsets exceed the enumeration limit {limit}")]
    CombinatorialLimit { count: u128, limit: u128 },
    #[error("power iteration stalled at residual {residual:e} after {iters} iterations")]
    NonConvergence { residual: f64, iters: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Whether the error describes bad input data rather than a runtime
    /// failure. The CLI maps this distinction onto exit codes.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation(_)
                | Error::Parse { .. }
                | Error::DuplicateEdge { .. }
                | Error::InvalidGraph(_)
                | Error::StateOutOfRange { .. }
                | Error::InvalidBudget { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
