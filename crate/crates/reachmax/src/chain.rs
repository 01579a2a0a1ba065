//! Problem instances: transient states with two transition tables, a set of
//! absorbing states with one designated target, and the row-selection that
//! assembles a concrete chain from a chosen state set.
//!
//! Every transient state `i` carries two outgoing distributions:
//!
//! - the *unlinked* row, used while `i` is not selected; its target-column
//!   entry is structurally zero,
//! - the *linked* row, used once `i` is selected, which may move
//!   probability onto the target at the expense of the other columns
//!   (entry-wise it never exceeds the unlinked row off the target column).
//!
//! Assembling a selection `S` takes the linked row for members of `S` and
//! the unlinked row elsewhere, and splits the result into the
//! transient-to-transient matrix `A(S)`, the target column `b(S)`, and the
//! remaining absorber mass.
//!
//! Transient states are numbered `1..=n`; absorbing states carry string
//! labels so the number of competing absorbers is free to vary.

use std::collections::VecDeque;
use std::fmt;

use crate::sparse::{normalize_entries, SparseMatrix, SparseVec};
use crate::{Error, Result};

/// Row sums (and the initial distribution) must land within this distance
/// of 1; anything closer than this but not exact is renormalized at load.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// Slack allowed when checking that a linked entry does not exceed the
/// corresponding unlinked entry, to absorb text round-tripping noise.
pub const DOMINANCE_SLACK: f64 = 1e-12;

/// Outgoing distribution of one transient state: transient targets are
/// 1-based state indices, absorbing targets index into
/// [`ChainSpec::absorbing_labels`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Row {
    pub transient: SparseVec,
    pub absorbing: SparseVec,
}

impl Row {
    pub fn new(transient: SparseVec, absorbing: SparseVec) -> Self {
        Self {
            transient: normalize_entries(transient),
            absorbing: normalize_entries(absorbing),
        }
    }

    pub fn sum(&self) -> f64 {
        let t: f64 = self.transient.iter().map(|&(_, v)| v).sum();
        let a: f64 = self.absorbing.iter().map(|&(_, v)| v).sum();
        t + a
    }

    pub fn absorbing_prob(&self, absorber: usize) -> f64 {
        self.absorbing
            .iter()
            .find(|&&(a, _)| a == absorber)
            .map_or(0.0, |&(_, v)| v)
    }

    pub fn transient_prob(&self, state: usize) -> f64 {
        self.transient
            .iter()
            .find(|&&(s, _)| s == state)
            .map_or(0.0, |&(_, v)| v)
    }

    fn scale(&mut self, factor: f64) {
        for (_, v) in self.transient.iter_mut().chain(self.absorbing.iter_mut()) {
            *v *= factor;
        }
    }
}

/// Sorted, duplicate-free set of transient state indices. The budget `k`
/// it was drawn under is the caller's business.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StateSet {
    members: Vec<usize>,
}

impl StateSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_slice(states: &[usize]) -> Self {
        let mut members = states.to_vec();
        members.sort_unstable();
        members.dedup();
        Self { members }
    }

    pub fn contains(&self, state: usize) -> bool {
        self.members.binary_search(&state).is_ok()
    }

    /// Inserts a state; returns false if it was already present.
    pub fn insert(&mut self, state: usize) -> bool {
        match self.members.binary_search(&state) {
            Ok(_) => false,
            Err(pos) => {
                self.members.insert(pos, state);
                true
            }
        }
    }

    /// The set plus one extra state.
    pub fn with(&self, state: usize) -> Self {
        let mut out = self.clone();
        out.insert(state);
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

impl FromIterator<usize> for StateSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        let members: Vec<usize> = iter.into_iter().collect();
        Self::from_slice(&members)
    }
}

impl fmt::Display for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, s) in self.members.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "}}")
    }
}

/// A full problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    n_transient: usize,
    absorbing: Vec<String>,
    target: usize,
    pi: Vec<f64>,
    unlinked: Vec<Row>,
    /// `None` means the linked row equals the unlinked row (selecting the
    /// state is a no-op); only rows that actually differ are materialized.
    linked: Vec<Option<Row>>,
}

impl ChainSpec {
    pub fn builder(n_transient: usize) -> ChainBuilder {
        ChainBuilder::new(n_transient)
    }

    pub fn n_transient(&self) -> usize {
        self.n_transient
    }

    pub fn absorbing_labels(&self) -> &[String] {
        &self.absorbing
    }

    /// Index of the target absorber within [`Self::absorbing_labels`].
    pub fn target_index(&self) -> usize {
        self.target
    }

    pub fn target_label(&self) -> &str {
        &self.absorbing[self.target]
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn set_pi(&mut self, pi: Vec<f64>) -> Result<()> {
        if pi.len() != self.n_transient {
            return Err(Error::DimensionMismatch(format!(
                "pi has {} entries for {} transient states",
                pi.len(),
                self.n_transient
            )));
        }
        self.pi = pi;
        Ok(())
    }

    pub fn unlinked_row(&self, state: usize) -> &Row {
        &self.unlinked[state - 1]
    }

    /// Effective linked row: falls back to the unlinked row when no
    /// distinct linked row was given.
    pub fn linked_row(&self, state: usize) -> &Row {
        self.linked[state - 1]
            .as_ref()
            .unwrap_or(&self.unlinked[state - 1])
    }

    /// Whether a distinct linked row was materialized for `state`.
    pub fn has_linked_row(&self, state: usize) -> bool {
        self.linked[state - 1].is_some()
    }

    /// Probability of stepping straight to the target when `state` is
    /// selected.
    pub fn link_prob(&self, state: usize) -> f64 {
        self.linked_row(state).absorbing_prob(self.target)
    }

    /// Number of states that can place mass on the target at all.
    pub fn n_linkable(&self) -> usize {
        (1..=self.n_transient)
            .filter(|&i| self.link_prob(i) > 0.0)
            .count()
    }

    fn check_state(&self, state: usize) -> Result<()> {
        if state == 0 || state > self.n_transient {
            return Err(Error::StateOutOfRange {
                state,
                n: self.n_transient,
            });
        }
        Ok(())
    }

    /// Scales every row whose sum is within [`ROW_SUM_TOL`] of 1 (but not
    /// exactly 1) so it sums to 1, recording each adjustment. Rows outside
    /// the tolerance are left alone for validation to flag.
    pub fn renormalize(&mut self) -> Vec<RowAdjustment> {
        let mut adjustments = Vec::new();
        let pi_sum: f64 = self.pi.iter().sum();
        if pi_sum != 1.0 && (pi_sum - 1.0).abs() <= ROW_SUM_TOL && pi_sum > 0.0 {
            for v in &mut self.pi {
                *v /= pi_sum;
            }
            adjustments.push(RowAdjustment {
                table: Table::Pi,
                state: 0,
                original_sum: pi_sum,
            });
        }
        for i in 0..self.n_transient {
            let sum = self.unlinked[i].sum();
            if sum != 1.0 && (sum - 1.0).abs() <= ROW_SUM_TOL && sum > 0.0 {
                self.unlinked[i].scale(1.0 / sum);
                adjustments.push(RowAdjustment {
                    table: Table::Unlinked,
                    state: i + 1,
                    original_sum: sum,
                });
            }
            if let Some(row) = &mut self.linked[i] {
                let sum = row.sum();
                if sum != 1.0 && (sum - 1.0).abs() <= ROW_SUM_TOL && sum > 0.0 {
                    row.scale(1.0 / sum);
                    adjustments.push(RowAdjustment {
                        table: Table::Linked,
                        state: i + 1,
                        original_sum: sum,
                    });
                }
            }
        }
        adjustments
    }

    /// Checks every structural invariant and reports all violations; an
    /// empty report means the instance is well-formed.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let n = self.n_transient;

        let pi_sum: f64 = self.pi.iter().sum();
        if (pi_sum - 1.0).abs() > ROW_SUM_TOL {
            report.violations.push(Violation::PiSum { sum: pi_sum });
        }
        for (i, &v) in self.pi.iter().enumerate() {
            if v < 0.0 {
                report.violations.push(Violation::PiNegative {
                    state: i + 1,
                    value: v,
                });
            }
        }

        for i in 1..=n {
            self.validate_row(Table::Unlinked, i, self.unlinked_row(i), &mut report);
            let unlinked_target = self.unlinked_row(i).absorbing_prob(self.target);
            if unlinked_target != 0.0 {
                report.violations.push(Violation::TargetColumnInUnlinked {
                    state: i,
                    prob: unlinked_target,
                });
            }
            if let Some(linked) = &self.linked[i - 1] {
                self.validate_row(Table::Linked, i, linked, &mut report);
                self.validate_dominance(i, linked, &mut report);
            }
        }

        for (table, unreachable) in [
            (Table::Unlinked, self.unreachable_states(false)),
            (Table::Linked, self.unreachable_states(true)),
        ] {
            for state in unreachable {
                report
                    .violations
                    .push(Violation::NoPathToAbsorption { table, state });
            }
        }

        report
    }

    fn validate_row(&self, table: Table, state: usize, row: &Row, report: &mut ValidationReport) {
        let sum = row.sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            report
                .violations
                .push(Violation::RowSum { table, state, sum });
        }
        for &(j, v) in &row.transient {
            if j == 0 || j > self.n_transient {
                report.violations.push(Violation::BadTargetIndex {
                    table,
                    state,
                    target: j,
                });
            }
            if v < 0.0 {
                report.violations.push(Violation::NegativeEntry {
                    table,
                    state,
                    column: Column::Transient(j),
                    value: v,
                });
            }
        }
        for &(a, v) in &row.absorbing {
            if v < 0.0 {
                report.violations.push(Violation::NegativeEntry {
                    table,
                    state,
                    column: Column::Absorbing(self.absorbing.get(a).cloned().unwrap_or_default()),
                    value: v,
                });
            }
        }
    }

    /// Linked entries must not exceed unlinked ones off the target column.
    fn validate_dominance(&self, state: usize, linked: &Row, report: &mut ValidationReport) {
        let unlinked = self.unlinked_row(state);
        for &(j, v) in &linked.transient {
            let u = unlinked.transient_prob(j);
            if v > u + DOMINANCE_SLACK {
                report.violations.push(Violation::LinkedExceedsUnlinked {
                    state,
                    column: Column::Transient(j),
                    linked: v,
                    unlinked: u,
                });
            }
        }
        for &(a, v) in &linked.absorbing {
            if a == self.target {
                continue;
            }
            let u = unlinked.absorbing_prob(a);
            if v > u + DOMINANCE_SLACK {
                report.violations.push(Violation::LinkedExceedsUnlinked {
                    state,
                    column: Column::Absorbing(self.absorbing.get(a).cloned().unwrap_or_default()),
                    linked: v,
                    unlinked: u,
                });
            }
        }
    }

    /// States with no positive-probability path to any absorber, walking
    /// the requested table (linked rows fall back to unlinked rows).
    fn unreachable_states(&self, linked: bool) -> Vec<usize> {
        let n = self.n_transient;
        // reverse adjacency over positive transient edges
        let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut reaches = vec![false; n];
        let mut queue = VecDeque::new();
        for i in 1..=n {
            let row = if linked {
                self.linked_row(i)
            } else {
                self.unlinked_row(i)
            };
            if row.absorbing.iter().any(|&(_, v)| v > 0.0) {
                reaches[i - 1] = true;
                queue.push_back(i - 1);
            }
            for &(j, v) in &row.transient {
                if v > 0.0 && j >= 1 && j <= n {
                    rev[j - 1].push(i - 1);
                }
            }
        }
        while let Some(j) = queue.pop_front() {
            for &i in &rev[j] {
                if !reaches[i] {
                    reaches[i] = true;
                    queue.push_back(i);
                }
            }
        }
        (1..=n).filter(|&i| !reaches[i - 1]).collect()
    }

    /// Picks the linked row for selected states and the unlinked row
    /// elsewhere, splitting the result into `A(S)`, the target column
    /// `b(S)`, and the mass going to competing absorbers.
    pub fn assemble(&self, selection: &StateSet) -> Result<AssembledChain> {
        for state in selection.iter() {
            self.check_state(state)?;
        }
        let n = self.n_transient;
        let mut a_rows = Vec::with_capacity(n);
        let mut b = vec![0.0; n];
        let mut b_other = vec![0.0; n];
        for i in 1..=n {
            let row = if selection.contains(i) {
                self.linked_row(i)
            } else {
                self.unlinked_row(i)
            };
            a_rows.push(
                row.transient
                    .iter()
                    .map(|&(j, v)| (j - 1, v))
                    .collect::<SparseVec>(),
            );
            for &(a, v) in &row.absorbing {
                if a == self.target {
                    b[i - 1] += v;
                } else {
                    b_other[i - 1] += v;
                }
            }
        }
        Ok(AssembledChain {
            a: SparseMatrix::from_rows(n, a_rows)?,
            b,
            b_other,
        })
    }

    /// The row of `I - A(S)` for one state, in matrix (0-based) indexing.
    /// This is what a rank-1 row replacement feeds to the solver when the
    /// state flips between its two rows.
    pub fn system_row(&self, state: usize, linked: bool) -> Result<SparseVec> {
        self.check_state(state)?;
        let row = if linked {
            self.linked_row(state)
        } else {
            self.unlinked_row(state)
        };
        let mut out: SparseVec = row.transient.iter().map(|&(j, v)| (j - 1, -v)).collect();
        match out.binary_search_by_key(&(state - 1), |&(c, _)| c) {
            Ok(pos) => out[pos].1 += 1.0,
            Err(pos) => out.insert(pos, (state - 1, 1.0)),
        }
        Ok(out)
    }
}

/// The matrices of the assembled chain for one selection, in 0-based
/// matrix indexing: row/column `r` corresponds to transient state `r + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledChain {
    pub a: SparseMatrix,
    pub b: Vec<f64>,
    pub b_other: Vec<f64>,
}

impl AssembledChain {
    pub fn n(&self) -> usize {
        self.a.n()
    }

    /// `I - A` as a sparse matrix.
    pub fn system_matrix(&self) -> SparseMatrix {
        let n = self.n();
        let rows = (0..n)
            .map(|i| {
                let mut row: SparseVec = self.a.row(i).iter().map(|&(j, v)| (j, -v)).collect();
                match row.binary_search_by_key(&i, |&(c, _)| c) {
                    Ok(pos) => row[pos].1 += 1.0,
                    Err(pos) => row.insert(pos, (i, 1.0)),
                }
                row
            })
            .collect();
        SparseMatrix::from_rows(n, rows).expect("rows derived from a valid matrix")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Table {
    Pi,
    Unlinked,
    Linked,
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Table::Pi => write!(f, "pi"),
            Table::Unlinked => write!(f, "unlinked"),
            Table::Linked => write!(f, "linked"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Transient(usize),
    Absorbing(String),
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Column::Transient(j) => write!(f, "{j}"),
            Column::Absorbing(label) => write!(f, "{label}"),
        }
    }
}

/// One invariant violation, with enough indices to locate it.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    RowSum {
        table: Table,
        state: usize,
        sum: f64,
    },
    TargetColumnInUnlinked {
        state: usize,
        prob: f64,
    },
    LinkedExceedsUnlinked {
        state: usize,
        column: Column,
        linked: f64,
        unlinked: f64,
    },
    NegativeEntry {
        table: Table,
        state: usize,
        column: Column,
        value: f64,
    },
    BadTargetIndex {
        table: Table,
        state: usize,
        target: usize,
    },
    PiNegative {
        state: usize,
        value: f64,
    },
    PiSum {
        sum: f64,
    },
    NoPathToAbsorption {
        table: Table,
        state: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RowSum { table, state, sum } => {
                write!(f, "{table} row {state} sums to {sum:.12} instead of 1")
            }
            Violation::TargetColumnInUnlinked { state, prob } => {
                write!(
                    f,
                    "absorbing-column nonzero in unlinked row {state}: {prob:.12}"
                )
            }
            Violation::LinkedExceedsUnlinked {
                state,
                column,
                linked,
                unlinked,
            } => write!(
                f,
                "linked row {state} column {column}: {linked:.12} exceeds unlinked {unlinked:.12}"
            ),
            Violation::NegativeEntry {
                table,
                state,
                column,
                value,
            } => write!(
                f,
                "{table} row {state} column {column} is negative: {value:.12}"
            ),
            Violation::BadTargetIndex {
                table,
                state,
                target,
            } => {
                write!(f, "{table} row {state} targets out-of-range state {target}")
            }
            Violation::PiNegative { state, value } => {
                write!(f, "pi[{state}] is negative: {value:.12}")
            }
            Violation::PiSum { sum } => write!(f, "pi sums to {sum:.12} instead of 1"),
            Violation::NoPathToAbsorption { table, state } => {
                write!(
                    f,
                    "state {state} cannot reach absorption under {table} rows"
                )
            }
        }
    }
}

/// Record of a row scaled to sum exactly 1 at load time.
#[derive(Debug, Clone, PartialEq)]
pub struct RowAdjustment {
    pub table: Table,
    /// 0 for the pi vector.
    pub state: usize,
    pub original_sum: f64,
}

/// Everything `validate` found, plus any renormalizations applied at load.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub renormalized: Vec<RowAdjustment>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            writeln!(f, "ok: all invariants hold")?;
        }
        for v in &self.violations {
            writeln!(f, "violation: {v}")?;
        }
        for r in &self.renormalized {
            if r.table == Table::Pi {
                writeln!(f, "renormalized: pi (sum was {:.16e})", r.original_sum)?;
            } else {
                writeln!(
                    f,
                    "renormalized: {} row {} (sum was {:.16e})",
                    r.table, r.state, r.original_sum
                )?;
            }
        }
        Ok(())
    }
}

/// Step-by-step construction of a [`ChainSpec`]. Build does structural
/// checks only (labels resolve, a target exists); probability invariants
/// are the business of [`ChainSpec::validate`].
pub struct ChainBuilder {
    n: usize,
    absorbing: Vec<String>,
    target: Option<usize>,
    pi: Vec<f64>,
    unlinked: Vec<Row>,
    linked: Vec<Option<Row>>,
    errors: Vec<String>,
}

impl ChainBuilder {
    fn new(n: usize) -> Self {
        Self {
            n,
            absorbing: Vec::new(),
            target: None,
            pi: vec![0.0; n],
            unlinked: vec![Row::default(); n],
            linked: vec![None; n],
            errors: Vec::new(),
        }
    }

    pub fn absorber(mut self, label: &str) -> Self {
        if self.absorbing.iter().any(|l| l == label) {
            self.errors
                .push(format!("duplicate absorber label {label}"));
        }
        self.absorbing.push(label.to_string());
        self
    }

    /// Adds an absorber and designates it as the target.
    pub fn target_absorber(mut self, label: &str) -> Self {
        if self.target.is_some() {
            self.errors.push("target absorber set twice".into());
        }
        self.target = Some(self.absorbing.len());
        self.absorber(label)
    }

    pub fn pi(mut self, pi: Vec<f64>) -> Self {
        if pi.len() != self.n {
            self.errors
                .push(format!("pi has {} entries for {} states", pi.len(), self.n));
        } else {
            self.pi = pi;
        }
        self
    }

    fn make_row(&mut self, transient: &[(usize, f64)], absorbing: &[(&str, f64)]) -> Row {
        let mut abs_entries: SparseVec = Vec::with_capacity(absorbing.len());
        for &(label, v) in absorbing {
            match self.absorbing.iter().position(|l| l == label) {
                Some(a) => abs_entries.push((a, v)),
                None => self.errors.push(format!("unknown absorber label {label}")),
            }
        }
        Row::new(transient.to_vec(), abs_entries)
    }

    fn check_state(&mut self, state: usize) -> bool {
        if state == 0 || state > self.n {
            self.errors
                .push(format!("state {state} outside 1..={}", self.n));
            false
        } else {
            true
        }
    }

    pub fn unlinked_row(
        mut self,
        state: usize,
        transient: &[(usize, f64)],
        absorbing: &[(&str, f64)],
    ) -> Self {
        let row = self.make_row(transient, absorbing);
        if self.check_state(state) {
            self.unlinked[state - 1] = row;
        }
        self
    }

    pub fn linked_row(
        mut self,
        state: usize,
        transient: &[(usize, f64)],
        absorbing: &[(&str, f64)],
    ) -> Self {
        let row = self.make_row(transient, absorbing);
        if self.check_state(state) {
            self.linked[state - 1] = Some(row);
        }
        self
    }

    pub fn build(self) -> Result<ChainSpec> {
        if !self.errors.is_empty() {
            return Err(Error::InvalidGraph(self.errors.join("; ")));
        }
        let target = self
            .target
            .ok_or_else(|| Error::InvalidGraph("no target absorber designated".into()))?;
        if self.n == 0 {
            return Err(Error::InvalidGraph(
                "chain needs at least one transient state".into(),
            ));
        }
        Ok(ChainSpec {
            n_transient: self.n,
            absorbing: self.absorbing,
            target,
            pi: self.pi,
            unlinked: self.unlinked,
            linked: self.linked,
        })
    }
}
