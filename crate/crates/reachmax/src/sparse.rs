//! Minimal sparse primitives shared by the chain assembly and the LU
//! solver. Everything here is 0-based.

use crate::{Error, Result};

/// A sparse vector: `(index, value)` pairs sorted by index, indices unique,
/// explicit zeros allowed but not required.
pub type SparseVec = Vec<(usize, f64)>;

/// Returns the entries sorted by index, summing duplicates.
pub fn normalize_entries(mut entries: SparseVec) -> SparseVec {
    entries.sort_by_key(|&(i, _)| i);
    let mut out: SparseVec = Vec::with_capacity(entries.len());
    for (i, v) in entries {
        match out.last_mut() {
            Some((j, w)) if *j == i => *w += v,
            _ => out.push((i, v)),
        }
    }
    out
}

pub fn dot_dense(v: &[(usize, f64)], x: &[f64]) -> f64 {
    v.iter().map(|&(i, val)| val * x[i]).sum()
}

/// Square sparse matrix stored by rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    rows: Vec<SparseVec>,
}

impl SparseMatrix {
    /// Builds a matrix from rows; entries are sorted and deduplicated,
    /// out-of-range column indices are rejected.
    pub fn from_rows(n: usize, rows: Vec<SparseVec>) -> Result<Self> {
        if rows.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "expected {n} rows, got {}",
                rows.len()
            )));
        }
        let mut clean = Vec::with_capacity(n);
        for (r, row) in rows.into_iter().enumerate() {
            let row = normalize_entries(row);
            if let Some(&(c, _)) = row.iter().find(|&&(c, _)| c >= n) {
                return Err(Error::DimensionMismatch(format!(
                    "row {r} has column {c} outside 0..{n}"
                )));
            }
            clean.push(row);
        }
        Ok(Self { n, rows: clean })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            rows: (0..n).map(|i| vec![(i, 1.0)]).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &SparseVec {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[SparseVec] {
        &self.rows
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    /// `y = M x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|row| dot_dense(row, x)).collect()
    }

    /// Max absolute entry.
    pub fn norm_max(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| r.iter().map(|&(_, v)| v.abs()))
            .fold(0.0, f64::max)
    }

    /// Column-compressed copy (pattern sorted by row within each column).
    pub fn to_csc(&self) -> Csc {
        let n = self.n;
        let mut counts = vec![0usize; n + 1];
        for row in &self.rows {
            for &(c, _) in row {
                counts[c + 1] += 1;
            }
        }
        for c in 0..n {
            counts[c + 1] += counts[c];
        }
        let col_ptr = counts.clone();
        let nnz = col_ptr[n];
        let mut row_idx = vec![0usize; nnz];
        let mut values = vec![0f64; nnz];
        let mut next = col_ptr.clone();
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                let slot = next[c];
                row_idx[slot] = r;
                values[slot] = v;
                next[c] += 1;
            }
        }
        Csc {
            n,
            col_ptr,
            row_idx,
            values,
        }
    }
}

/// Column-compressed sparse storage used by the factorization kernels.
#[derive(Debug, Clone)]
pub struct Csc {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csc {
    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.col_ptr[j]..self.col_ptr[j + 1]).map(move |k| (self.row_idx[k], self.values[k]))
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}
