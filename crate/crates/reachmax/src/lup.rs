//! Sparse LU factorization with partial pivoting and row-replacement
//! rank-1 updates.
//!
//! `factorize` produces `L U = P M` with unit-lower-triangular `L`, upper
//! triangular `U`, and a row permutation `P` chosen by partial pivoting.
//! `solve` is two triangular substitutions.
//!
//! Replacing row `z` of `M` with a new row `r` perturbs the factorization
//! by a rank-1 term that lands entirely in `L`: writing `t` for the pivot
//! position of row `z`, the row `t` of `L` becomes the solution of
//! `lᵀ U = r`, i.e. `L' = L + e_t (lᵀ − L_t·)`. `L'` is no longer
//! triangular, but it factors as `L · E` with `E = I + u wᵀ`,
//! `u = L⁻¹ e_t`, `w = l − Lᵀ e_t`, so solves apply the chain of rank-1
//! inverses `E⁻¹ h = h − u (wᵀ h) / (1 + wᵀ u)` after the base forward
//! substitution. `|1 + wᵀ u|` is the determinant ratio of the update and
//! doubles as the singularity test.
//!
//! Each update appends one `E` factor; accuracy drift and fill growth are
//! bounded by an automatic refactorization once [`UpdatePolicy`] limits
//! are hit. Factors are immutable values: `replace_row` returns new
//! factors sharing the base, so candidate evaluations can branch from a
//! common factorization.

use std::sync::Arc;

use crate::sparse::{normalize_entries, Csc, SparseMatrix, SparseVec};
use crate::{Error, Result};

/// Pivots (and update determinant ratios) below this magnitude are
/// treated as singular.
pub const PIVOT_TOL: f64 = 1e-12;

/// When to fold accumulated updates back into a fresh factorization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdatePolicy {
    /// Maximum number of rank-1 updates carried before refactorizing.
    pub refactor_after: usize,
    /// Refactorize when total stored nonzeros exceed this multiple of the
    /// base factorization's nonzeros.
    pub fill_ratio: f64,
}

impl Default for UpdatePolicy {
    fn default() -> Self {
        Self {
            refactor_after: 64,
            fill_ratio: 4.0,
        }
    }
}

/// Nonzero counts of the stored factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FillStats {
    /// Strictly-lower entries of the base `L` (unit diagonal implicit).
    pub l_nnz: usize,
    /// Entries of `U`, diagonal included.
    pub u_nnz: usize,
    /// Entries held by pending rank-1 update factors.
    pub eta_nnz: usize,
}

/// Base factorization, shared by all factor values branched off it.
#[derive(Debug)]
struct LuBase {
    n: usize,
    /// Strictly-lower columns of `L`, row indices in pivot space.
    l: Csc,
    /// Rows of `L` (same entries, row-compressed) for row extraction.
    l_rows: Vec<SparseVec>,
    /// Strictly-upper columns of `U`, row indices in pivot space.
    u: Csc,
    u_diag: Vec<f64>,
    /// `perm[pos]` = original row placed at pivot position `pos`.
    perm: Vec<usize>,
    /// `pinv[orig]` = pivot position of original row `orig`.
    pinv: Vec<usize>,
}

/// One pending rank-1 update factor `E = I + u wᵀ`.
#[derive(Debug)]
struct Eta {
    u: SparseVec,
    w: SparseVec,
    denom: f64,
}

impl Eta {
    /// `x ← E⁻¹ x`.
    fn apply_inverse(&self, x: &mut [f64]) {
        let s: f64 = self.w.iter().map(|&(i, v)| v * x[i]).sum();
        if s == 0.0 {
            return;
        }
        let scale = s / self.denom;
        for &(i, v) in &self.u {
            x[i] -= scale * v;
        }
    }

    /// `xᵀ ← xᵀ E` (right multiplication by the forward factor).
    fn apply_right(&self, x: &mut [f64]) {
        let s: f64 = self.u.iter().map(|&(i, v)| v * x[i]).sum();
        if s == 0.0 {
            return;
        }
        for &(i, v) in &self.w {
            x[i] += s * v;
        }
    }

    fn nnz(&self) -> usize {
        self.u.len() + self.w.len()
    }
}

/// A replacement for one row of the factored matrix (0-based indexing).
#[derive(Debug, Clone, PartialEq)]
pub struct RowReplacement {
    pub row: usize,
    pub values: SparseVec,
}

impl RowReplacement {
    pub fn new(row: usize, values: SparseVec) -> Self {
        Self {
            row,
            values: normalize_entries(values),
        }
    }
}

/// Permuted LU factors of a square sparse matrix, with the rows of the
/// matrix they currently represent.
#[derive(Debug, Clone)]
pub struct LupFactors {
    base: Arc<LuBase>,
    etas: Vec<Arc<Eta>>,
    rows: Vec<Arc<SparseVec>>,
    update_count: usize,
    policy: UpdatePolicy,
}

impl LupFactors {
    /// Factors `m` with the default update policy.
    pub fn factorize(m: &SparseMatrix) -> Result<Self> {
        Self::factorize_with(m, UpdatePolicy::default())
    }

    pub fn factorize_with(m: &SparseMatrix, policy: UpdatePolicy) -> Result<Self> {
        let rows: Vec<Arc<SparseVec>> = m.rows().iter().map(|r| Arc::new(r.clone())).collect();
        Self::factorize_rows(rows, policy)
    }

    fn factorize_rows(rows: Vec<Arc<SparseVec>>, policy: UpdatePolicy) -> Result<Self> {
        let n = rows.len();
        let m = SparseMatrix::from_rows(n, rows.iter().map(|r| r.as_ref().clone()).collect())?;
        let base = factorize_base(&m)?;
        Ok(Self {
            base: Arc::new(base),
            etas: Vec::new(),
            rows,
            update_count: 0,
            policy,
        })
    }

    pub fn n(&self) -> usize {
        self.base.n
    }

    /// Rank-1 updates applied since the last full factorization.
    pub fn update_count(&self) -> usize {
        self.update_count
    }

    pub fn policy(&self) -> UpdatePolicy {
        self.policy
    }

    pub fn fill_stats(&self) -> FillStats {
        FillStats {
            l_nnz: self.base.l.nnz(),
            u_nnz: self.base.u.nnz() + self.base.n,
            eta_nnz: self.etas.iter().map(|e| e.nnz()).sum(),
        }
    }

    /// `perm[pos]` = original row index at pivot position `pos`.
    pub fn perm(&self) -> &[usize] {
        &self.base.perm
    }

    /// Rows of the matrix the factors currently represent.
    pub fn represented_rows(&self) -> Vec<SparseVec> {
        self.rows.iter().map(|r| r.as_ref().clone()).collect()
    }

    /// `‖M c − rhs‖_∞` against the currently represented `M`.
    pub fn residual(&self, c: &[f64], rhs: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(rhs)
            .map(|(row, &r)| {
                let mc: f64 = row.iter().map(|&(j, v)| v * c[j]).sum();
                (mc - r).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Solves `M c = rhs` for the currently represented `M`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.base.n;
        if rhs.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "rhs has {} entries for a {n}x{n} system",
                rhs.len()
            )));
        }
        // y = P rhs
        let mut y: Vec<f64> = (0..n).map(|pos| rhs[self.base.perm[pos]]).collect();
        // forward substitution with unit-diagonal L
        for j in 0..n {
            let yj = y[j];
            if yj != 0.0 {
                for (i, lv) in self.base.l.col(j) {
                    y[i] -= lv * yj;
                }
            }
        }
        for eta in &self.etas {
            eta.apply_inverse(&mut y);
        }
        // backward substitution on U
        for j in (0..n).rev() {
            y[j] /= self.base.u_diag[j];
            let cj = y[j];
            if cj != 0.0 {
                for (i, uv) in self.base.u.col(j) {
                    y[i] -= uv * cj;
                }
            }
        }
        Ok(y)
    }

    /// Returns factors representing the matrix with one row replaced.
    ///
    /// Appends a rank-1 update factor; once the policy's update budget or
    /// fill bound would be exceeded, a full refactorization of the
    /// replaced matrix happens instead (transparently — the returned
    /// factors satisfy the same solve contract either way).
    pub fn replace_row(&self, replacement: &RowReplacement) -> Result<Self> {
        let n = self.base.n;
        let z = replacement.row;
        if z >= n {
            return Err(Error::DimensionMismatch(format!("row {z} outside 0..{n}")));
        }
        let values = normalize_entries(replacement.values.clone());
        if let Some(&(c, _)) = values.iter().find(|&&(c, _)| c >= n) {
            return Err(Error::DimensionMismatch(format!(
                "replacement row has column {c} outside 0..{n}"
            )));
        }

        let mut rows = self.rows.clone();
        rows[z] = Arc::new(values.clone());

        if self.update_count + 1 > self.policy.refactor_after {
            return Self::factorize_rows(rows, self.policy);
        }

        let t = self.base.pinv[z];

        // l solves lᵀ U = r: forward pass over U's columns.
        let mut r_dense = vec![0.0; n];
        for &(c, v) in &values {
            r_dense[c] = v;
        }
        let mut ell = vec![0.0; n];
        for j in 0..n {
            let mut s = r_dense[j];
            for (p, uv) in self.base.u.col(j) {
                s -= uv * ell[p];
            }
            ell[j] = s / self.base.u_diag[j];
        }

        // current row t of L (base row pushed through pending updates)
        let mut lrow = vec![0.0; n];
        for &(c, v) in &self.base.l_rows[t] {
            lrow[c] = v;
        }
        lrow[t] = 1.0;
        for eta in &self.etas {
            eta.apply_right(&mut lrow);
        }

        let w: SparseVec = (0..n)
            .filter(|&i| ell[i] != lrow[i])
            .map(|i| (i, ell[i] - lrow[i]))
            .collect();

        // u = (current L)⁻¹ e_t
        let mut v = vec![0.0; n];
        v[t] = 1.0;
        for j in t..n {
            let vj = v[j];
            if vj != 0.0 {
                for (i, lv) in self.base.l.col(j) {
                    v[i] -= lv * vj;
                }
            }
        }
        for eta in &self.etas {
            eta.apply_inverse(&mut v);
        }

        let denom = 1.0 + w.iter().map(|&(i, wv)| wv * v[i]).sum::<f64>();
        if denom.abs() < PIVOT_TOL {
            return Err(Error::Singular(format!(
                "row replacement at {z} makes the matrix singular (ratio {denom:e})"
            )));
        }

        let u: SparseVec = v
            .iter()
            .enumerate()
            .filter(|&(_, &x)| x != 0.0)
            .map(|(i, &x)| (i, x))
            .collect();
        let eta = Eta { u, w, denom };

        let stats = self.fill_stats();
        let base_nnz = stats.l_nnz + stats.u_nnz;
        if (base_nnz + stats.eta_nnz + eta.nnz()) as f64 > self.policy.fill_ratio * base_nnz as f64
        {
            return Self::factorize_rows(rows, self.policy);
        }

        let mut etas = self.etas.clone();
        etas.push(Arc::new(eta));
        Ok(Self {
            base: self.base.clone(),
            etas,
            rows,
            update_count: self.update_count + 1,
            policy: self.policy,
        })
    }

    /// Materializes the effective lower factor (base `L` times pending
    /// update factors) densely. Diagnostic-grade; intended for small
    /// systems and reconstruction checks.
    pub fn dense_lower(&self) -> Vec<Vec<f64>> {
        let n = self.base.n;
        let mut l = vec![vec![0.0; n]; n];
        for (row, l_row) in l.iter_mut().enumerate() {
            for &(c, v) in &self.base.l_rows[row] {
                l_row[c] = v;
            }
            l_row[row] = 1.0;
            for eta in &self.etas {
                eta.apply_right(l_row);
            }
        }
        l
    }

    /// Dense copy of `U`.
    pub fn dense_upper(&self) -> Vec<Vec<f64>> {
        let n = self.base.n;
        let mut u = vec![vec![0.0; n]; n];
        for j in 0..n {
            u[j][j] = self.base.u_diag[j];
            for (p, uv) in self.base.u.col(j) {
                u[p][j] = uv;
            }
        }
        u
    }
}

/// Left-looking sparse LU with partial pivoting. Row indices of `L`'s
/// columns are remapped to pivot positions once the pivot order is known.
fn factorize_base(m: &SparseMatrix) -> Result<LuBase> {
    let n = m.n();
    let a = m.to_csc();

    const UNPIVOTED: usize = usize::MAX;
    let mut pinv = vec![UNPIVOTED; n];
    let mut perm = vec![0usize; n];

    // L columns grow as factorization proceeds; row ids stay original
    // until the final remap.
    let mut l_ptr = Vec::with_capacity(n + 1);
    l_ptr.push(0usize);
    let mut l_row: Vec<usize> = Vec::new();
    let mut l_val: Vec<f64> = Vec::new();

    let mut u_cols: Vec<SparseVec> = Vec::with_capacity(n);
    let mut u_diag = vec![0.0; n];

    let mut x = vec![0.0; n];
    let mut mark = vec![usize::MAX; n];
    let mut topo: Vec<usize> = Vec::with_capacity(n);
    let mut stack: Vec<(usize, usize)> = Vec::with_capacity(n);

    for j in 0..n {
        // symbolic: reach of column j's pattern through pivotal L columns,
        // collected in postorder
        topo.clear();
        for (r, _) in a.col(j) {
            if mark[r] == j {
                continue;
            }
            mark[r] = j;
            stack.push((r, 0));
            while let Some(&mut (node, ref mut child)) = stack.last_mut() {
                let p = pinv[node];
                let mut descended = false;
                if p != UNPIVOTED {
                    let lo = l_ptr[p];
                    let hi = l_ptr[p + 1];
                    while lo + *child < hi {
                        let next = l_row[lo + *child];
                        *child += 1;
                        if mark[next] != j {
                            mark[next] = j;
                            stack.push((next, 0));
                            descended = true;
                            break;
                        }
                    }
                }
                if !descended {
                    topo.push(node);
                    stack.pop();
                }
            }
        }

        // numeric: scatter, then eliminate in topological order
        for &r in &topo {
            x[r] = 0.0;
        }
        for (r, v) in a.col(j) {
            x[r] = v;
        }
        for &r in topo.iter().rev() {
            let p = pinv[r];
            if p == UNPIVOTED {
                continue;
            }
            let xr = x[r];
            if xr != 0.0 {
                for k in l_ptr[p]..l_ptr[p + 1] {
                    x[l_row[k]] -= l_val[k] * xr;
                }
            }
        }

        // partial pivoting over unpivoted rows; ties break to the lowest
        // original index for reproducibility
        let mut pivot_row = UNPIVOTED;
        let mut pivot_abs = 0.0;
        for &r in &topo {
            if pinv[r] == UNPIVOTED {
                let a = x[r].abs();
                if a > pivot_abs || (a == pivot_abs && pivot_row != UNPIVOTED && r < pivot_row) {
                    pivot_abs = a;
                    pivot_row = r;
                }
            }
        }
        if pivot_row == UNPIVOTED || pivot_abs < PIVOT_TOL {
            return Err(Error::Singular(format!(
                "no usable pivot in column {j} (best {pivot_abs:e})"
            )));
        }
        let pivot = x[pivot_row];
        u_diag[j] = pivot;

        let mut u_col: SparseVec = Vec::new();
        for &r in &topo {
            let p = pinv[r];
            if p != UNPIVOTED {
                if x[r] != 0.0 {
                    u_col.push((p, x[r]));
                }
            } else if r != pivot_row && x[r] != 0.0 {
                l_row.push(r);
                l_val.push(x[r] / pivot);
            }
        }
        u_col.sort_by_key(|&(p, _)| p);
        u_cols.push(u_col);

        pinv[pivot_row] = j;
        perm[j] = pivot_row;
        l_ptr.push(l_row.len());
    }

    // remap L's row ids into pivot space and sort each column
    let mut l_cols: Vec<SparseVec> = Vec::with_capacity(n);
    for j in 0..n {
        let mut col: SparseVec = (l_ptr[j]..l_ptr[j + 1])
            .map(|k| (pinv[l_row[k]], l_val[k]))
            .collect();
        col.sort_by_key(|&(p, _)| p);
        l_cols.push(col);
    }

    let l = cols_to_csc(n, &l_cols);
    let u = cols_to_csc(n, &u_cols);

    let mut l_rows: Vec<SparseVec> = vec![Vec::new(); n];
    for (j, col) in l_cols.iter().enumerate() {
        for &(p, v) in col {
            l_rows[p].push((j, v));
        }
    }

    Ok(LuBase {
        n,
        l,
        l_rows,
        u,
        u_diag,
        perm,
        pinv,
    })
}

fn cols_to_csc(n: usize, cols: &[SparseVec]) -> Csc {
    let mut col_ptr = Vec::with_capacity(n + 1);
    col_ptr.push(0);
    let mut row_idx = Vec::new();
    let mut values = Vec::new();
    for col in cols {
        for &(r, v) in col {
            row_idx.push(r);
            values.push(v);
        }
        col_ptr.push(row_idx.len());
    }
    Csc {
        n,
        col_ptr,
        row_idx,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::norm_inf;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Multiply the factors back together and compare against P·M — the
    /// reconstruction oracle for factorization correctness.
    fn reconstruction_error(f: &LupFactors, m: &SparseMatrix) -> f64 {
        let n = m.n();
        let l = f.dense_lower();
        let u = f.dense_upper();
        let perm = f.perm();
        let mut worst: f64 = 0.0;
        for pos in 0..n {
            let mut pm = vec![0.0; n];
            for &(c, v) in m.row(perm[pos]) {
                pm[c] = v;
            }
            for c in 0..n {
                let lu: f64 = (0..n).map(|k| l[pos][k] * u[k][c]).sum();
                worst = worst.max((lu - pm[c]).abs());
            }
        }
        worst
    }

    fn random_dominant(n: usize, seed: u64) -> SparseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..n)
            .map(|i| {
                let mut row: SparseVec = Vec::new();
                let mut off_sum = 0.0;
                for _ in 0..4 {
                    let j = rng.random_range(0..n);
                    if j != i {
                        let v = rng.random_range(-1.0..1.0);
                        off_sum += f64::abs(v);
                        row.push((j, v));
                    }
                }
                row.push((i, off_sum + 1.0 + rng.random::<f64>()));
                row
            })
            .collect();
        SparseMatrix::from_rows(n, rows).unwrap()
    }

    /// Denser instance that forces real fill-in during elimination.
    fn random_dense_dominant(n: usize, seed: u64) -> SparseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..n)
            .map(|i| {
                let mut row: SparseVec = Vec::new();
                let mut off_sum = 0.0;
                for j in 0..n {
                    if j != i && rng.random::<f64>() < 0.3 {
                        let v = rng.random_range(-1.0..1.0);
                        off_sum += f64::abs(v);
                        row.push((j, v));
                    }
                }
                row.push((i, off_sum + 1.0 + rng.random::<f64>()));
                row
            })
            .collect();
        SparseMatrix::from_rows(n, rows).unwrap()
    }

    #[test]
    fn identity_factors_trivially() {
        let m = SparseMatrix::identity(4);
        let f = LupFactors::factorize(&m).unwrap();
        assert_eq!(f.perm(), &[0, 1, 2, 3]);
        let stats = f.fill_stats();
        assert_eq!(stats.l_nnz, 0);
        assert_eq!(stats.u_nnz, 4);
        let rhs = vec![1.0, -2.0, 3.0, 0.5];
        assert_eq!(f.solve(&rhs).unwrap(), rhs);
    }

    #[test]
    fn fill_heavy_factorization_stays_accurate() {
        let m = random_dense_dominant(120, 77);
        let f = LupFactors::factorize(&m).unwrap();
        let rhs: Vec<f64> = (0..120).map(|i| ((i * 31) % 17) as f64 / 17.0).collect();
        let c = f.solve(&rhs).unwrap();
        let resid = f.residual(&c, &rhs);
        assert!(resid <= 1e-9 * (1.0 + norm_inf(&rhs)), "residual {resid:e}");
        // and a row replacement on top still tracks the fresh path
        let updated = f
            .replace_row(&RowReplacement::new(60, vec![(60, 5.0), (3, 0.25)]))
            .unwrap();
        let got = updated.solve(&rhs).unwrap();
        let current = SparseMatrix::from_rows(120, updated.represented_rows()).unwrap();
        let want = LupFactors::factorize(&current)
            .unwrap()
            .solve(&rhs)
            .unwrap();
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn one_by_one_system() {
        let m = SparseMatrix::from_rows(1, vec![vec![(0, 0.6)]]).unwrap();
        let f = LupFactors::factorize(&m).unwrap();
        let c = f.solve(&[0.2]).unwrap();
        assert!((c[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let m = random_dominant(10, 7);
        let f = LupFactors::factorize(&m).unwrap();
        assert_eq!(f.solve(&[0.0; 10]).unwrap(), vec![0.0; 10]);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let f = LupFactors::factorize(&SparseMatrix::identity(3)).unwrap();
        assert!(matches!(f.solve(&[1.0]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn singular_matrix_is_reported() {
        let m = SparseMatrix::from_rows(2, vec![vec![(0, 1.0)], vec![(0, 2.0)]]).unwrap();
        assert!(matches!(LupFactors::factorize(&m), Err(Error::Singular(_))));
    }

    #[test]
    fn factorization_residual_on_random_systems() {
        for seed in 0..5 {
            let m = random_dominant(50, seed);
            let f = LupFactors::factorize(&m).unwrap();
            let err = reconstruction_error(&f, &m) / m.norm_max();
            assert!(err <= 1e-9, "seed {seed}: relative residual {err:e}");
        }
    }

    #[test]
    fn solve_residual_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for seed in 0..5 {
            let m = random_dominant(60, seed + 100);
            let f = LupFactors::factorize(&m).unwrap();
            let rhs: Vec<f64> = (0..60).map(|_| rng.random_range(-2.0..2.0)).collect();
            let c = f.solve(&rhs).unwrap();
            let mc = m.mul_vec(&c);
            let resid: f64 = mc
                .iter()
                .zip(&rhs)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(resid <= 1e-9 * (1.0 + norm_inf(&rhs)));
        }
    }

    #[test]
    fn replacing_a_row_with_itself_changes_nothing() {
        let m = random_dominant(20, 3);
        let f = LupFactors::factorize(&m).unwrap();
        let rhs: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let before = f.solve(&rhs).unwrap();
        let same = RowReplacement::new(7, m.row(7).clone());
        let updated = f.replace_row(&same).unwrap();
        let after = updated.solve(&rhs).unwrap();
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_row_replacement_matches_fresh_factorization() {
        // start from the unselected 1x1 system, flip to the linked row
        let m = SparseMatrix::from_rows(1, vec![vec![(0, 0.5)]]).unwrap();
        let f = LupFactors::factorize(&m).unwrap();
        let updated = f
            .replace_row(&RowReplacement::new(0, vec![(0, 0.6)]))
            .unwrap();
        let c = updated.solve(&[0.2]).unwrap();
        assert!((c[0] - 1.0 / 3.0).abs() < 1e-15);

        let fresh =
            LupFactors::factorize(&SparseMatrix::from_rows(1, vec![vec![(0, 0.6)]]).unwrap())
                .unwrap();
        assert_eq!(c, fresh.solve(&[0.2]).unwrap());
    }

    #[test]
    fn sequential_replacements_track_fresh_factorization() {
        let n = 50;
        let m = random_dominant(n, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut f = LupFactors::factorize(&m).unwrap();
        let rhs: Vec<f64> = (0..n).map(|i| ((i * 7) % 13) as f64 / 13.0).collect();
        for step in 0..20 {
            let z = rng.random_range(0..n);
            let mut row: SparseVec = (0..4)
                .map(|_| (rng.random_range(0..n), rng.random_range(-0.5..0.5)))
                .collect();
            row.push((z, 3.0 + rng.random::<f64>()));
            let replacement = RowReplacement::new(z, row);
            f = f.replace_row(&replacement).unwrap();

            let current = SparseMatrix::from_rows(n, f.represented_rows()).unwrap();
            let fresh = LupFactors::factorize(&current).unwrap();
            let got = f.solve(&rhs).unwrap();
            let want = fresh.solve(&rhs).unwrap();
            let diff: f64 = got
                .iter()
                .zip(&want)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(diff <= 1e-9, "step {step}: drift {diff:e}");
        }
    }

    #[test]
    fn reconstruction_holds_through_updates() {
        let m = random_dominant(12, 5);
        let mut f = LupFactors::factorize(&m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..6 {
            let z = rng.random_range(0..12);
            let mut row: SparseVec = vec![(z, 2.5 + rng.random::<f64>())];
            row.push(((z + 3) % 12, rng.random_range(-0.4..0.4)));
            f = f.replace_row(&RowReplacement::new(z, row)).unwrap();
        }
        let current = SparseMatrix::from_rows(12, f.represented_rows()).unwrap();
        let err = reconstruction_error(&f, &current) / current.norm_max();
        assert!(err <= 1e-9, "relative reconstruction error {err:e}");
    }

    #[test]
    fn refactor_policy_resets_update_count() {
        let m = random_dominant(16, 21);
        let policy = UpdatePolicy {
            refactor_after: 3,
            fill_ratio: 64.0,
        };
        let mut f = LupFactors::factorize_with(&m, policy).unwrap();
        let rhs: Vec<f64> = (0..16).map(|i| i as f64 * 0.1).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for step in 1..=8 {
            let z = rng.random_range(0..16);
            let row: SparseVec = vec![(z, 2.0 + rng.random::<f64>())];
            f = f.replace_row(&RowReplacement::new(z, row)).unwrap();
            assert!(f.update_count() <= 3, "step {step}");

            let current = SparseMatrix::from_rows(16, f.represented_rows()).unwrap();
            let fresh = LupFactors::factorize(&current).unwrap();
            let got = f.solve(&rhs).unwrap();
            let want = fresh.solve(&rhs).unwrap();
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn fill_growth_forces_refactorization() {
        let m = random_dominant(24, 9);
        let policy = UpdatePolicy {
            refactor_after: 1_000,
            fill_ratio: 1.05,
        };
        let mut f = LupFactors::factorize_with(&m, policy).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..6 {
            let z = rng.random_range(0..24);
            // dense-ish replacement rows blow straight through the bound
            let mut row: SparseVec = (0..24).map(|c| (c, rng.random_range(-0.2..0.2))).collect();
            row[z].1 = 4.0;
            f = f.replace_row(&RowReplacement::new(z, row)).unwrap();
            assert_eq!(f.update_count(), 0, "fill bound should refactorize");
            assert_eq!(f.fill_stats().eta_nnz, 0);
        }
    }

    #[test]
    fn singular_replacement_is_rejected() {
        let m = random_dominant(5, 33);
        let f = LupFactors::factorize(&m).unwrap();
        // zero row makes the matrix singular
        let err = f.replace_row(&RowReplacement::new(2, vec![])).unwrap_err();
        assert!(matches!(err, Error::Singular(_)));
    }

    #[test]
    fn factors_are_shareable_values() {
        fn assert_send_sync<T: Send + Sync + Clone>() {}
        assert_send_sync::<LupFactors>();
    }

    #[test]
    fn repeated_runs_are_bit_identical() {
        let m = random_dominant(30, 17);
        let rhs: Vec<f64> = (0..30).map(|i| (i as f64).cos()).collect();
        let a = LupFactors::factorize(&m).unwrap().solve(&rhs).unwrap();
        let b = LupFactors::factorize(&m).unwrap().solve(&rhs).unwrap();
        assert_eq!(a, b);
    }
}
