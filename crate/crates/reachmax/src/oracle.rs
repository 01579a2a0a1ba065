//! Independent ground truth for everything the optimizer computes:
//! a dense Gaussian-elimination solver that shares no code with the
//! sparse LU path, Monte Carlo walkers, exhaustive subset search, and
//! vertex-cover instance generators whose absorption probabilities have
//! closed-form thresholds.

use rayon::prelude::*;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chain::{ChainSpec, StateSet};
use crate::{Error, Result};

const DENSE_PIVOT_TOL: f64 = 1e-12;

/// Dense partial-pivoting Gaussian elimination; the reference solver.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let mut pivot = col;
        for r in col + 1..n {
            if a[r][col].abs() > a[pivot][col].abs() {
                pivot = r;
            }
        }
        if a[pivot][col].abs() < DENSE_PIVOT_TOL {
            return Err(Error::Singular(format!("dense pivot {col} vanished")));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..n {
            let factor = a[r][col] / a[col][col];
            if factor != 0.0 {
                for c in col..n {
                    a[r][c] -= factor * a[col][c];
                }
                b[r] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in r + 1..n {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    Ok(x)
}

/// Per-state reach probabilities by dense elimination.
pub fn dense_solve_c(spec: &ChainSpec, selection: &StateSet) -> Result<Vec<f64>> {
    let asm = spec.assemble(selection)?;
    let n = asm.n();
    let mut dense = vec![vec![0.0; n]; n];
    for (i, row) in dense.iter_mut().enumerate() {
        row[i] = 1.0;
        for &(j, v) in asm.a.row(i) {
            row[j] -= v;
        }
    }
    dense_solve(dense, asm.b.clone())
}

/// The reach objective by dense elimination.
pub fn dense_solve_f(spec: &ChainSpec, selection: &StateSet) -> Result<f64> {
    let c = dense_solve_c(spec, selection)?;
    Ok(spec.pi().iter().zip(&c).map(|(&p, &ci)| p * ci).sum())
}

/// Monte Carlo estimate of the reach probability.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub n_walks: usize,
    pub horizon: usize,
    pub seed: u64,
}

/// Default walk horizon for a chain with `n` transient states.
pub fn default_horizon(n: usize) -> usize {
    100 * n
}

enum Step {
    Move(usize),
    AbsorbTarget,
    AbsorbOther,
}

/// Simulates `n_walks` random walks from the initial distribution under
/// the assembled chain and counts absorptions at the target before the
/// horizon. Walks that outlive the horizon count as misses, which biases
/// the estimate downward; with geometric absorption the residual mass at
/// the default horizon is negligible.
///
/// Walks are partitioned into fixed-size blocks, each driven by its own
/// counter-based stream of the seeded generator, so the result does not
/// depend on how many workers run the blocks.
pub fn monte_carlo_f(
    spec: &ChainSpec,
    selection: &StateSet,
    n_walks: usize,
    horizon: usize,
    seed: u64,
) -> Result<McEstimate> {
    assert!(n_walks >= 1, "monte_carlo_f needs at least one walk");
    let asm = spec.assemble(selection)?;
    let n = asm.n();

    // cumulative transition tables per state
    let mut tables: Vec<Vec<(f64, Step)>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = 0.0;
        let mut table = Vec::new();
        for &(j, v) in asm.a.row(i) {
            if v > 0.0 {
                acc += v;
                table.push((acc, Step::Move(j)));
            }
        }
        if asm.b[i] > 0.0 {
            acc += asm.b[i];
            table.push((acc, Step::AbsorbTarget));
        }
        if asm.b_other[i] > 0.0 {
            acc += asm.b_other[i];
            table.push((acc, Step::AbsorbOther));
        }
        tables.push(table);
    }
    let mut pi_cum = Vec::with_capacity(n);
    let mut acc = 0.0;
    for (i, &p) in spec.pi().iter().enumerate() {
        if p > 0.0 {
            acc += p;
            pi_cum.push((acc, i));
        }
    }

    let pick = |cum: &[(f64, usize)], u: f64| -> usize {
        cum.iter()
            .find(|&&(threshold, _)| u < threshold)
            .map(|&(_, i)| i)
            .unwrap_or(cum.last().expect("nonempty distribution").1)
    };

    const BLOCK: usize = 4096;
    let blocks = n_walks.div_ceil(BLOCK);
    let successes: usize = (0..blocks)
        .into_par_iter()
        .map(|block| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(block as u64 + 1);
            let walks = BLOCK.min(n_walks - block * BLOCK);
            let mut hits = 0usize;
            for _ in 0..walks {
                let mut state = pick(&pi_cum, rng.random::<f64>());
                for _ in 0..horizon {
                    let table = &tables[state];
                    let u = rng.random::<f64>();
                    let step = table
                        .iter()
                        .find(|&&(threshold, _)| u < threshold)
                        .map(|(_, s)| s)
                        .unwrap_or_else(|| &table.last().expect("row has outgoing mass").1);
                    match step {
                        Step::Move(j) => state = *j,
                        Step::AbsorbTarget => {
                            hits += 1;
                            break;
                        }
                        Step::AbsorbOther => break,
                    }
                }
            }
            hits
        })
        .sum();

    let estimate = successes as f64 / n_walks as f64;
    let std_error = (estimate * (1.0 - estimate) / n_walks as f64).sqrt();
    Ok(McEstimate {
        estimate,
        std_error,
        n_walks,
        horizon,
        seed,
    })
}

/// Hard cap on the number of subsets [`exhaustive_opt`] will enumerate.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut out: u128 = 1;
    for i in 0..k {
        out = out * (n - i) as u128 / (i + 1) as u128;
    }
    out
}

/// True optimum by enumerating every `k`-subset against the dense solver.
/// Ties resolve to the lexicographically smallest subset.
pub fn exhaustive_opt(spec: &ChainSpec, k: usize) -> Result<(StateSet, f64)> {
    let n = spec.n_transient();
    if k == 0 || k > n {
        return Err(Error::InvalidBudget { k, n });
    }
    let count = binomial(n, k);
    if count > ENUMERATION_LIMIT {
        return Err(Error::CombinatorialLimit {
            count,
            limit: ENUMERATION_LIMIT,
        });
    }

    let mut best: Option<(StateSet, f64)> = None;
    let mut subset: Vec<usize> = (1..=k).collect();
    loop {
        let s = StateSet::from_slice(&subset);
        let f = dense_solve_f(spec, &s)?;
        match &best {
            Some((_, best_f)) if f <= *best_f => {}
            _ => best = Some((s, f)),
        }
        // next subset in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(best.expect("at least one subset was scored"));
            }
            i -= 1;
            if subset[i] < n - (k - 1 - i) {
                subset[i] += 1;
                for j in i + 1..k {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// A vertex-cover reduction instance: the source graph plus the two
/// generated chains whose absorption probability separates covers from
/// non-covers at an exact threshold.
#[derive(Debug, Clone)]
pub struct VcInstance {
    pub n_nodes: usize,
    /// Undirected edges, normalized to `u < v`.
    pub edges: Vec<(usize, usize)>,
    pub epsilon: f64,
    /// One transient state per node.
    pub chain: ChainSpec,
    /// Bipartite variant: a tag state per node and an item state per edge
    /// direction; walks go tag → edge item → opposite tag.
    pub bipartite: ChainSpec,
}

impl VcInstance {
    /// Reach probability a cover of size `k` attains; non-covers fall
    /// strictly short of it.
    pub fn threshold(&self, k: usize) -> f64 {
        vc_threshold(self.n_nodes, k, self.epsilon)
    }

    /// Whether the node subset touches every edge.
    pub fn is_cover(&self, nodes: &StateSet) -> bool {
        self.edges
            .iter()
            .all(|&(u, v)| nodes.contains(u) || nodes.contains(v))
    }
}

/// `1 - ((n - k) / n) * epsilon`: the absorption probability of a size-`k`
/// vertex cover in the generated instances.
pub fn vc_threshold(n: usize, k: usize, epsilon: f64) -> f64 {
    1.0 - ((n - k) as f64 / n as f64) * epsilon
}

/// Builds an optimization instance from a simple undirected graph.
///
/// In the node chain, selecting a state rewires it straight to the
/// target; unselected nodes walk to a uniform neighbor with probability
/// `1 - epsilon` and escape to the competing absorber with `epsilon`.
pub fn gen_vertex_cover_instance(edges: &[(usize, usize)], epsilon: f64) -> Result<VcInstance> {
    if !(0.0..1.0).contains(&epsilon) || epsilon <= 0.0 {
        return Err(Error::InvalidGraph(format!(
            "epsilon {epsilon} outside (0, 1)"
        )));
    }
    if edges.is_empty() {
        return Err(Error::InvalidGraph("graph has no edges".into()));
    }
    let mut normalized: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
    let mut n_nodes = 0;
    for &(u, v) in edges {
        if u == v {
            return Err(Error::InvalidGraph(format!("self loop at node {u}")));
        }
        if u == 0 || v == 0 {
            return Err(Error::InvalidGraph("nodes are numbered from 1".into()));
        }
        normalized.push((u.min(v), u.max(v)));
        n_nodes = n_nodes.max(u).max(v);
    }
    normalized.sort_unstable();
    normalized.dedup();

    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n_nodes + 1];
    for &(u, v) in &normalized {
        neighbors[u].push(v);
        neighbors[v].push(u);
    }
    for (node, adj) in neighbors.iter_mut().enumerate().skip(1) {
        if adj.is_empty() {
            return Err(Error::InvalidGraph(format!("node {node} is isolated")));
        }
        adj.sort_unstable();
    }

    // node chain
    let uniform = vec![1.0 / n_nodes as f64; n_nodes];
    let mut builder = ChainSpec::builder(n_nodes)
        .absorber("null")
        .target_absorber("sigma")
        .pi(uniform.clone());
    for i in 1..=n_nodes {
        let share = (1.0 - epsilon) / neighbors[i].len() as f64;
        let transient: Vec<(usize, f64)> = neighbors[i].iter().map(|&j| (j, share)).collect();
        builder = builder
            .unlinked_row(i, &transient, &[("null", epsilon)])
            .linked_row(i, &[], &[("sigma", 1.0)]);
    }
    let chain = builder.build()?;

    // bipartite variant: node tags first, then an item per edge direction
    let mut arcs: Vec<(usize, usize)> = Vec::with_capacity(2 * normalized.len());
    for i in 1..=n_nodes {
        for &j in &neighbors[i] {
            arcs.push((i, j));
        }
    }
    let n_states = n_nodes + arcs.len();
    let mut pi = vec![0.0; n_states];
    pi[..n_nodes].copy_from_slice(&uniform);
    let mut builder = ChainSpec::builder(n_states)
        .absorber("null")
        .target_absorber("sigma")
        .pi(pi);
    for i in 1..=n_nodes {
        let share = 1.0 / neighbors[i].len() as f64;
        let transient: Vec<(usize, f64)> = arcs
            .iter()
            .enumerate()
            .filter(|&(_, &(from, _))| from == i)
            .map(|(a, _)| (n_nodes + a + 1, share))
            .collect();
        builder = builder
            .unlinked_row(i, &transient, &[])
            .linked_row(i, &[], &[("sigma", 1.0)]);
    }
    for (a, &(_, to)) in arcs.iter().enumerate() {
        builder = builder.unlinked_row(
            n_nodes + a + 1,
            &[(to, 1.0 - epsilon)],
            &[("null", epsilon)],
        );
    }
    let bipartite = builder.build()?;

    Ok(VcInstance {
        n_nodes,
        edges: normalized,
        epsilon,
        chain,
        bipartite,
    })
}

/// Shape controls for the random chain corpus.
#[derive(Debug, Clone, Copy)]
pub struct RandomChainOpts {
    /// Restrict transient targets of state `i` to `i ± band` when set;
    /// keeps factorization fill low for large corpus instances.
    pub band: Option<usize>,
    /// Fraction of states whose linked row equals their unlinked row.
    pub no_link_fraction: f64,
    /// Outgoing transient edges per state (before deduplication).
    pub degree: usize,
}

impl Default for RandomChainOpts {
    fn default() -> Self {
        Self {
            band: None,
            no_link_fraction: 0.3,
            degree: 3,
        }
    }
}

/// Deterministic random instance: every state keeps a positive escape
/// probability, so the chain is valid by construction, and linked rows
/// scale the unlinked row down to make room for the target mass.
pub fn random_chain_spec(n: usize, seed: u64) -> ChainSpec {
    random_chain_spec_with(n, seed, RandomChainOpts::default())
}

pub fn random_chain_spec_with(n: usize, seed: u64, opts: RandomChainOpts) -> ChainSpec {
    assert!(n >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pi_raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = pi_raw.iter().sum();
    for p in &mut pi_raw {
        *p /= total;
    }

    let mut builder = ChainSpec::builder(n)
        .absorber("null")
        .target_absorber("sigma")
        .pi(pi_raw);

    let mut any_linked = false;
    for i in 1..=n {
        let escape = rng.random_range(0.05..0.25);
        let mut targets: Vec<usize> = Vec::new();
        for _ in 0..opts.degree {
            let j = match opts.band {
                Some(b) => {
                    let lo = i.saturating_sub(b).max(1);
                    let hi = (i + b).min(n);
                    rng.random_range(lo..=hi)
                }
                None => rng.random_range(1..=n),
            };
            targets.push(j);
        }
        targets.sort_unstable();
        targets.dedup();
        let weights: Vec<f64> = targets.iter().map(|_| rng.random_range(0.1..1.0)).collect();
        let wsum: f64 = weights.iter().sum();
        let transient: Vec<(usize, f64)> = targets
            .iter()
            .zip(&weights)
            .map(|(&j, &w)| (j, (1.0 - escape) * w / wsum))
            .collect();
        builder = builder.unlinked_row(i, &transient, &[("null", escape)]);

        if rng.random::<f64>() >= opts.no_link_fraction || (i == n && !any_linked) {
            any_linked = true;
            let link = rng.random_range(0.05..0.95);
            let scaled: Vec<(usize, f64)> = transient
                .iter()
                .map(|&(j, v)| (j, v * (1.0 - link)))
                .collect();
            builder = builder.linked_row(
                i,
                &scaled,
                &[("null", escape * (1.0 - link)), ("sigma", link)],
            );
        }
    }
    let spec = builder
        .build()
        .expect("generated chain is structurally sound");
    debug_assert!(spec.validate().is_clean());
    spec
}
