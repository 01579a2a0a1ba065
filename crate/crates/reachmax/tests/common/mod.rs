//! Shared fixtures and corpus generators for the integration suites.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use reachmax::chain::{ChainSpec, StateSet};
use reachmax::harness::{gen_synthetic, SynthParams};
use reachmax::tag_graph::TagGraph;

/// Single self-loop state: unlinked {1→1: 0.5, 1→exit: 0.5}, linked
/// {1→1: 0.4, 1→target: 0.2, 1→exit: 0.4}. Reach value of {1} is 1/3.
pub fn loop_chain() -> ChainSpec {
    ChainSpec::builder(1)
        .absorber("null")
        .target_absorber("sigma")
        .pi(vec![1.0])
        .unlinked_row(1, &[(1, 0.5)], &[("null", 0.5)])
        .linked_row(1, &[(1, 0.4)], &[("sigma", 0.2), ("null", 0.4)])
        .build()
        .unwrap()
}

/// Two-state path 1 → 2 → exit; every linked row jumps to the target.
pub fn path_chain() -> ChainSpec {
    ChainSpec::builder(2)
        .absorber("null")
        .target_absorber("sigma")
        .pi(vec![1.0, 0.0])
        .unlinked_row(1, &[(2, 1.0)], &[])
        .unlinked_row(2, &[], &[("null", 1.0)])
        .linked_row(1, &[], &[("sigma", 1.0)])
        .linked_row(2, &[], &[("sigma", 1.0)])
        .build()
        .unwrap()
}

/// One tag, one unit-weight item, escape 0.1, attachment weight 1.
pub fn tiny_tag_graph() -> TagGraph {
    let mut b = TagGraph::builder();
    b.add_edge("i1", "a", 1.0).unwrap();
    b.epsilon(0.1).sigma_weight(1.0);
    b.build().unwrap()
}

/// Random simple undirected graph on `n` nodes with no isolated vertices.
pub fn random_graph(n: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let p = 0.35;
    for u in 1..=n {
        for v in u + 1..=n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    // patch up isolated nodes with one random partner
    let mut degree = vec![0usize; n + 1];
    for &(u, v) in &edges {
        degree[u] += 1;
        degree[v] += 1;
    }
    for u in 1..=n {
        if degree[u] == 0 {
            let mut v = rng.random_range(1..=n - 1);
            if v >= u {
                v += 1;
            }
            edges.push((u.min(v), u.max(v)));
            degree[u] += 1;
            degree[v] += 1;
        }
    }
    edges
}

/// Every subset of `1..=n` with at most `max_size` members.
pub fn subsets_up_to(n: usize, max_size: usize) -> Vec<StateSet> {
    let mut out = vec![StateSet::new()];
    let mut frontier: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..max_size {
        let mut next = Vec::new();
        for base in &frontier {
            let start = base.last().map_or(1, |&l| l + 1);
            for z in start..=n {
                let mut grown = base.clone();
                grown.push(z);
                out.push(StateSet::from_slice(&grown));
                next.push(grown);
            }
        }
        frontier = next;
    }
    out
}

/// Random subset of `1..=n` with exactly `size` members.
pub fn random_subset(n: usize, size: usize, rng: &mut ChaCha8Rng) -> StateSet {
    let mut pool: Vec<usize> = (1..=n).collect();
    for i in 0..size.min(n) {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    StateSet::from_slice(&pool[..size.min(n)])
}

/// A state outside `selection`, assuming one exists.
pub fn random_outside(n: usize, selection: &StateSet, rng: &mut ChaCha8Rng) -> usize {
    loop {
        let z = rng.random_range(1..=n);
        if !selection.contains(z) {
            return z;
        }
    }
}

/// Small synthetic corpus graph for fold checks.
pub fn small_synth_graph(seed: u64) -> TagGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gen_synthetic(&SynthParams {
        n_items: rng.random_range(8..=50),
        n_tags: rng.random_range(3..=30),
        edges_per_item: rng.random_range(1..=3),
        weight_exponent: 1.5 + rng.random::<f64>(),
        seed,
    })
    .unwrap()
}
