//! Bipartite item-tag browsing model and its folded, tags-only chain.
//!
//! A browsing walk alternates between tags and items: from a tag it moves
//! to one of the tag's items with probability proportional to item weight;
//! from an item it moves to one of the item's tags uniformly, or leaves
//! the system with the escape probability. Attaching the new target item
//! to a tag inserts it into that tag's item list with weight `w` =
//! `sigma_weight` and renormalizes: writing `W` for the tag's item mass,
//! the tag jumps straight to the target with probability `w / (W + w)`
//! and its remaining transitions scale by `W / (W + w)`.
//!
//! Because walks start on tags and only tags are selectable, the chain
//! can be folded to tag states only: one folded step is a tag→item→tag
//! double step, and the objective value is unchanged.

use crate::chain::{ChainSpec, StateSet};
use crate::objective::eval_reach;
use crate::{Error, Result};

/// Absorber label for walks that leave the system.
pub const EXIT_LABEL: &str = "null";
/// Absorber label for the target item.
pub const TARGET_LABEL: &str = "sigma";

#[derive(Debug, Clone, PartialEq)]
struct Item {
    label: String,
    weight: f64,
}

/// Weighted bipartite item-tag structure plus the attachment parameters
/// for the new target item.
#[derive(Debug, Clone, PartialEq)]
pub struct TagGraph {
    items: Vec<Item>,
    tags: Vec<String>,
    /// Tag ids per item (sorted) with the raw edge weights, in parallel.
    item_tags: Vec<Vec<(usize, f64)>>,
    /// Item ids per tag, sorted.
    tag_items: Vec<Vec<usize>>,
    /// Optional direct item→item transitions.
    item_links: Vec<Vec<usize>>,
    epsilon: f64,
    sigma_weight: f64,
    /// Candidate tag ids, sorted.
    candidates: Vec<usize>,
    /// Ground-truth tags of the target item, in dataset order.
    true_tags: Vec<usize>,
    /// Initial distribution over tags.
    pi_tags: Vec<f64>,
}

impl TagGraph {
    pub fn builder() -> TagGraphBuilder {
        TagGraphBuilder::default()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn n_tags(&self) -> usize {
        self.tags.len()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sigma_weight(&self) -> f64 {
        self.sigma_weight
    }

    pub fn tag_label(&self, tag: usize) -> &str {
        &self.tags[tag]
    }

    pub fn tag_index(&self, label: &str) -> Option<usize> {
        self.tags.iter().position(|t| t == label)
    }

    pub fn item_label(&self, item: usize) -> &str {
        &self.items[item].label
    }

    pub fn item_weight(&self, item: usize) -> f64 {
        self.items[item].weight
    }

    /// Number of items carrying the tag.
    pub fn tag_degree(&self, tag: usize) -> usize {
        self.tag_items[tag].len()
    }

    /// Total item weight behind the tag.
    pub fn tag_mass(&self, tag: usize) -> f64 {
        self.tag_items[tag]
            .iter()
            .map(|&i| self.items[i].weight)
            .sum()
    }

    /// Probability of jumping straight to the target from a tag once the
    /// target is attached to it.
    pub fn link_prob(&self, tag: usize) -> f64 {
        let mass = self.tag_mass(tag);
        self.sigma_weight / (mass + self.sigma_weight)
    }

    /// Candidate tag ids, sorted.
    pub fn candidates(&self) -> &[usize] {
        &self.candidates
    }

    /// Candidate tags as folded-chain states (tag `t` is state `t + 1`).
    pub fn candidate_states(&self) -> StateSet {
        self.candidates.iter().map(|&t| t + 1).collect()
    }

    pub fn true_tags(&self) -> &[usize] {
        &self.true_tags
    }

    pub fn pi_tags(&self) -> &[f64] {
        &self.pi_tags
    }

    pub fn set_pi_tags(&mut self, pi: Vec<f64>) -> Result<()> {
        if pi.len() != self.tags.len() {
            return Err(Error::DimensionMismatch(format!(
                "pi has {} entries for {} tags",
                pi.len(),
                self.tags.len()
            )));
        }
        let sum: f64 = pi.iter().sum();
        if (sum - 1.0).abs() > crate::chain::ROW_SUM_TOL || pi.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidGraph(format!(
                "pi must be a distribution over tags (sum {sum})"
            )));
        }
        self.pi_tags = pi;
        Ok(())
    }

    /// Edges as (item label, tag label, weight), in item-major order.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, f64)> + '_ {
        self.item_tags
            .iter()
            .enumerate()
            .flat_map(move |(i, tags)| {
                tags.iter()
                    .map(move |&(t, w)| (self.items[i].label.as_str(), self.tags[t].as_str(), w))
            })
    }

    pub fn has_item_links(&self) -> bool {
        self.item_links.iter().any(|l| !l.is_empty())
    }

    /// Full chain over tag states `1..=n_tags` followed by item states.
    /// Candidate tags get a linked row that splices the target into their
    /// item list; the entry-wise dominance between the two rows holds by
    /// construction.
    pub fn build_bipartite(&self) -> Result<ChainSpec> {
        let n_tags = self.tags.len();
        let n = n_tags + self.items.len();
        let mut pi = vec![0.0; n];
        pi[..n_tags].copy_from_slice(&self.pi_tags);
        let mut builder = ChainSpec::builder(n)
            .absorber(EXIT_LABEL)
            .target_absorber(TARGET_LABEL)
            .pi(pi);

        for (t, items) in self.tag_items.iter().enumerate() {
            let mass = self.tag_mass(t);
            let unlinked: Vec<(usize, f64)> = items
                .iter()
                .map(|&i| (n_tags + i + 1, self.items[i].weight / mass))
                .collect();
            builder = builder.unlinked_row(t + 1, &unlinked, &[]);
            if self.candidates.binary_search(&t).is_ok() {
                let attached = mass + self.sigma_weight;
                let linked: Vec<(usize, f64)> = items
                    .iter()
                    .map(|&i| (n_tags + i + 1, self.items[i].weight / attached))
                    .collect();
                builder = builder.linked_row(
                    t + 1,
                    &linked,
                    &[(TARGET_LABEL, self.sigma_weight / attached)],
                );
            }
        }

        for (i, tags) in self.item_tags.iter().enumerate() {
            let out_degree = tags.len() + self.item_links[i].len();
            let share = (1.0 - self.epsilon) / out_degree as f64;
            let mut row: Vec<(usize, f64)> = tags.iter().map(|&(t, _)| (t + 1, share)).collect();
            row.extend(self.item_links[i].iter().map(|&j| (n_tags + j + 1, share)));
            builder = builder.unlinked_row(n_tags + i + 1, &row, &[(EXIT_LABEL, self.epsilon)]);
        }

        builder.build()
    }

    /// Tags-only chain: one step realizes the tag→item→tag double step of
    /// the full chain, with the target column carrying the attachment
    /// probability. Requires a strictly bipartite graph.
    pub fn fold(&self) -> Result<FoldedChain> {
        if self.has_item_links() {
            return Err(Error::InvalidGraph(
                "folding requires a strictly bipartite graph (direct item links present)".into(),
            ));
        }
        let n_tags = self.tags.len();
        let mut builder = ChainSpec::builder(n_tags)
            .absorber(EXIT_LABEL)
            .target_absorber(TARGET_LABEL)
            .pi(self.pi_tags.clone());

        for (t, items) in self.tag_items.iter().enumerate() {
            let mass = self.tag_mass(t);
            // accumulate the double step tag -> item -> tag
            let mut to_tags = vec![0.0; n_tags];
            let mut to_exit = 0.0;
            for &i in items {
                let hop = self.items[i].weight / mass;
                let share = (1.0 - self.epsilon) / self.item_tags[i].len() as f64;
                for &(t2, _) in &self.item_tags[i] {
                    to_tags[t2] += hop * share;
                }
                to_exit += hop * self.epsilon;
            }
            let unlinked: Vec<(usize, f64)> = to_tags
                .iter()
                .enumerate()
                .filter(|&(_, &v)| v > 0.0)
                .map(|(t2, &v)| (t2 + 1, v))
                .collect();
            builder = builder.unlinked_row(t + 1, &unlinked, &[(EXIT_LABEL, to_exit)]);

            if self.candidates.binary_search(&t).is_ok() {
                // attachment scales every existing transition uniformly
                let scale = mass / (mass + self.sigma_weight);
                let linked: Vec<(usize, f64)> =
                    unlinked.iter().map(|&(t2, v)| (t2, v * scale)).collect();
                builder = builder.linked_row(
                    t + 1,
                    &linked,
                    &[
                        (EXIT_LABEL, to_exit * scale),
                        (TARGET_LABEL, self.sigma_weight / (mass + self.sigma_weight)),
                    ],
                );
            }
        }

        Ok(FoldedChain {
            spec: builder.build()?,
            tags: self.tags.clone(),
            candidates: self.candidate_states(),
        })
    }
}

/// The folded, tags-only chain with its label bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldedChain {
    pub spec: ChainSpec,
    tags: Vec<String>,
    candidates: StateSet,
}

impl FoldedChain {
    pub fn n_tags(&self) -> usize {
        self.tags.len()
    }

    /// Folded state for a tag label.
    pub fn tag_state(&self, label: &str) -> Option<usize> {
        self.tags.iter().position(|t| t == label).map(|t| t + 1)
    }

    pub fn state_label(&self, state: usize) -> &str {
        &self.tags[state - 1]
    }

    pub fn candidates(&self) -> &StateSet {
        &self.candidates
    }
}

/// Objective value on both representations of the same selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldCheck {
    pub f_folded: f64,
    pub f_full: f64,
    pub diff: f64,
}

/// Evaluates the selection on the folded chain and on the full bipartite
/// chain (tag states share indices in both).
pub fn fold_equivalence_check(graph: &TagGraph, selection: &StateSet) -> Result<FoldCheck> {
    let folded = graph.fold()?;
    let full = graph.build_bipartite()?;
    let f_folded = eval_reach(&folded.spec, selection)?.f;
    let f_full = eval_reach(&full, selection)?.f;
    Ok(FoldCheck {
        f_folded,
        f_full,
        diff: (f_folded - f_full).abs(),
    })
}

/// Accumulates edges and directives into a validated [`TagGraph`].
#[derive(Debug, Default)]
pub struct TagGraphBuilder {
    items: Vec<Item>,
    tags: Vec<String>,
    item_tags: Vec<Vec<(usize, f64)>>,
    tag_items: Vec<Vec<usize>>,
    item_links: Vec<Vec<usize>>,
    epsilon: Option<f64>,
    sigma_weight: Option<f64>,
    candidates: Option<Vec<String>>,
    true_tags: Vec<String>,
    errors: Vec<String>,
}

impl TagGraphBuilder {
    fn item_id(&mut self, label: &str) -> usize {
        match self.items.iter().position(|i| i.label == label) {
            Some(i) => i,
            None => {
                self.items.push(Item {
                    label: label.to_string(),
                    weight: 0.0,
                });
                self.item_tags.push(Vec::new());
                self.item_links.push(Vec::new());
                self.items.len() - 1
            }
        }
    }

    fn tag_id(&mut self, label: &str) -> usize {
        match self.tags.iter().position(|t| t == label) {
            Some(t) => t,
            None => {
                self.tags.push(label.to_string());
                self.tag_items.push(Vec::new());
                self.tags.len() - 1
            }
        }
    }

    /// Adds one weighted incidence edge. The item's weight is the sum of
    /// its edge weights.
    pub fn add_edge(&mut self, item: &str, tag: &str, weight: f64) -> Result<()> {
        if !weight.is_finite() || weight <= 0.0 {
            return Err(Error::InvalidGraph(format!(
                "edge {item} - {tag} has non-positive weight {weight}"
            )));
        }
        let i = self.item_id(item);
        let t = self.tag_id(tag);
        if self.item_tags[i].iter().any(|&(t2, _)| t2 == t) {
            return Err(Error::DuplicateEdge {
                item: item.to_string(),
                tag: tag.to_string(),
            });
        }
        self.item_tags[i].push((t, weight));
        self.tag_items[t].push(i);
        self.items[i].weight += weight;
        Ok(())
    }

    /// Adds a direct item→item transition (both items must already have
    /// at least one edge).
    pub fn add_item_link(&mut self, from: &str, to: &str) -> Result<()> {
        let a = self
            .items
            .iter()
            .position(|i| i.label == from)
            .ok_or_else(|| Error::InvalidGraph(format!("unknown item {from}")))?;
        let b = self
            .items
            .iter()
            .position(|i| i.label == to)
            .ok_or_else(|| Error::InvalidGraph(format!("unknown item {to}")))?;
        self.item_links[a].push(b);
        Ok(())
    }

    pub fn epsilon(&mut self, epsilon: f64) -> &mut Self {
        self.epsilon = Some(epsilon);
        self
    }

    pub fn sigma_weight(&mut self, weight: f64) -> &mut Self {
        self.sigma_weight = Some(weight);
        self
    }

    pub fn candidates(&mut self, labels: &[String]) -> &mut Self {
        self.candidates = Some(labels.to_vec());
        self
    }

    pub fn true_tags(&mut self, labels: &[String]) -> &mut Self {
        self.true_tags = labels.to_vec();
        self
    }

    pub fn build(mut self) -> Result<TagGraph> {
        if !self.errors.is_empty() {
            return Err(Error::InvalidGraph(self.errors.join("; ")));
        }
        if self.items.is_empty() || self.tags.is_empty() {
            return Err(Error::InvalidGraph("graph needs at least one edge".into()));
        }
        let epsilon = self.epsilon.unwrap_or(0.1);
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidGraph(format!(
                "epsilon {epsilon} outside (0, 1)"
            )));
        }
        let sigma_weight = match self.sigma_weight {
            Some(w) if w > 0.0 => w,
            Some(w) => {
                return Err(Error::InvalidGraph(format!(
                    "sigma weight {w} must be positive"
                )))
            }
            None => median_weight(&self.items),
        };

        let candidates: Vec<usize> = match &self.candidates {
            Some(labels) => {
                let mut ids = Vec::with_capacity(labels.len());
                for label in labels {
                    let t = self.tags.iter().position(|t| t == label).ok_or_else(|| {
                        Error::InvalidGraph(format!("unknown candidate tag {label}"))
                    })?;
                    ids.push(t);
                }
                ids.sort_unstable();
                ids.dedup();
                ids
            }
            None => (0..self.tags.len()).collect(),
        };
        if candidates.is_empty() {
            return Err(Error::InvalidGraph("no candidate tags".into()));
        }

        let mut true_ids = Vec::with_capacity(self.true_tags.len());
        for label in &self.true_tags {
            let t = self
                .tags
                .iter()
                .position(|t| t == label)
                .ok_or_else(|| Error::InvalidGraph(format!("unknown true tag {label}")))?;
            true_ids.push(t);
        }

        let mut pi_tags = vec![0.0; self.tags.len()];
        let share = 1.0 / candidates.len() as f64;
        for &t in &candidates {
            pi_tags[t] = share;
        }

        for tags in &mut self.item_tags {
            tags.sort_by_key(|&(t, _)| t);
        }
        for items in &mut self.tag_items {
            items.sort_unstable();
        }

        Ok(TagGraph {
            items: self.items,
            tags: self.tags,
            item_tags: self.item_tags,
            tag_items: self.tag_items,
            item_links: self.item_links,
            epsilon,
            sigma_weight,
            candidates,
            true_tags: true_ids,
            pi_tags,
        })
    }
}

fn median_weight(items: &[Item]) -> f64 {
    let mut weights: Vec<f64> = items.iter().map(|i| i.weight).collect();
    weights.sort_by(f64::total_cmp);
    let mid = weights.len() / 2;
    if weights.len() % 2 == 1 {
        weights[mid]
    } else {
        0.5 * (weights[mid - 1] + weights[mid])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// One tag, one unit-weight item, escape 0.1, attachment weight 1.
    fn tiny_graph() -> TagGraph {
        let mut b = TagGraph::builder();
        b.add_edge("i1", "a", 1.0).unwrap();
        b.epsilon(0.1).sigma_weight(1.0);
        b.build().unwrap()
    }

    fn row_as_map(row: &crate::chain::Row) -> (Vec<(usize, f64)>, Vec<(usize, f64)>) {
        (row.transient.clone(), row.absorbing.clone())
    }

    #[test]
    fn attachment_renormalizes_the_tag_row() {
        let g = tiny_graph();
        let chain = g.build_bipartite().unwrap();
        // state 1 = tag a, state 2 = the item
        let (t, a) = row_as_map(chain.unlinked_row(1));
        assert_eq!(t, vec![(2, 1.0)]);
        assert!(a.is_empty());
        let (t, a) = row_as_map(chain.linked_row(1));
        assert_eq!(t, vec![(2, 0.5)]);
        assert_eq!(a, vec![(chain.target_index(), 0.5)]);
        assert!(chain.validate().is_clean());
    }

    #[test]
    fn items_split_escape_and_tag_shares() {
        let mut b = TagGraph::builder();
        b.add_edge("i1", "a", 1.0).unwrap();
        b.add_edge("i1", "b", 1.0).unwrap();
        b.epsilon(0.1);
        let g = b.build().unwrap();
        let chain = g.build_bipartite().unwrap();
        // item state comes after the two tags
        let row = chain.unlinked_row(3);
        assert_eq!(row.transient, vec![(1, 0.45), (2, 0.45)]);
        assert_eq!(row.absorbing_prob(0), 0.1);
    }

    #[test]
    fn item_weight_is_the_sum_of_edge_weights() {
        let mut b = TagGraph::builder();
        b.add_edge("i1", "a", 2.0).unwrap();
        b.add_edge("i1", "b", 3.0).unwrap();
        b.add_edge("i2", "a", 5.0).unwrap();
        let g = b.build().unwrap();
        assert_eq!(g.item_weight(0), 5.0);
        assert_eq!(g.tag_mass(0), 10.0);
        // tag a sends walks to items proportionally: 5/10 each
        let chain = g.build_bipartite().unwrap();
        let row = chain.unlinked_row(1);
        assert_eq!(row.transient, vec![(3, 0.5), (4, 0.5)]);
    }

    #[test]
    fn duplicate_edges_are_rejected() {
        let mut b = TagGraph::builder();
        b.add_edge("i1", "a", 1.0).unwrap();
        let err = b.add_edge("i1", "a", 2.0).unwrap_err();
        assert!(matches!(err, Error::DuplicateEdge { .. }));
    }

    #[test]
    fn empty_graphs_are_rejected() {
        assert!(TagGraph::builder().build().is_err());
    }

    #[test]
    fn fold_of_tiny_graph() {
        let g = tiny_graph();
        let folded = g.fold().unwrap();
        let spec = &folded.spec;
        assert_eq!(spec.n_transient(), 1);
        // unselected: stay with 0.9, leave with 0.1, never reach the target
        let row = spec.unlinked_row(1);
        assert_eq!(row.transient, vec![(1, 0.9)]);
        assert!((row.absorbing_prob(0) - 0.1).abs() < 1e-15);
        assert_eq!(row.absorbing_prob(spec.target_index()), 0.0);
        let f0 = eval_reach(spec, &StateSet::new()).unwrap().f;
        assert_eq!(f0, 0.0);
        // selected: geometric absorption 0.5 / (1 - 0.45)
        let f1 = eval_reach(spec, &StateSet::from_slice(&[1])).unwrap().f;
        assert!((f1 - 0.9090909090909091).abs() < 1e-12, "f = {f1}");
        assert!(spec.validate().is_clean());
    }

    #[test]
    fn selection_swaps_mass_onto_the_target_row_wise() {
        let mut b = TagGraph::builder();
        b.add_edge("i1", "a", 2.0).unwrap();
        b.add_edge("i2", "a", 2.0).unwrap();
        b.add_edge("i1", "b", 1.0).unwrap();
        b.epsilon(0.2).sigma_weight(4.0);
        let g = b.build().unwrap();
        let folded = g.fold().unwrap();
        let spec = &folded.spec;
        let state = folded.tag_state("a").unwrap();
        let mass = g.tag_mass(0);
        let scale = mass / (mass + 4.0);
        let unlinked = spec.unlinked_row(state);
        let linked = spec.linked_row(state);
        assert_eq!(unlinked.absorbing_prob(spec.target_index()), 0.0);
        assert!((linked.absorbing_prob(spec.target_index()) - 4.0 / (mass + 4.0)).abs() < 1e-15);
        for (&(ju, vu), &(jl, vl)) in unlinked.transient.iter().zip(&linked.transient) {
            assert_eq!(ju, jl);
            assert!((vl - vu * scale).abs() < 1e-15);
        }
    }

    #[test]
    fn folding_preserves_the_objective() {
        let mut b = TagGraph::builder();
        b.add_edge("i1", "a", 1.0).unwrap();
        b.add_edge("i1", "b", 2.0).unwrap();
        b.add_edge("i2", "b", 1.5).unwrap();
        b.add_edge("i2", "c", 1.0).unwrap();
        b.add_edge("i3", "a", 0.5).unwrap();
        b.epsilon(0.15);
        let g = b.build().unwrap();
        for sel in [vec![], vec![1], vec![2], vec![1, 3], vec![1, 2, 3]] {
            let check = fold_equivalence_check(&g, &StateSet::from_slice(&sel)).unwrap();
            assert!(
                check.diff <= 1e-10,
                "selection {sel:?}: folded {} vs full {}",
                check.f_folded,
                check.f_full
            );
        }
    }

    #[test]
    fn item_links_block_folding_but_not_the_full_build() {
        let mut b = TagGraph::builder();
        b.add_edge("i1", "a", 1.0).unwrap();
        b.add_edge("i2", "a", 1.0).unwrap();
        b.add_item_link("i1", "i2").unwrap();
        let g = b.build().unwrap();
        assert!(g.fold().is_err());
        let chain = g.build_bipartite().unwrap();
        assert!(chain.validate().is_clean());
        // i1 now splits its non-escape mass between tag a and item i2
        let row = chain.unlinked_row(2);
        assert_eq!(row.transient.len(), 2);
    }

    #[test]
    fn sigma_weight_defaults_to_the_median_item_weight() {
        let mut b = TagGraph::builder();
        b.add_edge("i1", "a", 1.0).unwrap();
        b.add_edge("i2", "a", 3.0).unwrap();
        b.add_edge("i3", "a", 10.0).unwrap();
        let g = b.build().unwrap();
        assert_eq!(g.sigma_weight(), 3.0);
    }

    #[test]
    fn candidates_default_to_all_tags_with_uniform_pi() {
        let mut b = TagGraph::builder();
        b.add_edge("i1", "a", 1.0).unwrap();
        b.add_edge("i2", "b", 1.0).unwrap();
        let g = b.build().unwrap();
        assert_eq!(g.candidates(), &[0, 1]);
        assert_eq!(g.pi_tags(), &[0.5, 0.5]);
    }
}
