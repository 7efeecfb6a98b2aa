//! Submerging entropy estimate (SEE).
//!
//! For a set of `M` vectors and a codebook, every class `j` contributes
//!
//! ```text
//! P_j * [ log2(1/P_j) + 1 + (|Δ_j| / count_j) * SEE(Δ_j) ]
//! ```
//!
//! where `P_j = count_j / M` and `Δ_j` holds the nonzero residuals of the
//! class. The estimate is the minimum of the sum over codebooks; sets with at
//! most one element cost 0. The `+ 1` is one stop bit per class.

mod events;
mod exhaustive;
mod greedy;

use serde_json::{json, Value};

use crate::error::Result;
use crate::vq::{distance, Assignment, Codebook, VectorSet};

pub use events::{auto_generative_entropy, EventGroup};
pub use greedy::{greedy_level, greedy_minimize, LevelChoice};

/// Default recursion depth cap.
pub const DEFAULT_DEPTH_CAP: usize = 16;
/// Default cap on the set size accepted by the exhaustive minimizer.
pub const DEFAULT_EXHAUSTIVE_CAP: usize = 8;
/// Default upper bound of the greedy codebook-size scan.
pub const DEFAULT_GREEDY_MAX_CODEBOOK: usize = 16;
/// Zero-residual threshold used for non-integer data when none is configured.
pub const REAL_DATA_ZERO_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Minimum over every non-empty subset of the set's distinct vectors.
    Exhaustive,
    /// One trained codebook per node, size chosen by a per-level bound.
    Greedy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeeConfig {
    pub strategy: Strategy,
    /// Levels kept. The tree is always minimized at full depth (up to
    /// `depth_cap`) and then pruned to this many levels.
    pub max_depth: Option<usize>,
    /// Greedy only: codebook size per level; the last entry repeats.
    pub per_level_codebook_sizes: Option<Vec<usize>>,
    /// Residuals with norm `<= tol` count as exact matches. `None` picks 0 for
    /// integer-valued sets and [`REAL_DATA_ZERO_TOLERANCE`] otherwise.
    pub zero_tolerance: Option<f64>,
    pub seed: u64,
    pub exhaustive_cap: usize,
    pub depth_cap: usize,
    pub greedy_max_codebook: usize,
    /// Exhaustive, scalar data only: also offer midpoints of adjacent values.
    pub include_midpoints: bool,
}

impl Default for SeeConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Greedy,
            max_depth: None,
            per_level_codebook_sizes: None,
            zero_tolerance: None,
            seed: 0,
            exhaustive_cap: DEFAULT_EXHAUSTIVE_CAP,
            depth_cap: DEFAULT_DEPTH_CAP,
            greedy_max_codebook: DEFAULT_GREEDY_MAX_CODEBOOK,
            include_midpoints: false,
        }
    }
}

impl SeeConfig {
    pub fn exhaustive() -> Self {
        Self { strategy: Strategy::Exhaustive, ..Self::default() }
    }

    pub fn greedy() -> Self {
        Self::default()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_depth(mut self, max_depth: Option<usize>) -> Self {
        self.max_depth = max_depth;
        self
    }

    pub(crate) fn tolerance_for(&self, set: &VectorSet) -> f64 {
        self.zero_tolerance.unwrap_or_else(|| {
            if set.as_flat().iter().all(|x| x.fract() == 0.0) {
                0.0
            } else {
                REAL_DATA_ZERO_TOLERANCE
            }
        })
    }
}

/// One class of a level: its codevector, population and nonzero residuals.
#[derive(Clone, Debug, PartialEq)]
pub struct SeeNode {
    pub codevector: Vec<f64>,
    pub count: usize,
    /// `count / set_size` of the enclosing tree.
    pub probability: f64,
    /// `|Δ|`, the number of members with a nonzero residual.
    pub residual_count: usize,
    /// This node's additive share of the enclosing tree's `total_bits`.
    pub info_bits: f64,
    /// Tree over the residual set `Δ`.
    pub children: SeeTree,
}

impl SeeNode {
    fn new(codevector: Vec<f64>, count: usize, set_size: usize, residual_count: usize, children: SeeTree) -> Self {
        let probability = count as f64 / set_size as f64;
        let info_bits = node_bits(probability, residual_count, set_size, children.total_bits);
        Self { codevector, count, probability, residual_count, info_bits, children }
    }

    pub fn residual_fraction(&self) -> f64 {
        self.residual_count as f64 / self.count as f64
    }
}

/// `P [log2(1/P) + 1] + (|Δ| / M) SEE(Δ)`, i.e. the summand with the
/// correcting factor `(1/P)(|Δ|/M) = |Δ|/count` multiplied through.
fn node_bits(probability: f64, residual_count: usize, set_size: usize, child_bits: f64) -> f64 {
    let own = probability * (-probability.log2() + 1.0);
    if residual_count == 0 {
        own
    } else {
        own + residual_count as f64 / set_size as f64 * child_bits
    }
}

/// The recursive entropy tree over a set of `set_size` vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct SeeTree {
    pub set_size: usize,
    pub nodes: Vec<SeeNode>,
    /// The estimate at this level: the sum of the nodes' `info_bits`.
    pub total_bits: f64,
    pub depth: usize,
}

impl SeeTree {
    pub fn empty(set_size: usize) -> Self {
        Self { set_size, nodes: Vec::new(), total_bits: 0.0, depth: 0 }
    }

    fn from_nodes(set_size: usize, nodes: Vec<SeeNode>) -> Self {
        let total_bits = nodes.iter().map(|n| n.info_bits).sum();
        let depth = nodes.iter().map(|n| n.children.depth + 1).max().unwrap_or(0);
        Self { set_size, nodes, total_bits, depth }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// The level cost with every recursion term dropped: `H(P) + 1` for a
    /// non-empty tree. Never exceeds `total_bits`.
    pub fn optimistic_bits(&self) -> f64 {
        self.nodes.iter().map(|n| n.probability * (-n.probability.log2() + 1.0)).sum()
    }

    /// Nodes per depth, breadth-first, parents' order preserved.
    pub fn levels(&self) -> Vec<Vec<&SeeNode>> {
        let mut levels = Vec::new();
        let mut current: Vec<&SeeNode> = self.nodes.iter().collect();
        while !current.is_empty() {
            let next = current.iter().flat_map(|n| n.children.nodes.iter()).collect();
            levels.push(current);
            current = next;
        }
        levels
    }

    /// Canonical JSON: node order preserved, probabilities as `"count/total"`.
    pub fn to_json(&self) -> Value {
        json!({
            "set_size": self.set_size,
            "total_bits": self.total_bits,
            "depth": self.depth,
            "nodes": self.nodes.iter().map(|n| json!({
                "codevector": n.codevector,
                "count": n.count,
                "probability": format!("{}/{}", n.count, self.set_size),
                "residual_count": n.residual_count,
                "info_bits": n.info_bits,
                "children": n.children.to_json(),
            })).collect::<Vec<_>>(),
        })
    }
}

/// `{v_i - v'_j : I(i) = j, ||v_i - v'_j|| > tol}`, in input order.
pub fn residual_set(
    set: &VectorSet,
    codebook: &Codebook,
    assignment: &Assignment,
    class: usize,
    tol: f64,
) -> VectorSet {
    residuals_of(set, codebook.get(class), assignment.members(class), tol)
}

fn residuals_of(set: &VectorSet, codevector: &[f64], members: impl Iterator<Item = usize>, tol: f64) -> VectorSet {
    let mut out = VectorSet::empty(set.dim(), set.value_bits()).expect("dimension already validated");
    for i in members {
        let v = set.get(i);
        if distance(v, codevector) > tol {
            let r: Vec<f64> = v.iter().zip(codevector).map(|(a, b)| a - b).collect();
            out.push(&r).expect("same dimension");
        }
    }
    out
}

/// A class of one level before recursion.
pub(crate) struct ClassSplit {
    pub codevector: Vec<f64>,
    pub count: usize,
    pub residuals: VectorSet,
}

pub(crate) fn split_classes(set: &VectorSet, rows: &[Vec<f64>], class_of: &[usize], tol: f64) -> Vec<ClassSplit> {
    rows.iter()
        .enumerate()
        .map(|(j, cv)| {
            let members: Vec<usize> = (0..set.len()).filter(|&i| class_of[i] == j).collect();
            ClassSplit {
                codevector: cv.clone(),
                count: members.len(),
                residuals: residuals_of(set, cv, members.into_iter(), tol),
            }
        })
        .collect()
}

/// Assembles a tree level from classes and their already-computed child trees.
pub(crate) fn assemble_level(set_size: usize, classes: Vec<ClassSplit>, children: Vec<SeeTree>) -> SeeTree {
    let nodes = classes
        .into_iter()
        .zip(children)
        .map(|(c, child)| SeeNode::new(c.codevector, c.count, set_size, c.residuals.len(), child))
        .collect();
    SeeTree::from_nodes(set_size, nodes)
}

/// Computes the estimate and its tree with the configured strategy.
///
/// Sets with at most one vector cost exactly 0 and yield an empty tree.
pub fn see_estimate(set: &VectorSet, config: &SeeConfig) -> Result<(f64, SeeTree)> {
    let tree = match config.strategy {
        Strategy::Exhaustive => exhaustive::exhaustive_minimize(set, config)?,
        Strategy::Greedy => greedy_minimize(set, config)?,
    };
    Ok((tree.total_bits, tree))
}

/// Truncates `tree` below `max_depth` levels. Returns the pruned tree and the
/// bits carried by the removed subtrees, so that
/// `pruned.total_bits + dropped == tree.total_bits`.
pub fn prune_tree(tree: &SeeTree, max_depth: usize) -> (SeeTree, f64) {
    (prune(tree, max_depth), dropped_bits(tree, max_depth))
}

fn prune(tree: &SeeTree, max_depth: usize) -> SeeTree {
    if max_depth == 0 {
        return SeeTree::empty(tree.set_size);
    }
    let nodes = tree
        .nodes
        .iter()
        .map(|n| {
            let children = prune(&n.children, max_depth - 1);
            SeeNode {
                info_bits: node_bits(n.probability, n.residual_count, tree.set_size, children.total_bits),
                children,
                codevector: n.codevector.clone(),
                ..*n
            }
        })
        .collect();
    SeeTree::from_nodes(tree.set_size, nodes)
}

fn dropped_bits(tree: &SeeTree, max_depth: usize) -> f64 {
    if max_depth == 0 {
        return tree.total_bits;
    }
    tree.nodes
        .iter()
        .filter(|n| n.residual_count > 0)
        .map(|n| n.residual_count as f64 / tree.set_size as f64 * dropped_bits(&n.children, max_depth - 1))
        .sum()
}

/// Bits to index a codebook of `n` entries plus the stop symbol:
/// `ceil(log2(n + 1))`.
pub fn index_width(n: usize) -> u32 {
    usize::BITS - n.leading_zeros()
}

/// Concrete storage estimate of a tree.
///
/// Level 0 indexes all `count` vectors; level `L > 0` indexes every vector
/// classified at level `L - 1` (continuing ones, or the stop symbol). Each
/// level costs `M_L * ceil(log2(N_L + 1))` index bits plus `P * k * N_L`
/// codebook bits, `N_L` being the number of nodes at depth `L`.
pub fn tree_storage_bits(tree: &SeeTree, value_bits: u32, dim: usize, count: usize) -> f64 {
    let mut total = 0.0;
    let mut entering = count;
    for level in tree.levels() {
        let n = level.len();
        total += entering as f64 * index_width(n) as f64 + value_bits as f64 * dim as f64 * n as f64;
        entering = level.iter().map(|node| node.count).sum();
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vq::classify_all;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn residual_set_examples() {
        let set = VectorSet::scalars(&[3.0, 9.0, 3.0, 5.0]);
        let book = Codebook::new(1, vec![3.0, 9.0]).unwrap();
        let asg = classify_all(&set, &book).unwrap();
        assert_eq!(residual_set(&set, &book, &asg, 0, 0.0).as_flat(), &[2.0]);
        assert!(residual_set(&set, &book, &asg, 1, 0.0).is_empty());
    }

    #[test]
    fn residual_set_matches_filter_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.random_range(0..6) as f64, rng.random_range(0..6) as f64]).collect();
        let set = VectorSet::from_rows(2, 8, &rows).unwrap();
        let book = Codebook::from_rows(2, &[vec![1.0, 1.0], vec![4.0, 4.0], vec![0.0, 5.0]]).unwrap();
        let asg = classify_all(&set, &book).unwrap();
        for j in 0..3 {
            let c = book.get(j);
            let mut oracle = Vec::new();
            for (i, r) in rows.iter().enumerate() {
                if asg.class_of(i) == j && (r[0] != c[0] || r[1] != c[1]) {
                    oracle.push(r[0] - c[0]);
                    oracle.push(r[1] - c[1]);
                }
            }
            assert_eq!(residual_set(&set, &book, &asg, j, 0.0).as_flat(), oracle.as_slice());
        }
    }

    #[test]
    fn tolerance_depends_on_data() {
        let cfg = SeeConfig::default();
        assert_eq!(cfg.tolerance_for(&VectorSet::scalars(&[1.0, 2.0])), 0.0);
        assert_eq!(cfg.tolerance_for(&VectorSet::scalars(&[1.5])), REAL_DATA_ZERO_TOLERANCE);
    }

    #[test]
    fn correcting_factor_forms_agree() {
        // (1/P)(|Δ|/M) against |Δ|/count
        for (count, m, delta) in [(3usize, 7usize, 2usize), (1, 1, 0), (5, 9, 5), (2, 100, 1)] {
            let p = count as f64 / m as f64;
            let factored = (1.0 / p) * (delta as f64 / m as f64);
            assert!((factored - delta as f64 / count as f64).abs() < 1e-12);
        }
    }

    fn exhaustive_tree(values: &[f64]) -> SeeTree {
        see_estimate(&VectorSet::scalars(values), &SeeConfig::exhaustive()).unwrap().1
    }

    #[test]
    fn prune_examples() {
        let tree = exhaustive_tree(&[0.0, 0.0, 4.0, 4.0, 9.0, 1.0, 7.0]);
        assert!(tree.depth >= 2);

        let (same, dropped) = prune_tree(&tree, tree.depth);
        assert_eq!(same, tree);
        assert_eq!(dropped, 0.0);

        let (empty, dropped) = prune_tree(&tree, 0);
        assert!(empty.is_empty());
        assert_eq!(dropped, tree.total_bits);

        for d in 1..tree.depth {
            let (pruned, dropped) = prune_tree(&tree, d);
            assert!((pruned.total_bits + dropped - tree.total_bits).abs() < 1e-9);
            assert_eq!(pruned.depth, d);
            let probs: Vec<f64> = pruned.nodes.iter().map(|n| n.probability).collect();
            let orig: Vec<f64> = tree.nodes.iter().map(|n| n.probability).collect();
            assert_eq!(probs, orig);
        }
    }

    #[test]
    fn storage_bits_examples() {
        assert_eq!(tree_storage_bits(&SeeTree::empty(0), 8, 1, 0), 0.0);

        // three classes, exact cover: M ceil(log2 4) + P k N
        let mut cfg = SeeConfig::greedy();
        cfg.per_level_codebook_sizes = Some(vec![3]);
        let tree = greedy_minimize(&VectorSet::scalars(&[1.0, 2.0, 3.0, 1.0, 2.0, 3.0]), &cfg).unwrap();
        assert_eq!(tree.depth, 1);
        let n = tree.nodes.len();
        let expected = 6.0 * index_width(n) as f64 + 8.0 * n as f64;
        assert_eq!(tree_storage_bits(&tree, 8, 1, 6), expected);
    }

    #[test]
    fn storage_bits_two_levels_match_walk() {
        let tree = exhaustive_tree(&[0.0, 0.0, 4.0, 4.0]);
        assert_eq!(tree.depth, 2);
        // walk: level 0 holds the root nodes, level 1 the grandchildren
        let n0 = tree.nodes.len();
        let n1: usize = tree.nodes.iter().map(|n| n.children.nodes.len()).sum();
        let m1: usize = tree.nodes.iter().map(|n| n.count).sum();
        let ceil_log2 = |x: usize| (x as f64).log2().ceil();
        let oracle = 4.0 * ceil_log2(n0 + 1) + 8.0 * n0 as f64 + m1 as f64 * ceil_log2(n1 + 1) + 8.0 * n1 as f64;
        assert_eq!(tree_storage_bits(&tree, 8, 1, 4), oracle);
    }

    #[test]
    fn index_width_is_ceil_log2_of_successor() {
        for n in 0..300usize {
            assert_eq!(index_width(n) as f64, ((n + 1) as f64).log2().ceil(), "n={n}");
        }
    }

    #[test]
    fn json_uses_count_ratios() {
        let tree = exhaustive_tree(&[0.0, 0.0, 4.0, 4.0]);
        let v = tree.to_json();
        assert_eq!(v["set_size"], 4);
        assert_eq!(v["nodes"][0]["probability"], "4/4");
        assert_eq!(v["nodes"][0]["children"]["nodes"][0]["probability"], "2/2");
    }
}
