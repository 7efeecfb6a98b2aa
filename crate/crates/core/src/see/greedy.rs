use rayon::prelude::*;

use super::{assemble_level, prune_tree, split_classes, ClassSplit, SeeConfig, SeeTree};
use crate::error::{Error, Result};
use crate::vq::{distinct_vectors, lex_cmp, shannon_entropy_bits, squared_distance, train_codebook, VectorSet};

/// The codebook picked for one node, with the nearest-neighbor classes.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelChoice {
    /// Codevectors, all drawn from the node's set, sorted lexicographically.
    pub rows: Vec<Vec<f64>>,
    pub class_of: Vec<usize>,
    /// The level cost plus the residual entropy bound used to rank sizes.
    pub bound_bits: f64,
}

/// Greedy tree: one codebook per node, chosen by [`greedy_level`], recursing
/// into every residual set, then pruned to `config.max_depth`.
pub fn greedy_minimize(set: &VectorSet, config: &SeeConfig) -> Result<SeeTree> {
    let tol = config.tolerance_for(set);
    let tree = grow(set, config, tol, 0)?;
    Ok(match config.max_depth {
        Some(d) => prune_tree(&tree, d).0,
        None => tree,
    })
}

fn grow(set: &VectorSet, config: &SeeConfig, tol: f64, depth: usize) -> Result<SeeTree> {
    if set.len() <= 1 {
        return Ok(SeeTree::empty(set.len()));
    }
    if depth >= config.depth_cap {
        return Err(Error::refused(format!("recursion depth cap {} exceeded", config.depth_cap)));
    }
    let choice = greedy_level(set, config, depth, tol)?;
    let classes = split_classes(set, &choice.rows, &choice.class_of, tol);
    let children = classes
        .par_iter()
        .map(|c| grow(&c.residuals, config, tol, depth + 1))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble_level(set.len(), classes, children))
}

/// Picks the codebook of one node (`set` must hold at least two vectors).
///
/// Every candidate size is trained with LBG; each codevector is then snapped
/// to the class member nearest to it, so that every class contains an exact
/// match. Sizes are ranked by the level cost `H(P) + 1` plus, per class,
/// `(|Δ|/M) * (H(distinct values of Δ) + 1)`, which bounds the recursion term
/// from above (coding `Δ` with all its distinct values). Ties keep the smaller
/// size.
pub fn greedy_level(set: &VectorSet, config: &SeeConfig, depth: usize, tol: f64) -> Result<LevelChoice> {
    if set.len() < 2 {
        return Err(Error::invalid("a greedy level needs at least two vectors"));
    }
    let distinct = distinct_vectors(set).len();
    let sizes: Vec<usize> = match config.per_level_codebook_sizes.as_deref() {
        Some(per_level) if !per_level.is_empty() => {
            vec![per_level[depth.min(per_level.len() - 1)].clamp(1, distinct)]
        }
        _ => (1..=config.greedy_max_codebook.clamp(1, distinct)).collect(),
    };
    let candidates = sizes
        .par_iter()
        .map(|&n| candidate(set, n, config.seed, tol))
        .collect::<Result<Vec<_>>>()?;
    let best = candidates
        .into_iter()
        .reduce(|best, c| if c.bound_bits < best.bound_bits { c } else { best })
        .expect("at least one size is scanned");
    Ok(best)
}

fn candidate(set: &VectorSet, n: usize, seed: u64, tol: f64) -> Result<LevelChoice> {
    let trained = train_codebook(set, n, seed)?;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(trained.codebook.len());
    for (j, cv) in trained.codebook.iter().enumerate() {
        let nearest_member = trained
            .assignment
            .members(j)
            .map(|i| (i, squared_distance(set.get(i), cv)))
            .fold(None, |acc: Option<(usize, f64)>, (i, d)| match acc {
                Some((_, bd)) if bd <= d => acc,
                _ => Some((i, d)),
            });
        if let Some((i, _)) = nearest_member {
            rows.push(set.get(i).iter().map(|x| x + 0.0).collect());
        }
    }
    rows.sort_by(|a, b| lex_cmp(a, b));
    rows.dedup();

    let class_of: Vec<usize> = set.iter().map(|v| nearest_row(v, &rows)).collect();
    let classes = split_classes(set, &rows, &class_of, tol);
    let bound_bits = level_bound(set.len(), &classes);
    Ok(LevelChoice { rows, class_of, bound_bits })
}

fn level_bound(set_size: usize, classes: &[ClassSplit]) -> f64 {
    classes
        .iter()
        .filter(|c| c.count > 0)
        .map(|c| {
            let p = c.count as f64 / set_size as f64;
            p * (-p.log2() + 1.0) + c.residuals.len() as f64 / set_size as f64 * residual_bound(&c.residuals)
        })
        .sum()
}

/// Cost of coding `set` with its full distinct-value codebook.
fn residual_bound(set: &VectorSet) -> f64 {
    if set.len() <= 1 {
        return 0.0;
    }
    let distinct = distinct_vectors(set);
    let mut counts = vec![0usize; distinct.len()];
    for v in set.iter() {
        let j = distinct
            .binary_search_by(|d| lex_cmp(d, v))
            .expect("every vector is among the distinct ones");
        counts[j] += 1;
    }
    let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / set.len() as f64).collect();
    shannon_entropy_bits(&probs) + 1.0
}

fn nearest_row(v: &[f64], rows: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, r) in rows.iter().enumerate() {
        let d = squared_distance(v, r);
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use crate::vq::VectorSet;

    #[test]
    fn exact_single_cover_costs_one_bit() {
        let set = VectorSet::scalars(&[7.0; 10]);
        let tree = greedy_minimize(&set, &SeeConfig::greedy()).unwrap();
        assert_eq!(tree.total_bits, 1.0);
        assert_eq!(tree.nodes.len(), 1);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let values: Vec<f64> = (0..60).map(|i| ((i * 37) % 23) as f64).collect();
        let set = VectorSet::scalars(&values);
        let cfg = SeeConfig::greedy().with_seed(9);
        assert_eq!(greedy_minimize(&set, &cfg).unwrap(), greedy_minimize(&set, &cfg).unwrap());
    }

    #[test]
    fn codevectors_are_data_values() {
        let values: Vec<f64> = (0..40).map(|i| ((i * 13) % 17) as f64 * 1.5).collect();
        let set = VectorSet::scalars(&values);
        let choice = greedy_level(&set, &SeeConfig::greedy(), 0, 0.0).unwrap();
        for r in &choice.rows {
            assert!(values.contains(&r[0]));
        }
        assert!(choice.rows.windows(2).all(|w| w[0][0] < w[1][0]));
    }

    #[test]
    fn per_level_sizes_are_honored() {
        let values: Vec<f64> = (0..32).map(|i| (i % 8) as f64 * 10.0).collect();
        let set = VectorSet::scalars(&values);
        let mut cfg = SeeConfig::greedy();
        cfg.per_level_codebook_sizes = Some(vec![2]);
        let tree = greedy_minimize(&set, &cfg).unwrap();
        assert_eq!(tree.nodes.len(), 2);
        assert!(tree.nodes.iter().all(|n| n.children.nodes.len() <= 2));
    }

    #[test]
    fn optimistic_bound_never_exceeds_value() {
        let values: Vec<f64> = (0..50).map(|i| ((i * i) % 29) as f64).collect();
        let tree = greedy_minimize(&VectorSet::scalars(&values), &SeeConfig::greedy()).unwrap();
        fn check(t: &SeeTree) {
            assert!(t.optimistic_bits() <= t.total_bits + 1e-12);
            for n in &t.nodes {
                assert!(n.info_bits + 1e-12 >= n.probability);
                check(&n.children);
            }
        }
        check(&tree);
    }

    #[test]
    fn depth_cap_refusal() {
        let values: Vec<f64> = (0..20).map(|i| (i * 3) as f64).collect();
        let mut cfg = SeeConfig::greedy();
        cfg.per_level_codebook_sizes = Some(vec![1]);
        cfg.depth_cap = 2;
        let err = greedy_minimize(&VectorSet::scalars(&values), &cfg).unwrap_err();
        assert!(matches!(err, crate::Error::Refused(_)));
    }
}
