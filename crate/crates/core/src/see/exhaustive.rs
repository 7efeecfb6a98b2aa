use std::collections::HashMap;

use super::{assemble_level, prune_tree, split_classes, SeeConfig, SeeTree};
use crate::error::{Error, Result};
use crate::vq::{distinct_vectors, lex_cmp, squared_distance, VectorSet};

type MemoKey = Vec<u64>;

/// Full-depth exact minimum over all non-empty subsets of the distinct vectors (plus
/// midpoints when configured), recursing into every residual set.
///
/// Candidates whose classes leave the population unchanged (no exact match
/// anywhere) are skipped; they could recurse forever. Codebooks with an empty
/// class are skipped as well, since the same classification is reached by the
/// subset without that codevector.
pub(super) fn exhaustive_minimize(set: &VectorSet, config: &SeeConfig) -> Result<SeeTree> {
    if set.len() > config.exhaustive_cap {
        return Err(Error::refused(format!(
            "exhaustive estimate limited to {} vectors, got {}",
            config.exhaustive_cap,
            set.len()
        )));
    }
    let tol = config.tolerance_for(set);
    let mut memo = HashMap::new();
    let tree = recurse(set, 0, tol, config, &mut memo)?;
    Ok(match config.max_depth {
        Some(d) => prune_tree(&tree, d).0,
        None => tree,
    })
}

fn memo_key(set: &VectorSet) -> MemoKey {
    let mut rows: Vec<&[f64]> = set.iter().collect();
    rows.sort_by(|a, b| lex_cmp(a, b));
    rows.iter().flat_map(|r| r.iter().map(|x| (x + 0.0).to_bits())).collect()
}

fn candidates(set: &VectorSet, config: &SeeConfig) -> Vec<Vec<f64>> {
    let mut values = distinct_vectors(set);
    if config.include_midpoints && set.dim() == 1 {
        let mids: Vec<Vec<f64>> = values.windows(2).map(|w| vec![(w[0][0] + w[1][0]) / 2.0]).collect();
        values.extend(mids);
        values.sort_by(|a, b| lex_cmp(a, b));
    }
    values
}

fn recurse(
    set: &VectorSet,
    depth: usize,
    tol: f64,
    config: &SeeConfig,
    memo: &mut HashMap<MemoKey, SeeTree>,
) -> Result<SeeTree> {
    if set.len() <= 1 {
        return Ok(SeeTree::empty(set.len()));
    }
    if depth >= config.depth_cap {
        return Err(Error::refused(format!("recursion depth cap {} exceeded", config.depth_cap)));
    }
    let key = memo_key(set);
    if let Some(tree) = memo.get(&key) {
        return Ok(tree.clone());
    }

    let values = candidates(set, config);
    if values.len() >= usize::BITS as usize {
        return Err(Error::refused("too many candidate codevectors"));
    }
    let mut best: Option<SeeTree> = None;
    for mask in 1usize..(1 << values.len()) {
        let rows: Vec<Vec<f64>> = (0..values.len())
            .filter(|b| mask & (1 << b) != 0)
            .map(|b| values[b].clone())
            .collect();
        let class_of: Vec<usize> = set.iter().map(|v| nearest_row(v, &rows)).collect();
        let classes = split_classes(set, &rows, &class_of, tol);
        if classes.iter().any(|c| c.count == 0) {
            continue;
        }
        if classes.iter().map(|c| c.residuals.len()).sum::<usize>() >= set.len() {
            continue;
        }
        let mut children = Vec::with_capacity(classes.len());
        for c in &classes {
            children.push(recurse(&c.residuals, depth + 1, tol, config, memo)?);
        }
        let tree = assemble_level(set.len(), classes, children);
        if best.as_ref().is_none_or(|b| tree.total_bits < b.total_bits) {
            best = Some(tree);
        }
    }
    let tree = best.expect("the full distinct-value codebook always qualifies");
    memo.insert(key, tree.clone());
    Ok(tree)
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
