use std::cmp::Ordering;
use std::collections::HashMap;

use rayon::prelude::*;

use super::{best_match, generalize, object_diff, PointObject, MATCH_CAP, ZERO_RESIDUAL};
use crate::error::{Error, Result};
use crate::see::SeeConfig;
use crate::vq::lex_cmp;

/// Largest point count accepted by [`min_partition_see`].
pub const PARTITION_CAP: usize = 8;

/// The entropy estimate of a set of objects.
///
/// Codebooks range over the non-empty subsets of the objects themselves.
/// Each object goes to the codebook object (resized to its own size with
/// [`generalize`]) of least `χ`, the lowest index on ties; its residual is the
/// [`object_diff`] with near-zero points dropped, and vanishes when every
/// point does. Sets with at most one object cost 0.
pub fn object_see(objects: &[PointObject], config: &SeeConfig) -> Result<f64> {
    if objects.len() <= 1 {
        return Ok(0.0);
    }
    if objects.len() > config.exhaustive_cap {
        return Err(Error::refused(format!(
            "object entropy limited to {} objects, got {}",
            config.exhaustive_cap,
            objects.len()
        )));
    }
    let dim = objects[0].dim();
    for o in objects {
        if o.is_empty() {
            return Err(Error::invalid("objects must be non-empty"));
        }
        if o.dim() != dim {
            return Err(Error::invalid("objects differ in point dimension"));
        }
        if o.len() > MATCH_CAP {
            return Err(Error::refused(format!("objects limited to {MATCH_CAP} points, got {}", o.len())));
        }
    }
    recurse(objects.to_vec(), 0, config, &mut HashMap::new())
}

fn canonical_cmp(a: &PointObject, b: &PointObject) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| lex_cmp(a.as_flat(), b.as_flat()))
}

fn memo_key(objects: &[PointObject]) -> Vec<u64> {
    let mut key = Vec::new();
    for o in objects {
        key.push(o.len() as u64);
        key.extend(o.as_flat().iter().map(|x| (x + 0.0).to_bits()));
    }
    key
}

fn recurse(
    mut objects: Vec<PointObject>,
    depth: usize,
    config: &SeeConfig,
    memo: &mut HashMap<Vec<u64>, f64>,
) -> Result<f64> {
    let m = objects.len();
    if m <= 1 {
        return Ok(0.0);
    }
    if depth >= config.depth_cap {
        return Err(Error::refused(format!("recursion depth cap {} exceeded", config.depth_cap)));
    }
    objects.sort_by(canonical_cmp);
    let key = memo_key(&objects);
    if let Some(&bits) = memo.get(&key) {
        return Ok(bits);
    }

    // match[j][i]: object j against codebook candidate i
    let matches = objects
        .par_iter()
        .map(|oj| {
            objects
                .iter()
                .map(|oi| {
                    let g = generalize(oi, oj.len())?;
                    let (params, chi) = best_match(oj, &g)?;
                    let diff = object_diff(oj, &g, params)?;
                    let kept: Vec<f64> = diff.as_flat().iter().copied().filter(|&x| x > ZERO_RESIDUAL).collect();
                    Ok((chi, PointObject::new(1, kept)?))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut best: Option<f64> = None;
    for mask in 1usize..(1 << m) {
        let book: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let mut counts = vec![0usize; book.len()];
        let mut residuals: Vec<Vec<PointObject>> = vec![Vec::new(); book.len()];
        for row in &matches {
            let mut pick = 0;
            for c in 1..book.len() {
                if row[book[c]].0 < row[book[pick]].0 {
                    pick = c;
                }
            }
            counts[pick] += 1;
            let r = &row[book[pick]].1;
            if !r.is_empty() {
                residuals[pick].push(r.clone());
            }
        }
        if counts.contains(&0) || residuals.iter().map(Vec::len).sum::<usize>() >= m {
            continue;
        }
        let mut bits = 0.0;
        for (count, delta) in counts.into_iter().zip(residuals) {
            let p = count as f64 / m as f64;
            bits += p * (-p.log2() + 1.0);
            if !delta.is_empty() {
                let share = delta.len() as f64 / m as f64;
                bits += share * recurse(delta, depth + 1, config, memo)?;
            }
        }
        if best.is_none_or(|b| bits < b) {
            best = Some(bits);
        }
    }
    let bits = best.expect("the full codebook matches every object to itself");
    memo.insert(key, bits);
    Ok(bits)
}

/// A partition of an object's points into cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObjectPartition {
    /// Point indices per cell, ascending; cells ordered by first point.
    pub cells: Vec<Vec<usize>>,
    /// Cell of each point (restricted growth string).
    pub signature: Vec<usize>,
}

impl ObjectPartition {
    fn from_signature(signature: Vec<usize>) -> Self {
        let count = signature.iter().max().map_or(0, |m| m + 1);
        let mut cells = vec![Vec::new(); count];
        for (i, &c) in signature.iter().enumerate() {
            cells[c].push(i);
        }
        Self { cells, signature }
    }

    pub fn objects(&self, source: &PointObject) -> Vec<PointObject> {
        self.cells.iter().map(|c| source.select(c)).collect()
    }
}

/// Restricted growth strings of length `n`, lexicographic.
fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn extend(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for c in 0..=max + 1 {
            prefix.push(c);
            extend(prefix, max.max(c), n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        extend(&mut vec![0], 0, n, &mut out);
    }
    out
}

/// Minimizes [`object_see`] over every partition of the object's points whose
/// cells hold at most `max_cell` points. Ties go to fewer cells, then the
/// lexicographically smallest signature.
pub fn min_partition_see(
    object: &PointObject,
    max_cell: Option<usize>,
    config: &SeeConfig,
) -> Result<(ObjectPartition, f64)> {
    let n = object.len();
    if n == 0 {
        return Err(Error::invalid("cannot partition an empty object"));
    }
    if n > PARTITION_CAP {
        return Err(Error::refused(format!("partition search limited to {PARTITION_CAP} points, got {n}")));
    }
    let limit = max_cell.unwrap_or(n);
    if limit == 0 {
        return Err(Error::invalid("max cell size must be positive"));
    }
    let candidates: Vec<ObjectPartition> = set_partitions(n)
        .into_iter()
        .map(ObjectPartition::from_signature)
        .filter(|p| p.cells.iter().all(|c| c.len() <= limit))
        .collect();
    let scored = candidates
        .into_par_iter()
        .map(|p| {
            let bits = object_see(&p.objects(object), config)?;
            Ok((p, bits))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<(ObjectPartition, f64)> = None;
    for (p, bits) in scored {
        let better = match &best {
            None => true,
            Some((bp, bb)) => {
                bits < *bb - 1e-12 || (bits <= *bb + 1e-12 && (p.cells.len(), &p.signature) < (bp.cells.len(), &bp.signature))
            }
        };
        if better {
            best = Some((p, bits));
        }
    }
    Ok(best.expect("the singleton-cell partition always qualifies"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::object::chi_distance;

    fn obj(points: &[[f64; 2]]) -> PointObject {
        PointObject::new(2, points.concat()).unwrap()
    }

    fn triangle() -> [[f64; 2]; 3] {
        [[0.0, 0.0], [4.0, 0.0], [1.0, 3.0]]
    }

    fn moved(points: &[[f64; 2]], t: [f64; 2], perm: &[usize]) -> PointObject {
        obj(&perm.iter().map(|&i| [points[i][0] + t[0], points[i][1] + t[1]]).collect::<Vec<_>>())
    }

    #[test]
    fn base_case() {
        let cfg = SeeConfig::default();
        assert_eq!(object_see(&[], &cfg).unwrap(), 0.0);
        assert_eq!(object_see(&[obj(&triangle())], &cfg).unwrap(), 0.0);
    }

    #[test]
    fn congruent_copies_cost_one_bit() {
        let t = triangle();
        let objects = vec![
            obj(&t),
            moved(&t, [5.0, 1.0], &[1, 2, 0]),
            moved(&t, [-3.0, 7.0], &[2, 1, 0]),
            moved(&t, [0.5, 0.5], &[0, 2, 1]),
        ];
        assert_eq!(object_see(&objects, &SeeConfig::default()).unwrap(), 1.0);
    }

    /// Brute force over codebook subsets, written against the definitions
    /// without the memo or the shared match table.
    fn oracle(objects: &[PointObject]) -> f64 {
        let m = objects.len();
        if m <= 1 {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for mask in 1usize..(1 << m) {
            let book: Vec<&PointObject> = (0..m).filter(|i| mask & (1 << i) != 0).map(|i| &objects[i]).collect();
            let mut classes: Vec<(usize, Vec<PointObject>)> = vec![(0, Vec::new()); book.len()];
            for o in objects {
                let scored: Vec<(f64, PointObject)> = book
                    .iter()
                    .map(|b| {
                        let g = generalize(b, o.len()).unwrap();
                        let (p, _) = best_match(o, &g).unwrap();
                        let chi = chi_distance(o, &g, p).unwrap();
                        let d = object_diff(o, &g, p).unwrap();
                        (chi, PointObject::new(1, d.as_flat().iter().copied().filter(|&x| x > 1e-9).collect()).unwrap())
                    })
                    .collect();
                let pick = (0..scored.len()).fold(0, |b, c| if scored[c].0 < scored[b].0 { c } else { b });
                classes[pick].0 += 1;
                if !scored[pick].1.is_empty() {
                    classes[pick].1.push(scored[pick].1.clone());
                }
            }
            if classes.iter().any(|c| c.0 == 0) || classes.iter().map(|c| c.1.len()).sum::<usize>() >= m {
                continue;
            }
            let v: f64 = classes
                .iter()
                .map(|(count, delta)| {
                    let p = *count as f64 / m as f64;
                    p * (1.0 / p).log2() + p + delta.len() as f64 / m as f64 * oracle(delta)
                })
                .sum();
            best = best.min(v);
        }
        best
    }

    #[test]
    fn two_classes_match_brute_force() {
        let t = triangle();
        let q = [[0.0, 0.0], [1.0, 0.0], [0.0, 5.0]];
        let objects = vec![obj(&t), moved(&t, [9.0, 9.0], &[0, 1, 2]), obj(&q), moved(&q, [-4.0, 2.0], &[2, 0, 1])];
        let got = object_see(&objects, &SeeConfig::default()).unwrap();
        assert!((got - oracle(&objects)).abs() < 1e-12);
        assert!(got <= 2.0 + 1e-12);

        let mixed = vec![obj(&t), obj(&q), obj(&[[0.0, 0.0], [2.0, 2.0]]), obj(&[[1.0, 1.0], [1.0, 6.0], [3.0, 0.0]])];
        assert!((object_see(&mixed, &SeeConfig::default()).unwrap() - oracle(&mixed)).abs() < 1e-12);
    }

    #[test]
    fn order_and_global_motion_invariance() {
        let t = triangle();
        let objects = vec![
            obj(&t),
            obj(&[[0.0, 0.0], [1.0, 0.0], [0.0, 5.0]]),
            moved(&t, [2.0, 2.0], &[1, 0, 2]),
            obj(&[[0.0, 0.0], [3.0, 3.0], [3.0, 0.0]]),
        ];
        let cfg = SeeConfig::default();
        let base = object_see(&objects, &cfg).unwrap();
        let mut reversed = objects.clone();
        reversed.reverse();
        assert_eq!(object_see(&reversed, &cfg).unwrap(), base);
        let (c, s) = (1.1f64.cos(), 1.1f64.sin());
        let rotated: Vec<PointObject> = objects
            .iter()
            .map(|o| {
                PointObject::new(2, o.points().flat_map(|p| [c * p[0] - s * p[1] + 4.0, s * p[0] + c * p[1] - 2.0]).collect())
                    .unwrap()
            })
            .collect();
        assert!((object_see(&rotated, &cfg).unwrap() - base).abs() < 1e-9);
    }

    #[test]
    fn refuses_over_caps() {
        let many = vec![obj(&[[0.0, 0.0]]); 9];
        assert!(matches!(object_see(&many, &SeeConfig::default()), Err(Error::Refused(_))));
        let big = PointObject::new(1, (0..9).map(f64::from).collect()).unwrap();
        assert!(matches!(min_partition_see(&big, None, &SeeConfig::default()), Err(Error::Refused(_))));
    }

    #[test]
    fn partition_counts_are_bell_numbers() {
        let bell = [1, 1, 2, 5, 15, 52, 203, 877, 4140];
        for (n, &b) in bell.iter().enumerate().skip(1) {
            let parts = set_partitions(n);
            assert_eq!(parts.len(), b);
            assert!(parts.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn small_partitions() {
        let cfg = SeeConfig::default();
        let one = PointObject::new(2, vec![3.0, 4.0]).unwrap();
        let (p, bits) = min_partition_see(&one, None, &cfg).unwrap();
        assert_eq!((p.cells, bits), (vec![vec![0]], 0.0));

        let two = PointObject::new(2, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let whole = object_see(std::slice::from_ref(&two), &cfg).unwrap();
        let split = object_see(&[two.select(&[0]), two.select(&[1])], &cfg).unwrap();
        let (p, bits) = min_partition_see(&two, None, &cfg).unwrap();
        assert_eq!(bits, whole.min(split));
        assert_eq!(p.signature, if whole <= split { vec![0, 0] } else { vec![0, 1] });
    }

    #[test]
    fn congruent_pairs_split_two_and_two() {
        let o = PointObject::new(2, vec![0.0, 0.0, 1.0, 0.0, 10.0, 5.0, 11.0, 5.0]).unwrap();
        let cfg = SeeConfig::default();
        let (p, bits) = min_partition_see(&o, Some(2), &cfg).unwrap();
        assert_eq!(p.cells, vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(bits, object_see(&p.objects(&o), &cfg).unwrap());
        for sig in set_partitions(4) {
            let q = ObjectPartition::from_signature(sig);
            if q.cells.iter().all(|c| c.len() <= 2) {
                assert!(bits <= object_see(&q.objects(&o), &cfg).unwrap() + 1e-12);
            }
        }
    }
}
