//! Point-set objects, permutation matching and object entropy.
//!
//! An object is a finite ordered list of points. Two objects of equal size are
//! compared through their auto-distance matrices under a point permutation
//! `Ω_γ` and a scale `α`:
//!
//! ```text
//! χ(O1, O2; α, γ) = Σ_ij | d1(i, j) − α d2(Ω(i), Ω(j)) |
//! ```

mod entropy;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::vq::distance;

pub use entropy::{min_partition_see, object_see, ObjectPartition};

/// Largest object size accepted by [`best_match`] (all `N!` permutations are
/// scanned).
pub const MATCH_CAP: usize = 8;
/// Residual object points at or below this value count as zero.
pub const ZERO_RESIDUAL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct PointObject {
    dim: usize,
    coords: Vec<f64>,
}

impl PointObject {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("point dimension must be positive"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::invalid("coordinate count is not a multiple of the dimension"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("coordinates must be finite"));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map_or(1, Vec::len);
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::invalid("points differ in dimension"));
        }
        Self::new(dim, points.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    /// True when some point occurs twice.
    pub fn has_duplicates(&self) -> bool {
        (0..self.len()).any(|i| (0..i).any(|j| self.point(i) == self.point(j)))
    }

    /// Points at the given indices, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self { dim: self.dim, coords: indices.iter().flat_map(|&i| self.point(i).iter().copied()).collect() }
    }
}

/// One point per site of a `shape[0] x shape[1] x ...` signal (first axis
/// fastest): the site coordinates followed by the signal value.
pub fn embed_signal(values: &[f64], shape: &[usize], levels: usize) -> Result<PointObject> {
    if shape.is_empty() || shape.contains(&0) {
        return Err(Error::invalid("signal shape must be non-empty and positive"));
    }
    let sites: usize = shape.iter().product();
    if values.len() != sites {
        return Err(Error::invalid(format!("{} values for {sites} sites", values.len())));
    }
    if let Some(v) = values.iter().find(|&&v| !(v >= 0.0 && v < levels as f64)) {
        return Err(Error::invalid(format!("signal value {v} outside [0, {levels})")));
    }
    let mut coords = Vec::with_capacity(sites * (shape.len() + 1));
    for (site, &v) in values.iter().enumerate() {
        let mut rest = site;
        for &n in shape {
            coords.push((rest % n) as f64);
            rest /= n;
        }
        coords.push(v);
    }
    PointObject::new(shape.len() + 1, coords)
}

/// Coordinate-wise mean.
pub fn object_center(object: &PointObject) -> Result<Vec<f64>> {
    if object.is_empty() {
        return Err(Error::invalid("an empty object has no center"));
    }
    let n = object.len() as f64;
    let mut c = vec![0.0; object.dim];
    for p in object.points() {
        for (a, x) in c.iter_mut().zip(p) {
            *a += x;
        }
    }
    Ok(c.into_iter().map(|a| a / n).collect())
}

/// Dense row-major `n x n` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix {
    pub n: usize,
    pub entries: Vec<f64>,
}

impl SquareMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        Self { n, entries: (0..n * n).map(|x| self.get(x % n, x / n)).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a != 0.0 {
                    for j in 0..n {
                        entries[i * n + j] += a * other.get(k, j);
                    }
                }
            }
        }
        Self { n, entries }
    }
}

/// `d_ij = ||x_i − x_j||`.
pub fn auto_distance_matrix(object: &PointObject) -> SquareMatrix {
    let n = object.len();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = distance(object.point(i), object.point(j));
            entries[i * n + j] = d;
            entries[j * n + i] = d;
        }
    }
    SquareMatrix { n, entries }
}

fn factorial(n: usize) -> Option<u64> {
    (1..=n as u64).try_fold(1u64, u64::checked_mul)
}

/// The `gamma`-th permutation of `0..n` in lexicographic order.
pub fn permutation_from_rank(gamma: u64, n: usize) -> Result<Vec<usize>> {
    let total = factorial(n).ok_or_else(|| Error::refused(format!("{n}! overflows")))?;
    if gamma >= total {
        return Err(Error::invalid(format!("permutation index {gamma} must be below {n}! = {total}")));
    }
    let mut pool: Vec<usize> = (0..n).collect();
    let mut rest = gamma;
    let mut out = Vec::with_capacity(n);
    for i in (0..n).rev() {
        let f = factorial(i).expect("smaller than n!");
        out.push(pool.remove((rest / f) as usize));
        rest %= f;
    }
    Ok(out)
}

/// Inverse of [`permutation_from_rank`].
pub fn permutation_rank(perm: &[usize]) -> Result<u64> {
    let n = perm.len();
    let mut seen = vec![false; n];
    let mut rank = 0u64;
    for (i, &p) in perm.iter().enumerate() {
        if p >= n || seen[p] {
            return Err(Error::invalid("not a permutation"));
        }
        let smaller_unused = (0..p).filter(|&q| !seen[q]).count() as u64;
        rank += smaller_unused * factorial(n - 1 - i).ok_or_else(|| Error::refused("factorial overflow"))?;
        seen[p] = true;
    }
    Ok(rank)
}

/// `w_ij = 1` iff `j = Ω_γ(i)`.
pub fn permutation_matrix(gamma: u64, n: usize) -> Result<SquareMatrix> {
    let perm = permutation_from_rank(gamma, n)?;
    let mut entries = vec![0.0; n * n];
    for (i, &j) in perm.iter().enumerate() {
        entries[i * n + j] = 1.0;
    }
    Ok(SquareMatrix { n, entries })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchParams {
    pub alpha: f64,
    pub gamma: u64,
}

impl MatchParams {
    pub fn new(alpha: f64, gamma: u64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::invalid(format!("alpha {alpha} must be positive")));
        }
        Ok(Self { alpha, gamma })
    }

    pub fn identity() -> Self {
        Self { alpha: 1.0, gamma: 0 }
    }
}

fn same_size(a: &PointObject, b: &PointObject) -> Result<()> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::invalid(format!("objects must be non-empty and of equal size ({} vs {})", a.len(), b.len())));
    }
    Ok(())
}

fn chi_with(d1: &SquareMatrix, d2: &SquareMatrix, perm: &[usize], alpha: f64) -> f64 {
    let n = d1.n;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            total += (d1.get(i, j) - alpha * d2.get(perm[i], perm[j])).abs();
        }
    }
    total
}

/// `χ` summed over ordered point pairs of `o1`.
pub fn chi_distance(o1: &PointObject, o2: &PointObject, params: MatchParams) -> Result<f64> {
    same_size(o1, o2)?;
    let perm = permutation_from_rank(params.gamma, o1.len())?;
    Ok(chi_with(&auto_distance_matrix(o1), &auto_distance_matrix(o2), &perm, params.alpha))
}

/// `Σ_ij |[D1 − α W D2 Wᵀ]_ij|`, the matrix form of [`chi_distance`].
pub fn chi_matrix_form(o1: &PointObject, o2: &PointObject, params: MatchParams) -> Result<f64> {
    same_size(o1, o2)?;
    let w = permutation_matrix(params.gamma, o1.len())?;
    let d1 = auto_distance_matrix(o1);
    let projected = w.mul(&auto_distance_matrix(o2)).mul(&w.transpose());
    Ok(d1.entries.iter().zip(&projected.entries).map(|(a, b)| (a - params.alpha * b).abs()).sum())
}

/// Smallest `α > 0` minimizing `Σ |a_i − α b_i|`: the lower weighted median
/// of `a_i / b_i` with weights `b_i` over `b_i > 0`. Pairs with `b_i = 0` do
/// not depend on `α`. Returns 1 when every `b_i` is 0.
pub fn optimal_alpha(a: &[f64], b: &[f64]) -> f64 {
    let mut ratios: Vec<(f64, f64)> = a.iter().zip(b).filter(|(_, &b)| b > 0.0).map(|(&a, &b)| (a / b, b)).collect();
    if ratios.is_empty() {
        return 1.0;
    }
    ratios.sort_by(|x, y| x.0.total_cmp(&y.0));
    let total: f64 = ratios.iter().map(|r| r.1).sum();
    let mut acc = 0.0;
    for &(r, w) in &ratios {
        acc += w;
        if acc >= total / 2.0 {
            return positive_alpha(r);
        }
    }
    positive_alpha(ratios.last().expect("non-empty").0)
}

/// A zero median (only possible with coincident points in the first object)
/// is replaced by the smallest admissible scale.
fn positive_alpha(r: f64) -> f64 {
    if r > 0.0 {
        r
    } else {
        MIN_ALPHA
    }
}

pub const MIN_ALPHA: f64 = 1e-12;

/// Minimizes `χ` over every permutation and, per permutation, exactly over
/// `α`. Ties go to the lowest `γ`, then the lowest `α`.
pub fn best_match(o1: &PointObject, o2: &PointObject) -> Result<(MatchParams, f64)> {
    same_size(o1, o2)?;
    let n = o1.len();
    if n > MATCH_CAP {
        return Err(Error::refused(format!("matching limited to {MATCH_CAP} points, got {n}")));
    }
    let d1 = auto_distance_matrix(o1);
    let d2 = auto_distance_matrix(o2);
    let total = factorial(n).expect("n is capped");
    let scored: Vec<(MatchParams, f64)> = (0..total)
        .into_par_iter()
        .map(|gamma| {
            let perm = permutation_from_rank(gamma, n).expect("gamma below n!");
            let mut a = Vec::with_capacity(n * n);
            let mut b = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    a.push(d1.get(i, j));
                    b.push(d2.get(perm[i], perm[j]));
                }
            }
            let alpha = optimal_alpha(&a, &b);
            (MatchParams { alpha, gamma }, chi_with(&d1, &d2, &perm, alpha))
        })
        .collect();
    let mut best = scored[0];
    for &(p, chi) in &scored[1..] {
        if chi < best.1 - 1e-12 * (1.0 + best.1) {
            best = (p, chi);
        }
    }
    Ok(best)
}

/// One-dimensional points `||(y_i − C1) − α (Ω(y_i) − C2)||`, one per point
/// of `o1`, in order.
pub fn object_diff(o1: &PointObject, o2: &PointObject, params: MatchParams) -> Result<PointObject> {
    same_size(o1, o2)?;
    if o1.dim != o2.dim {
        return Err(Error::invalid("objects differ in point dimension"));
    }
    let perm = permutation_from_rank(params.gamma, o1.len())?;
    let (c1, c2) = (object_center(o1)?, object_center(o2)?);
    let values = (0..o1.len())
        .map(|i| {
            let (y, z) = (o1.point(i), o2.point(perm[i]));
            (0..o1.dim)
                .map(|d| ((y[d] - c1[d]) - params.alpha * (z[d] - c2[d])).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    PointObject::new(1, values)
}

/// Resizes `object` to exactly `n` points. Shrinking keeps a farthest-point
/// sample (seeded at the point nearest the center, lowest index on ties) in
/// the original order; growing appends copies of the center.
pub fn generalize(object: &PointObject, n: usize) -> Result<PointObject> {
    if n == 0 {
        return Err(Error::invalid("target size must be positive"));
    }
    let center = object_center(object)?;
    let len = object.len();
    if len == n {
        return Ok(object.clone());
    }
    if len < n {
        let mut coords = object.coords.clone();
        for _ in len..n {
            coords.extend(&center);
        }
        return PointObject::new(object.dim, coords);
    }
    let mut chosen = vec![argmin((0..len).map(|i| distance(object.point(i), &center)))];
    let mut gap: Vec<f64> = (0..len).map(|i| distance(object.point(i), object.point(chosen[0]))).collect();
    while chosen.len() < n {
        let next = argmin(gap.iter().map(|&g| -g));
        chosen.push(next);
        for (i, g) in gap.iter_mut().enumerate() {
            *g = g.min(distance(object.point(i), object.point(next)));
        }
    }
    chosen.sort_unstable();
    Ok(object.select(&chosen))
}

fn argmin(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, v) in values.enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop, proptest};
    use proptest::{prop_assert, prop_assert_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn obj(points: &[&[f64]]) -> PointObject {
        PointObject::from_points(&points.iter().map(|p| p.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn random_object(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> PointObject {
        PointObject::new(dim, (0..n * dim).map(|_| rng.random_range(-5.0..5.0)).collect()).unwrap()
    }

    #[test]
    fn embedding() {
        assert_eq!(embed_signal(&[3.0, 5.0], &[2], 8).unwrap(), obj(&[&[0.0, 3.0], &[1.0, 5.0]]));
        let img = embed_signal(&[7.0; 4], &[2, 2], 8).unwrap();
        assert_eq!(img, obj(&[&[0.0, 0.0, 7.0], &[1.0, 0.0, 7.0], &[0.0, 1.0, 7.0], &[1.0, 1.0, 7.0]]));
        assert!(embed_signal(&[8.0], &[1], 8).is_err());
        assert_eq!(embed_signal(&[0.0; 24], &[2, 3, 4], 1).unwrap().len(), 24);
    }

    #[test]
    fn centers() {
        assert_eq!(object_center(&obj(&[&[4.0, 2.0]])).unwrap(), vec![4.0, 2.0]);
        assert_eq!(object_center(&obj(&[&[0.0, 0.0], &[2.0, 2.0]])).unwrap(), vec![1.0, 1.0]);
        assert!(object_center(&PointObject::new(2, vec![]).unwrap()).is_err());
    }

    #[test]
    fn distance_matrix_rows() {
        let d = auto_distance_matrix(&obj(&[&[0.0], &[1.0], &[3.0]]));
        assert_eq!(d.entries, vec![0.0, 1.0, 3.0, 1.0, 0.0, 2.0, 3.0, 2.0, 0.0]);
    }

    #[test]
    fn permutation_ranks() {
        assert_eq!(permutation_from_rank(0, 4).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(permutation_from_rank(1, 3).unwrap(), vec![0, 2, 1]);
        assert_eq!(permutation_from_rank(5, 3).unwrap(), vec![2, 1, 0]);
        assert!(permutation_from_rank(6, 3).is_err());
        for g in 0..120 {
            assert_eq!(permutation_rank(&permutation_from_rank(g, 5).unwrap()).unwrap(), g);
        }
    }

    #[test]
    fn all_permutation_matrices_orthogonal_and_distinct() {
        let mut seen = Vec::new();
        for g in 0..24 {
            let w = permutation_matrix(g, 4).unwrap();
            let wtw = w.transpose().mul(&w);
            for i in 0..4 {
                for j in 0..4 {
                    assert_eq!(wtw.get(i, j), if i == j { 1.0 } else { 0.0 });
                }
                assert_eq!((0..4).map(|j| w.get(i, j)).sum::<f64>(), 1.0);
                assert_eq!((0..4).map(|j| w.get(j, i)).sum::<f64>(), 1.0);
            }
            assert!(!seen.contains(&w.entries));
            seen.push(w.entries);
        }
    }

    #[test]
    fn chi_examples() {
        let o = obj(&[&[0.0, 0.0], &[3.0, 1.0], &[1.0, 4.0]]);
        assert_eq!(chi_distance(&o, &o, MatchParams::identity()).unwrap(), 0.0);
        let scaled = PointObject::new(2, o.as_flat().iter().map(|x| x * 2.5).collect()).unwrap();
        let p = MatchParams::new(1.0 / 2.5, 0).unwrap();
        assert!(chi_distance(&o, &scaled, p).unwrap() < 1e-12);
        assert!(chi_distance(&o, &obj(&[&[0.0, 0.0]]), p).is_err());
    }

    #[test]
    fn chi_forms_agree_with_pair_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let a = random_object(&mut rng, 3, 2);
            let b = random_object(&mut rng, 3, 2);
            let params = MatchParams::new(rng.random_range(0.1..3.0), rng.random_range(0..6)).unwrap();
            let perm = permutation_from_rank(params.gamma, 3).unwrap();
            let mut oracle = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    let d1 = distance(a.point(i), a.point(j));
                    let d2 = distance(b.point(perm[i]), b.point(perm[j]));
                    oracle += (d1 - params.alpha * d2).abs();
                }
            }
            let def = chi_distance(&a, &b, params).unwrap();
            let mat = chi_matrix_form(&a, &b, params).unwrap();
            assert!((def - oracle).abs() < 1e-9 && (mat - oracle).abs() < 1e-9);

            // the other arrangement, Σ|D2 − (1/α) Wᵀ D1 W|, is χ / α
            let w = permutation_matrix(params.gamma, 3).unwrap();
            let other = w.transpose().mul(&auto_distance_matrix(&a)).mul(&w);
            let d2 = auto_distance_matrix(&b);
            let alt: f64 = d2.entries.iter().zip(&other.entries).map(|(x, y)| (x - y / params.alpha).abs()).sum();
            assert!((alt - def / params.alpha).abs() < 1e-9);
        }
    }

    #[test]
    fn weighted_median_alpha() {
        assert_eq!(optimal_alpha(&[1.0, 2.0, 9.0], &[1.0, 1.0, 1.0]), 2.0);
        assert_eq!(optimal_alpha(&[1.0, 4.0], &[0.0, 0.0]), 1.0);
        // equal halves: the lower end of the minimizing interval
        assert_eq!(optimal_alpha(&[1.0, 3.0], &[1.0, 1.0]), 1.0);
    }

    proptest! {
        #[test]
        fn alpha_beats_grid(
            pairs in prop::collection::vec((0.0f64..10.0, 0.0f64..10.0), 1..12)
        ) {
            let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let cost = |alpha: f64| a.iter().zip(&b).map(|(x, y)| (x - alpha * y).abs()).sum::<f64>();
            let best = cost(optimal_alpha(&a, &b));
            for step in 1..=2000 {
                prop_assert!(best <= cost(step as f64 * 0.01) + 1e-9);
            }
        }

        #[test]
        fn center_translation_equivariance(
            coords in prop::collection::vec(-100.0f64..100.0, 2..16),
            t in (-50.0f64..50.0, -50.0f64..50.0)
        ) {
            let n = coords.len() / 2 * 2;
            let o = PointObject::new(2, coords[..n].to_vec()).unwrap();
            let moved = PointObject::new(2, o.points().flat_map(|p| [p[0] + t.0, p[1] + t.1]).collect()).unwrap();
            let (c, cm) = (object_center(&o).unwrap(), object_center(&moved).unwrap());
            prop_assert!((cm[0] - c[0] - t.0).abs() < 1e-9 && (cm[1] - c[1] - t.1).abs() < 1e-9);
        }

        #[test]
        fn generalize_hits_target(n in 1usize..10, len in 1usize..10, seed in 0u64..100) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let o = random_object(&mut rng, len, 2);
            prop_assert_eq!(generalize(&o, n).unwrap().len(), n);
        }
    }

    #[test]
    fn distance_matrix_matches_pair_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let o = random_object(&mut rng, 7, 3);
        let d = auto_distance_matrix(&o);
        for i in 0..7 {
            for j in 0..7 {
                let oracle: f64 = (0..3).map(|k| (o.point(i)[k] - o.point(j)[k]).powi(2)).sum::<f64>().sqrt();
                assert!((d.get(i, j) - oracle).abs() < 1e-12);
                assert!(d.get(i, j) <= d.get(i, 3) + d.get(3, j) + 1e-9);
            }
        }
    }

    #[test]
    fn best_match_finds_congruence() {
        let o = obj(&[&[0.0, 0.0], &[4.0, 0.0], &[1.0, 3.0], &[2.0, 7.0]]);
        let (c, s) = (0.6f64.cos(), 0.6f64.sin());
        let perm = [2, 0, 3, 1];
        let moved: Vec<Vec<f64>> =
            perm.iter().map(|&i| { let p = o.point(i); vec![c * p[0] - s * p[1] + 3.0, s * p[0] + c * p[1] - 1.0] }).collect();
        let (_, chi) = best_match(&o, &PointObject::from_points(&moved).unwrap()).unwrap();
        assert!(chi < 1e-9);
        let (p, chi) = best_match(&o, &o).unwrap();
        assert_eq!((p, chi), (MatchParams::identity(), 0.0));
        let big = PointObject::new(1, (0..9).map(f64::from).collect()).unwrap();
        assert!(matches!(best_match(&big, &big), Err(Error::Refused(_))));
    }

    #[test]
    fn diff_examples() {
        let o = obj(&[&[0.0, 0.0], &[3.0, 1.0], &[1.0, 4.0]]);
        let moved = PointObject::new(2, o.points().flat_map(|p| [p[0] + 5.0, p[1] - 2.0]).collect()).unwrap();
        let d = object_diff(&o, &moved, MatchParams::identity()).unwrap();
        assert!(d.as_flat().iter().all(|&x| x < 1e-12));

        let scaled = PointObject::new(2, o.as_flat().iter().map(|x| x * 3.0).collect()).unwrap();
        let d = object_diff(&o, &scaled, MatchParams::new(1.0 / 3.0, 0).unwrap()).unwrap();
        assert!(d.as_flat().iter().all(|&x| x < 1e-12));

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (a, b) = (random_object(&mut rng, 4, 3), random_object(&mut rng, 4, 3));
        let p = MatchParams::new(0.7, 13).unwrap();
        let perm = permutation_from_rank(13, 4).unwrap();
        let d = object_diff(&a, &b, p).unwrap();
        let (ca, cb) = (object_center(&a).unwrap(), object_center(&b).unwrap());
        for (i, &j) in perm.iter().enumerate() {
            let oracle = distance(
                &(0..3).map(|k| a.point(i)[k] - ca[k]).collect::<Vec<_>>(),
                &(0..3).map(|k| 0.7 * (b.point(j)[k] - cb[k])).collect::<Vec<_>>(),
            );
            assert!((d.point(i)[0] - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn generalize_rules() {
        let o = obj(&[&[0.0], &[1.0], &[2.0], &[9.0]]);
        assert_eq!(generalize(&o, 4).unwrap(), o);
        // center 3: nearest is 2 (index 2); farthest from it is 9 (index 3)
        assert_eq!(generalize(&o, 2).unwrap(), obj(&[&[2.0], &[9.0]]));
        // then 0 (distance 2 from {2, 9})
        assert_eq!(generalize(&o, 3).unwrap(), obj(&[&[0.0], &[2.0], &[9.0]]));
        let grown = generalize(&o, 6).unwrap();
        assert_eq!(grown.as_flat(), &[0.0, 1.0, 2.0, 9.0, 3.0, 3.0]);
    }
}
