//! Flat (single-level) vector quantization.
//!
//! Vectors are stored flat, row-major, with a fixed dimension `k`. Distances
//! are Euclidean; distortion sums unsquared norms.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

const PAR_THRESHOLD: usize = 1024;
const MAX_TRAIN_ITERATIONS: usize = 100;
const TRAIN_REL_TOLERANCE: f64 = 1e-9;

/// An ordered group of `M` vectors of dimension `k`, each scalar stored with
/// `value_bits` bits.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorSet {
    dim: usize,
    value_bits: u32,
    data: Vec<f64>,
}

impl VectorSet {
    pub fn new(dim: usize, value_bits: u32, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("vector dimension must be positive"));
        }
        if value_bits == 0 {
            return Err(Error::invalid("value_bits must be at least 1"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "{} scalars do not form whole vectors of dimension {dim}",
                data.len()
            )));
        }
        Ok(Self { dim, value_bits, data })
    }

    pub fn empty(dim: usize, value_bits: u32) -> Result<Self> {
        Self::new(dim, value_bits, Vec::new())
    }

    pub fn from_rows(dim: usize, value_bits: u32, rows: &[Vec<f64>]) -> Result<Self> {
        let mut set = Self::empty(dim, value_bits)?;
        for row in rows {
            set.push(row)?;
        }
        Ok(set)
    }

    /// One-dimensional set with 8-bit values; convenient for scalar data.
    pub fn scalars(values: &[f64]) -> Self {
        Self { dim: 1, value_bits: 8, data: values.to_vec() }
    }

    pub fn push(&mut self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::invalid(format!(
                "vector of dimension {} pushed into set of dimension {}",
                v.len(),
                self.dim
            )));
        }
        self.data.extend_from_slice(v);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value_bits(&self) -> u32 {
        self.value_bits
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }
}

/// The codevectors `v'_0 .. v'_{N-1}`. Never empty, never holds duplicates.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    dim: usize,
    data: Vec<f64>,
}

impl Codebook {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "codebook needs at least one whole codevector of dimension {dim}"
            )));
        }
        let book = Self { dim, data };
        for a in 0..book.len() {
            for b in a + 1..book.len() {
                if book.get(a) == book.get(b) {
                    return Err(Error::invalid(format!("codevectors {a} and {b} are identical")));
                }
            }
        }
        Ok(book)
    }

    pub fn from_rows(dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("codevector dimension mismatch"));
        }
        Self::new(dim, rows.concat())
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, j: usize) -> &[f64] {
        &self.data[j * self.dim..(j + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.iter().map(<[f64]>::to_vec).collect()
    }
}

/// The map `i -> I(i)` from vector index to codevector index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment(Vec<usize>);

impl Assignment {
    pub fn new(class_of: Vec<usize>) -> Self {
        Self(class_of)
    }

    pub fn class_of(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Indices of the vectors classified as `class`, in input order.
    pub fn members(&self, class: usize) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(move |(_, &c)| c == class).map(|(i, _)| i)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassDistribution {
    pub counts: Vec<usize>,
    pub probabilities: Vec<f64>,
}

impl ClassDistribution {
    /// Shannon entropy in bits; empty classes contribute nothing.
    pub fn entropy_bits(&self) -> f64 {
        shannon_entropy_bits(&self.probabilities)
    }
}

/// Weights of the entropy-penalized objective `a * delta + b * H`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyObjectiveParams {
    pub a: f64,
    pub b: f64,
}

impl EntropyObjectiveParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a >= 0.0 && b >= 0.0) || (a == 0.0 && b == 0.0) {
            return Err(Error::invalid(format!(
                "objective weights must be non-negative and not both zero (a={a}, b={b})"
            )));
        }
        Ok(Self { a, b })
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

/// Shannon entropy (bits) of a probability vector; zero entries contribute 0.
pub fn shannon_entropy_bits(probabilities: &[f64]) -> f64 {
    probabilities.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum()
}

/// Nearest codevector under Euclidean distance, lowest index on ties.
pub fn classify(v: &[f64], codebook: &Codebook) -> Result<usize> {
    if v.len() != codebook.dim() {
        return Err(Error::invalid(format!(
            "vector dimension {} does not match codebook dimension {}",
            v.len(),
            codebook.dim()
        )));
    }
    Ok(nearest(v, codebook.iter()))
}

fn nearest<'a>(v: &[f64], rows: impl Iterator<Item = &'a [f64]>) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in rows.enumerate() {
        let d = squared_distance(v, c);
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

/// Classifies every vector of `set` against `codebook`.
pub fn classify_all(set: &VectorSet, codebook: &Codebook) -> Result<Assignment> {
    check_dims(set, codebook)?;
    Ok(Assignment(classify_rows(set, &codebook.rows())))
}

fn classify_rows(set: &VectorSet, rows: &[Vec<f64>]) -> Vec<usize> {
    let pick = |v: &[f64]| nearest(v, rows.iter().map(Vec::as_slice));
    if set.len() >= PAR_THRESHOLD {
        set.as_flat().par_chunks_exact(set.dim()).map(pick).collect()
    } else {
        set.iter().map(pick).collect()
    }
}

fn check_dims(set: &VectorSet, codebook: &Codebook) -> Result<()> {
    if set.dim() != codebook.dim() {
        return Err(Error::invalid(format!(
            "set dimension {} does not match codebook dimension {}",
            set.dim(),
            codebook.dim()
        )));
    }
    Ok(())
}

fn check_consistent(set: &VectorSet, codebook: &Codebook, assignment: &Assignment) -> Result<()> {
    check_dims(set, codebook)?;
    if assignment.len() != set.len() {
        return Err(Error::invalid(format!(
            "assignment covers {} vectors, set has {}",
            assignment.len(),
            set.len()
        )));
    }
    if let Some(&bad) = assignment.as_slice().iter().find(|&&c| c >= codebook.len()) {
        return Err(Error::invalid(format!(
            "assignment references codevector {bad}, codebook has {}",
            codebook.len()
        )));
    }
    Ok(())
}

/// Per-vector residual norms `||v_i - v'_{I(i)}||`, in index order.
fn residual_norms<'a>(
    set: &'a VectorSet,
    codebook: &'a Codebook,
    assignment: &'a Assignment,
) -> impl Iterator<Item = f64> + 'a {
    set.iter()
        .zip(assignment.as_slice())
        .map(|(v, &c)| distance(v, codebook.get(c)))
}

/// `D = sum_i ||v_i - v'_{I(i)}||`, summed sequentially in index order.
pub fn distortion(set: &VectorSet, codebook: &Codebook, assignment: &Assignment) -> Result<f64> {
    check_consistent(set, codebook, assignment)?;
    Ok(residual_norms(set, codebook, assignment).sum())
}

/// Compression ratio `T = P k / (log2 N + P k N / M)`.
///
/// Values below 1 are legal (the codebook costs more than it saves).
pub fn compression_ratio(value_bits: u32, dim: usize, codebook_size: usize, count: usize) -> f64 {
    assert!(
        value_bits >= 1 && dim >= 1 && codebook_size >= 1 && count >= 1,
        "compression_ratio inputs must all be >= 1"
    );
    let pk = value_bits as f64 * dim as f64;
    let n = codebook_size as f64;
    pk / (n.log2() + pk * n / count as f64)
}

/// Class counts and probabilities `count_j / M`.
pub fn empirical_distribution(assignment: &Assignment, codebook_size: usize) -> ClassDistribution {
    let mut counts = vec![0usize; codebook_size];
    for &c in assignment.as_slice() {
        counts[c] += 1;
    }
    let m = assignment.len();
    let probabilities = if m == 0 {
        vec![0.0; codebook_size]
    } else {
        counts.iter().map(|&c| c as f64 / m as f64).collect()
    };
    ClassDistribution { counts, probabilities }
}

/// Smallest `delta` with `||v_i - v'_{I(i)}|| <= delta` for every `i`; 0 for an empty set.
pub fn coverage_radius(set: &VectorSet, codebook: &Codebook, assignment: &Assignment) -> Result<f64> {
    check_consistent(set, codebook, assignment)?;
    Ok(residual_norms(set, codebook, assignment).fold(0.0, f64::max))
}

/// `a * delta + b * H(P)` with the nearest-neighbor assignment of `set`.
pub fn entropy_objective(
    set: &VectorSet,
    codebook: &Codebook,
    params: EntropyObjectiveParams,
) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::invalid("entropy objective needs at least one vector"));
    }
    let assignment = classify_all(set, codebook)?;
    let delta = coverage_radius(set, codebook, &assignment)?;
    let h = empirical_distribution(&assignment, codebook.len()).entropy_bits();
    Ok(params.a * delta + params.b * h)
}

/// Distinct vectors of `set`, sorted lexicographically. `-0.0` and `0.0` are
/// treated as equal.
pub fn distinct_vectors(set: &VectorSet) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = set
        .iter()
        .map(|v| v.iter().map(|x| x + 0.0).collect())
        .collect();
    rows.sort_by(|a, b| lex_cmp(a, b));
    rows.dedup();
    rows
}

/// Lexicographic total order on equal-length vectors.
pub fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Result of [`train_codebook`].
#[derive(Clone, Debug)]
pub struct TrainedCodebook {
    pub codebook: Codebook,
    pub assignment: Assignment,
    /// Distortion after initialization and after every accepted iteration.
    pub distortion_history: Vec<f64>,
}

impl TrainedCodebook {
    pub fn distortion(&self) -> f64 {
        *self.distortion_history.last().expect("history is never empty")
    }
}

/// LBG-style training: classify, recenter to class centroids, repeat.
///
/// Initialization picks a seeded random distinct vector, then repeatedly the
/// distinct vector farthest from the current picks. Empty classes are reseeded
/// with the vector farthest from its codevector. A recentering step that would
/// increase `D` is rejected and training stops. The result may hold fewer than
/// `n` codevectors when the set has fewer than `n` distinct vectors.
pub fn train_codebook(set: &VectorSet, n: usize, seed: u64) -> Result<TrainedCodebook> {
    if n == 0 || n > set.len() {
        return Err(Error::invalid(format!(
            "codebook size {n} must lie in 1..={} (the vector count)",
            set.len()
        )));
    }
    let dim = set.dim();
    let mut rows = init_rows(set, n, seed);
    let mut class_of = classify_rows(set, &rows);
    let mut d = flat_distortion(set, &rows, &class_of);
    let mut history = vec![d];

    for _ in 0..MAX_TRAIN_ITERATIONS {
        if d == 0.0 {
            break;
        }
        let candidate = recenter(set, &rows, &class_of);
        let cand_class = classify_rows(set, &candidate);
        let cand_d = flat_distortion(set, &candidate, &cand_class);
        if cand_d > d {
            break;
        }
        let improvement = d - cand_d;
        rows = candidate;
        class_of = cand_class;
        history.push(cand_d);
        let prev = d;
        d = cand_d;
        if improvement <= TRAIN_REL_TOLERANCE * prev {
            break;
        }
    }

    // merge duplicates; dropping a later duplicate never changes D
    let mut unique: Vec<Vec<f64>> = Vec::with_capacity(rows.len());
    for r in rows {
        if !unique.contains(&r) {
            unique.push(r);
        }
    }
    let codebook = Codebook::from_rows(dim, &unique)?;
    let assignment = Assignment(classify_rows(set, &unique));
    Ok(TrainedCodebook { codebook, assignment, distortion_history: history })
}

fn init_rows(set: &VectorSet, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let distinct = distinct_vectors(set);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.random_range(0..distinct.len());
    let mut picked = vec![first];
    let mut min_d: Vec<f64> = distinct.iter().map(|v| squared_distance(v, &distinct[first])).collect();
    while picked.len() < n.min(distinct.len()) {
        let (far, far_d) = min_d
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc });
        if far_d <= 0.0 {
            break;
        }
        picked.push(far);
        for (m, v) in min_d.iter_mut().zip(&distinct) {
            *m = m.min(squared_distance(v, &distinct[far]));
        }
    }
    picked.into_iter().map(|i| distinct[i].clone()).collect()
}

fn flat_distortion(set: &VectorSet, rows: &[Vec<f64>], class_of: &[usize]) -> f64 {
    set.iter().zip(class_of).map(|(v, &c)| distance(v, &rows[c])).sum()
}

fn recenter(set: &VectorSet, rows: &[Vec<f64>], class_of: &[usize]) -> Vec<Vec<f64>> {
    let dim = set.dim();
    let mut sums = vec![vec![0.0; dim]; rows.len()];
    let mut counts = vec![0usize; rows.len()];
    for (v, &c) in set.iter().zip(class_of) {
        counts[c] += 1;
        for (s, x) in sums[c].iter_mut().zip(v) {
            *s += x;
        }
    }
    let mut used = vec![false; set.len()];
    let mut out = Vec::with_capacity(rows.len());
    for (j, (sum, &count)) in sums.into_iter().zip(&counts).enumerate() {
        if count > 0 {
            out.push(sum.into_iter().map(|s| s / count as f64).collect());
            continue;
        }
        // empty class: reseed with the worst-served vector
        let mut far = None;
        let mut far_d = -1.0;
        for (i, (v, &c)) in set.iter().zip(class_of).enumerate() {
            let d = squared_distance(v, &rows[c]);
            if !used[i] && d > far_d {
                far = Some(i);
                far_d = d;
            }
        }
        match far {
            Some(i) => {
                used[i] = true;
                out.push(set.get(i).to_vec());
            }
            None => out.push(rows[j].clone()),
        }
    }
    out
}
