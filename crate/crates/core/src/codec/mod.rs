//! Images, block tiling and the SEEQ container codec.
//!
//! The encoder grows the greedy residual tree over an image's blocks level by
//! level. Every node's codevectors are interned into its level's codebook; a
//! block's path through the tree is stored as one index per level, index 0
//! marking the end of the path.

mod bits;
mod container;
mod pgm;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::see::{greedy_level, SeeConfig};
use crate::vq::{compression_ratio, VectorSet};

pub use container::{Container, ContainerHeader, ContainerLevel, LevelHeader, MAGIC, VERSION};
pub use pgm::{load_pgm, write_pgm};

use container::signed_width;

/// A grayscale image, samples row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageGrid {
    width: usize,
    height: usize,
    bits: u32,
    samples: Vec<u16>,
}

impl ImageGrid {
    pub fn new(width: usize, height: usize, bits: u32, samples: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        if !(1..=16).contains(&bits) {
            return Err(Error::invalid(format!("sample depth {bits} outside 1..=16")));
        }
        if samples.len() != width * height {
            return Err(Error::invalid(format!(
                "{} samples for a {width}x{height} image",
                samples.len()
            )));
        }
        let max = max_for(bits);
        if let Some(s) = samples.iter().find(|&&s| s > max) {
            return Err(Error::invalid(format!("sample {s} exceeds {max}")));
        }
        Ok(Self { width, height, bits, samples })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn samples(&self) -> &[u16] {
        &self.samples
    }

    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.samples[y * self.width + x]
    }

    pub fn max_value(&self) -> u16 {
        max_for(self.bits)
    }
}

fn max_for(bits: u32) -> u16 {
    ((1u32 << bits) - 1) as u16
}

/// Block shape and the value used to pad partial blocks at the right and
/// bottom edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockSpec {
    pub block_w: usize,
    pub block_h: usize,
    pub pad_value: u16,
}

impl Default for BlockSpec {
    fn default() -> Self {
        Self { block_w: 4, block_h: 4, pad_value: 0 }
    }
}

impl BlockSpec {
    pub fn new(block_w: usize, block_h: usize) -> Result<Self> {
        if block_w == 0 || block_h == 0 {
            return Err(Error::invalid("block dimensions must be positive"));
        }
        Ok(Self { block_w, block_h, pad_value: 0 })
    }

    pub fn with_pad(mut self, pad_value: u16) -> Self {
        self.pad_value = pad_value;
        self
    }

    /// Vector dimension `block_w * block_h`.
    pub fn k(&self) -> usize {
        self.block_w * self.block_h
    }

    fn grid(&self, width: usize, height: usize) -> (usize, usize) {
        (width.div_ceil(self.block_w), height.div_ceil(self.block_h))
    }
}

impl FromStr for BlockSpec {
    type Err = Error;

    /// Parses `"WxH"`, e.g. `"4x4"`.
    fn from_str(s: &str) -> Result<Self> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| Error::invalid(format!("block spec {s:?} is not WxH")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| Error::invalid(format!("block spec {s:?} is not WxH")))
        };
        Self::new(parse(w)?, parse(h)?)
    }
}

/// Tiles the image left to right, top to bottom into `block_w x block_h`
/// vectors (row-major inside a block). Partial blocks are padded.
pub fn extract_blocks(image: &ImageGrid, spec: &BlockSpec) -> Result<VectorSet> {
    if spec.block_w == 0 || spec.block_h == 0 {
        return Err(Error::invalid("block dimensions must be positive"));
    }
    if spec.pad_value > image.max_value() {
        return Err(Error::invalid(format!("pad value {} exceeds {}", spec.pad_value, image.max_value())));
    }
    let (gw, gh) = spec.grid(image.width, image.height);
    let mut data = Vec::with_capacity(gw * gh * spec.k());
    for by in 0..gh {
        for bx in 0..gw {
            for dy in 0..spec.block_h {
                for dx in 0..spec.block_w {
                    let (x, y) = (bx * spec.block_w + dx, by * spec.block_h + dy);
                    let s = if x < image.width && y < image.height { image.get(x, y) } else { spec.pad_value };
                    data.push(f64::from(s));
                }
            }
        }
    }
    VectorSet::new(spec.k(), image.bits, data)
}

/// Inverse of [`extract_blocks`]: crops the padding, rounds half away from
/// zero and clamps to `[0, 2^bits - 1]`.
pub fn assemble_blocks(
    vectors: &VectorSet,
    width: usize,
    height: usize,
    spec: &BlockSpec,
    bits: u32,
) -> Result<ImageGrid> {
    if width == 0 || height == 0 || spec.block_w == 0 || spec.block_h == 0 {
        return Err(Error::invalid("image and block dimensions must be positive"));
    }
    if !(1..=16).contains(&bits) {
        return Err(Error::invalid(format!("sample depth {bits} outside 1..=16")));
    }
    let (gw, gh) = spec.grid(width, height);
    if vectors.dim() != spec.k() || vectors.len() != gw * gh {
        return Err(Error::invalid(format!(
            "expected {} vectors of dimension {}, got {} of dimension {}",
            gw * gh,
            spec.k(),
            vectors.len(),
            vectors.dim()
        )));
    }
    let max = f64::from(max_for(bits));
    let mut samples = vec![0u16; width * height];
    for (b, v) in vectors.iter().enumerate() {
        let (bx, by) = (b % gw, b / gw);
        for dy in 0..spec.block_h {
            for dx in 0..spec.block_w {
                let (x, y) = (bx * spec.block_w + dx, by * spec.block_h + dy);
                if x < width && y < height {
                    samples[y * width + x] = v[dy * spec.block_w + dx].round().clamp(0.0, max) as u16;
                }
            }
        }
    }
    ImageGrid::new(width, height, bits, samples)
}

/// Encodes the image as a SEEQ container.
///
/// Nodes with at least two vectors take their codebook from
/// [`greedy_level`]; a single remaining vector is coded by itself, so with
/// unbounded depth and zero tolerance the container is lossless. Honors
/// `config.max_depth` (lossy truncation) and refuses when a block's path would
/// exceed `config.depth_cap` levels.
pub fn encode(image: &ImageGrid, spec: &BlockSpec, config: &SeeConfig) -> Result<Container> {
    let set = extract_blocks(image, spec)?;
    let tol = config.tolerance_for(&set);
    let k = spec.k();
    let m = set.len();
    let limit = config.max_depth.unwrap_or(usize::MAX);
    if limit == 0 {
        return Err(Error::invalid("a container needs at least one level"));
    }

    let mut residual: Vec<Vec<f64>> = set.iter().map(<[f64]>::to_vec).collect();
    let mut groups: Vec<Vec<usize>> = vec![(0..m).collect()];
    let mut entering: Vec<usize> = (0..m).collect();
    let mut header_levels = Vec::new();
    let mut levels = Vec::new();

    while !groups.is_empty() && levels.len() < limit {
        let depth = levels.len();
        if depth >= config.depth_cap {
            return Err(Error::refused(format!("recursion depth cap {} exceeded", config.depth_cap)));
        }
        let choices = groups
            .par_iter()
            .map(|g| node_codebook(g, &residual, k, image.bits, config, depth, tol))
            .collect::<Result<Vec<_>>>()?;

        let mut book: Vec<i64> = Vec::new();
        let mut interned: HashMap<Vec<i64>, u32> = HashMap::new();
        let mut index = vec![0u32; m];
        let mut next_groups = Vec::new();
        for (g, (rows, class_of)) in groups.iter().zip(choices) {
            let ids: Vec<u32> = rows
                .iter()
                .map(|r| {
                    let key: Vec<i64> = r.iter().map(|&x| x.round() as i64).collect();
                    *interned.entry(key.clone()).or_insert_with(|| {
                        book.extend(&key);
                        (book.len() / k) as u32
                    })
                })
                .collect();
            let mut children: Vec<Vec<usize>> = vec![Vec::new(); rows.len()];
            for (&b, &j) in g.iter().zip(&class_of) {
                index[b] = ids[j];
                for (x, c) in residual[b].iter_mut().zip(&rows[j]) {
                    *x -= c.round();
                }
                if residual[b].iter().map(|x| x * x).sum::<f64>().sqrt() > tol {
                    children[j].push(b);
                }
            }
            next_groups.extend(children.into_iter().filter(|c| !c.is_empty()));
        }

        let sample_bits = if depth == 0 {
            image.bits
        } else {
            book.iter().map(|&v| signed_width(v)).max().unwrap_or(1).max(image.bits + 1)
        };
        header_levels.push(LevelHeader { codebook_size: (book.len() / k) as u32, sample_bits });
        let indices: Vec<u32> = entering.iter().map(|&b| index[b]).collect();
        entering = indices.iter().zip(&entering).filter(|(&i, _)| i != 0).map(|(_, &b)| b).collect();
        levels.push(ContainerLevel { codebook: book, indices });
        groups = next_groups;
    }

    let container = Container {
        header: ContainerHeader {
            width: image.width as u32,
            height: image.height as u32,
            value_bits: image.bits,
            block_w: spec.block_w as u32,
            block_h: spec.block_h as u32,
            levels: header_levels,
        },
        levels,
    };
    container.validate()?;
    Ok(container)
}

type NodeChoice = (Vec<Vec<f64>>, Vec<usize>);

fn node_codebook(
    group: &[usize],
    residual: &[Vec<f64>],
    k: usize,
    value_bits: u32,
    config: &SeeConfig,
    depth: usize,
    tol: f64,
) -> Result<NodeChoice> {
    if group.len() == 1 {
        return Ok((vec![residual[group[0]].clone()], vec![0]));
    }
    let data = group.iter().flat_map(|&b| residual[b].iter().copied()).collect();
    let set = VectorSet::new(k, value_bits, data)?;
    let choice = greedy_level(&set, config, depth, tol)?;
    Ok((choice.rows, choice.class_of))
}

/// Decodes every level.
pub fn decode(container: &Container) -> Result<ImageGrid> {
    decode_depth(container, None)
}

/// Decodes using only the first `depth` levels (all when `None`): each block
/// is the sum of its codevectors along its path.
pub fn decode_depth(container: &Container, depth: Option<usize>) -> Result<ImageGrid> {
    container.validate()?;
    let h = &container.header;
    let depth = depth.unwrap_or(h.depth());
    if depth == 0 {
        return Err(Error::invalid("decode depth must be at least 1"));
    }
    let k = h.block_dim();
    let m = h.block_count();
    let mut sums = vec![0i64; m * k];
    let mut entering: Vec<usize> = (0..m).collect();
    for level in container.levels.iter().take(depth) {
        let mut next = Vec::with_capacity(entering.len());
        for (&b, &i) in entering.iter().zip(&level.indices) {
            if i != 0 {
                let row = &level.codebook[(i as usize - 1) * k..i as usize * k];
                for (s, &c) in sums[b * k..(b + 1) * k].iter_mut().zip(row) {
                    *s += c;
                }
                next.push(b);
            }
        }
        entering = next;
    }
    let spec = BlockSpec::new(h.block_w as usize, h.block_h as usize)?;
    let vectors = VectorSet::new(k, h.value_bits, sums.into_iter().map(|s| s as f64).collect())?;
    assemble_blocks(&vectors, h.width as usize, h.height as usize, &spec, h.value_bits)
}

/// The entropy estimate carried by the container's path tree: at each node,
/// blocks sharing a path prefix are split by their next index and the
/// recursion continues into the blocks that do not stop.
pub fn container_see_bits(container: &Container) -> f64 {
    let levels = &container.levels;
    // position of each block in each level's index stream
    let m = container.header.block_count();
    let mut position: Vec<HashMap<usize, usize>> = Vec::with_capacity(levels.len());
    let mut entering: Vec<usize> = (0..m).collect();
    for level in levels {
        position.push(entering.iter().enumerate().map(|(p, &b)| (b, p)).collect());
        entering = entering.iter().zip(&level.indices).filter(|(_, &i)| i != 0).map(|(&b, _)| b).collect();
    }
    let index_at = |l: usize, b: usize| -> u32 {
        match (levels.get(l), position.get(l).and_then(|p| p.get(&b))) {
            (Some(level), Some(&p)) => level.indices[p],
            _ => 0,
        }
    };

    fn see(set: &[usize], l: usize, index_at: &dyn Fn(usize, usize) -> u32) -> f64 {
        if set.len() <= 1 {
            return 0.0;
        }
        let mut classes: Vec<(u32, Vec<usize>)> = Vec::new();
        for &b in set {
            let i = index_at(l, b);
            match classes.iter_mut().find(|(j, _)| *j == i) {
                Some((_, members)) => members.push(b),
                None => classes.push((i, vec![b])),
            }
        }
        let total = set.len() as f64;
        classes
            .iter()
            .map(|(_, members)| {
                let p = members.len() as f64 / total;
                let delta: Vec<usize> = members.iter().copied().filter(|&b| index_at(l + 1, b) != 0).collect();
                p * (-p.log2() + 1.0) + delta.len() as f64 / total * see(&delta, l + 1, index_at)
            })
            .sum()
    }

    if levels.is_empty() {
        return 0.0;
    }
    let root: Vec<usize> = (0..m).collect();
    see(&root, 0, &index_at)
}

/// Quality and size figures of a container against its source image.
#[derive(Clone, Debug, PartialEq)]
pub struct CompressionReport {
    /// Flat-VQ ratio from the first level's header fields.
    pub t: f64,
    /// Raw image bits over container bits.
    pub actual_ratio: f64,
    /// Sum of per-block reconstruction error norms (in-image pixels only).
    pub distortion: f64,
    pub see_bits: f64,
    /// Largest per-block reconstruction error norm.
    pub coverage_radius: f64,
    /// `f64::INFINITY` when the reconstruction is exact.
    pub psnr: f64,
    pub container_bytes: usize,
    pub depth: usize,
}

impl CompressionReport {
    pub fn rows(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("T", self.t),
            ("actual_ratio", self.actual_ratio),
            ("D", self.distortion),
            ("see_bits", self.see_bits),
            ("delta", self.coverage_radius),
            ("psnr", self.psnr),
            ("container_bytes", self.container_bytes as f64),
            ("depth", self.depth as f64),
        ]
    }

    /// `metric,value` CSV.
    pub fn to_csv(&self) -> String {
        csv_rows(&self.rows())
    }
}

pub(crate) fn csv_rows(rows: &[(&str, f64)]) -> String {
    let mut out = String::from("metric,value\n");
    for (name, v) in rows {
        let _ = writeln!(out, "{name},{v}");
    }
    out
}

/// Compares `image` with the container's full-depth reconstruction.
pub fn report(image: &ImageGrid, container: &Container) -> Result<CompressionReport> {
    let h = &container.header;
    if h.width as usize != image.width || h.height as usize != image.height || h.value_bits != image.bits {
        return Err(Error::invalid("image and container disagree on dimensions or depth"));
    }
    let decoded = decode(container)?;
    let bytes = container.to_bytes()?.len();
    let raw_bits = (image.width * image.height) as f64 * f64::from(image.bits);
    let m = h.block_count();
    let (bw, bh) = (h.block_w as usize, h.block_h as usize);
    let gw = image.width.div_ceil(bw);

    let mut distortion = 0.0;
    let mut radius: f64 = 0.0;
    let mut squared_total = 0.0;
    for b in 0..m {
        let (bx, by) = (b % gw, b / gw);
        let mut sq = 0.0;
        for y in by * bh..((by + 1) * bh).min(image.height) {
            for x in bx * bw..((bx + 1) * bw).min(image.width) {
                let d = f64::from(image.get(x, y)) - f64::from(decoded.get(x, y));
                sq += d * d;
            }
        }
        squared_total += sq;
        distortion += sq.sqrt();
        radius = radius.max(sq.sqrt());
    }
    let mse = squared_total / (image.width * image.height) as f64;
    let max = f64::from(image.max_value());
    let psnr = if mse == 0.0 { f64::INFINITY } else { 10.0 * (max * max / mse).log10() };

    Ok(CompressionReport {
        t: compression_ratio(image.bits, h.block_dim(), h.levels[0].codebook_size as usize, m),
        actual_ratio: raw_bits / (bytes as f64 * 8.0),
        distortion,
        see_bits: container_see_bits(container),
        coverage_radius: radius,
        psnr,
        container_bytes: bytes,
        depth: h.depth(),
    })
}

/// PSNR of `decoded` against `image` with peak `2^P - 1`.
pub fn psnr(image: &ImageGrid, decoded: &ImageGrid) -> Result<f64> {
    if image.width != decoded.width || image.height != decoded.height || image.bits != decoded.bits {
        return Err(Error::invalid("images disagree on dimensions or depth"));
    }
    let sq: f64 = image
        .samples
        .iter()
        .zip(&decoded.samples)
        .map(|(&a, &b)| (f64::from(a) - f64::from(b)).powi(2))
        .sum();
    let mse = sq / image.samples.len() as f64;
    let max = f64::from(image.max_value());
    Ok(if mse == 0.0 { f64::INFINITY } else { 10.0 * (max * max / mse).log10() })
}
