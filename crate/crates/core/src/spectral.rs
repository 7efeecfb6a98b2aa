//! Unitary 2-D DFT, spectral compression operators and per-block spectral
//! entropy profiles.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{FftDirection, FftPlanner};

use crate::codec::{BlockSpec, ImageGrid};
use crate::error::{Error, Result};
use crate::see::{see_estimate, SeeConfig};
use crate::vq::VectorSet;

/// Row-major spectrum `X(w1, w2)`, `w1` along the width.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumGrid {
    pub width: usize,
    pub height: usize,
    pub coefficients: Vec<Complex64>,
}

impl SpectrumGrid {
    pub fn new(width: usize, height: usize, coefficients: Vec<Complex64>) -> Result<Self> {
        if width == 0 || height == 0 || coefficients.len() != width * height {
            return Err(Error::invalid("spectrum dimensions do not match its coefficients"));
        }
        if coefficients.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::invalid("spectrum coefficients must be finite"));
        }
        Ok(Self { width, height, coefficients })
    }

    pub fn get(&self, w1: usize, w2: usize) -> Complex64 {
        self.coefficients[w2 * self.width + w1]
    }

    /// `sum |X|^2`.
    pub fn energy(&self) -> f64 {
        self.coefficients.iter().map(Complex64::norm_sqr).sum()
    }

    /// Moves DC to `(width / 2, height / 2)`.
    pub fn centered(&self) -> Self {
        let (w, h) = (self.width, self.height);
        let mut out = vec![Complex64::default(); w * h];
        for y in 0..h {
            for x in 0..w {
                out[((y + h / 2) % h) * w + (x + w / 2) % w] = self.coefficients[y * w + x];
            }
        }
        Self { width: w, height: h, coefficients: out }
    }
}

fn transform(width: usize, height: usize, data: &mut [Complex64], direction: FftDirection) {
    let mut planner = FftPlanner::new();
    let row_fft = planner.plan_fft(width, direction);
    let col_fft = planner.plan_fft(height, direction);
    for row in data.chunks_exact_mut(width) {
        row_fft.process(row);
    }
    let mut column = vec![Complex64::default(); height];
    for x in 0..width {
        for y in 0..height {
            column[y] = data[y * width + x];
        }
        col_fft.process(&mut column);
        for y in 0..height {
            data[y * width + x] = column[y];
        }
    }
    let scale = 1.0 / ((width * height) as f64).sqrt();
    for c in data.iter_mut() {
        *c *= scale;
    }
}

/// Unitary forward DFT of `width x height` real samples (row-major).
pub fn dft2_values(width: usize, height: usize, values: &[f64]) -> Result<SpectrumGrid> {
    if width == 0 || height == 0 || values.len() != width * height {
        return Err(Error::invalid("sample count does not match dimensions"));
    }
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform(width, height, &mut data, FftDirection::Forward);
    SpectrumGrid::new(width, height, data)
}

/// Unitary forward DFT, `X(w1, w2) = (WH)^-1/2 sum x(n1, n2) e^{-2 pi i (w1 n1 / W + w2 n2 / H)}`.
pub fn dft2(image: &ImageGrid) -> SpectrumGrid {
    let values: Vec<f64> = image.samples().iter().map(|&s| f64::from(s)).collect();
    dft2_values(image.width(), image.height(), &values).expect("image dimensions are valid")
}

/// Unitary inverse DFT, complex result.
pub fn idft2_complex(spectrum: &SpectrumGrid) -> Vec<Complex64> {
    let mut data = spectrum.coefficients.clone();
    transform(spectrum.width, spectrum.height, &mut data, FftDirection::Inverse);
    data
}

/// Unitary inverse DFT, real parts.
pub fn idft2(spectrum: &SpectrumGrid) -> Vec<f64> {
    idft2_complex(spectrum).into_iter().map(|c| c.re).collect()
}

/// Frequencies retained by a truncation, in the spectrum's natural order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeepMask {
    pub width: usize,
    pub height: usize,
    pub keep: Vec<bool>,
}

impl KeepMask {
    pub fn new(width: usize, height: usize, keep: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || keep.len() != width * height {
            return Err(Error::invalid("keep mask dimensions do not match"));
        }
        Ok(Self { width, height, keep })
    }

    pub fn dc_only(width: usize, height: usize) -> Self {
        let mut keep = vec![false; width * height];
        keep[0] = true;
        Self { width, height, keep }
    }

    /// Keeps frequencies whose wrapped distance to DC is at most `radius`.
    pub fn low_pass(width: usize, height: usize, radius: f64) -> Self {
        let wrap = |i: usize, n: usize| i.min(n - i) as f64;
        let keep = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| wrap(x, width).hypot(wrap(y, height)) <= radius)
            .collect();
        Self { width, height, keep }
    }

    pub fn retained(&self) -> usize {
        self.keep.iter().filter(|&&k| k).count()
    }
}

/// The operator `f` of the fixed-point constraint `x = f(x)`.
#[derive(Clone, Debug, PartialEq)]
pub enum CompressionOperator {
    Identity,
    /// `e^H e x`.
    DftRoundtrip,
    /// `e^H F e x` with `F` the diagonal keep mask.
    DftTruncate(KeepMask),
}

impl CompressionOperator {
    pub fn name(&self) -> String {
        match self {
            Self::Identity => "identity".into(),
            Self::DftRoundtrip => "dft_roundtrip".into(),
            Self::DftTruncate(m) => format!("dft_truncate({}/{})", m.retained(), m.keep.len()),
        }
    }

    /// `f(x)` as complex samples; the imaginary parts vanish unless the mask
    /// breaks conjugate symmetry.
    pub fn apply(&self, width: usize, height: usize, values: &[f64]) -> Result<Vec<Complex64>> {
        match self {
            Self::Identity => {
                if values.len() != width * height {
                    return Err(Error::invalid("sample count does not match dimensions"));
                }
                Ok(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
            }
            Self::DftRoundtrip => Ok(idft2_complex(&dft2_values(width, height, values)?)),
            Self::DftTruncate(mask) => {
                if mask.width != width || mask.height != height {
                    return Err(Error::invalid("keep mask dimensions do not match the image"));
                }
                let mut spectrum = dft2_values(width, height, values)?;
                for (c, &k) in spectrum.coefficients.iter_mut().zip(&mask.keep) {
                    if !k {
                        *c = Complex64::default();
                    }
                }
                Ok(idft2_complex(&spectrum))
            }
        }
    }
}

/// `||x - f(x)||_2`.
pub fn gate_residual(op: &CompressionOperator, image: &ImageGrid) -> Result<f64> {
    let values: Vec<f64> = image.samples().iter().map(|&s| f64::from(s)).collect();
    let fx = op.apply(image.width(), image.height(), &values)?;
    Ok(values.iter().zip(&fx).map(|(&x, y)| (Complex64::new(x, 0.0) - y).norm_sqr()).sum::<f64>().sqrt())
}

/// Uniform quantization of real and imaginary parts, `trunc(v / step)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SpectrumQuantizer {
    /// `None` derives one step per component from the spectrum.
    pub step: Option<f64>,
}

impl SpectrumQuantizer {
    pub fn with_step(step: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::invalid(format!("quantization step {step} must be positive")));
        }
        Ok(Self { step: Some(step) })
    }

    /// Steps for the real and imaginary parts. The default is
    /// `(max|c| - min|c|) / 64` per component, or 1 when that range is
    /// negligible against the spectrum's magnitude.
    pub fn steps(&self, spectrum: &SpectrumGrid) -> (f64, f64) {
        if let Some(s) = self.step {
            return (s, s);
        }
        let scale = spectrum
            .coefficients
            .iter()
            .map(|c| c.re.abs().max(c.im.abs()))
            .fold(1.0, f64::max);
        let derive = |part: fn(&Complex64) -> f64| {
            let (lo, hi) = spectrum
                .coefficients
                .iter()
                .map(|c| part(c).abs())
                .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
            let range = hi - lo;
            if range <= 1e-9 * scale {
                1.0
            } else {
                range / 64.0
            }
        };
        (derive(|c| c.re), derive(|c| c.im))
    }
}

fn quantize(v: f64, step: f64) -> f64 {
    (v / step).trunc() + 0.0
}

/// One block of the centered spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralBlockRow {
    pub block_x: usize,
    pub block_y: usize,
    /// 0 (lowest) to 7 (highest) radial frequency band.
    pub band: usize,
    pub re_bits: f64,
    pub im_bits: f64,
    pub total_bits: f64,
}

pub const BAND_COUNT: usize = 8;

/// Per-block `SEE(Re) + SEE(Im)` of the centered, quantized spectrum.
///
/// Blocks tile the centered spectrum like [`crate::codec::extract_blocks`];
/// edge blocks hold only the coefficients inside the grid. A block's band is
/// `floor(8 r / r_max)` (capped at 7) where `r` is the distance from DC to the
/// block's nearest coefficient and `r_max` the largest such distance in the
/// grid. Rows are sorted by band, tiling order within a band.
pub fn spectrum_block_see(
    image: &ImageGrid,
    spec: &BlockSpec,
    quant: &SpectrumQuantizer,
    config: &SeeConfig,
) -> Result<Vec<SpectralBlockRow>> {
    if spec.block_w == 0 || spec.block_h == 0 {
        return Err(Error::invalid("block dimensions must be positive"));
    }
    let spectrum = dft2(image);
    let (re_step, im_step) = quant.steps(&spectrum);
    let centered = spectrum.centered();
    let (w, h) = (centered.width, centered.height);
    let (cx, cy) = ((w / 2) as f64, (h / 2) as f64);
    let radius = |x: usize, y: usize| (x as f64 - cx).hypot(y as f64 - cy);
    let r_max = (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).map(|(x, y)| radius(x, y)).fold(0.0, f64::max);

    let (gw, gh) = (w.div_ceil(spec.block_w), h.div_ceil(spec.block_h));
    let blocks: Vec<(usize, usize)> = (0..gh).flat_map(|by| (0..gw).map(move |bx| (bx, by))).collect();
    let mut rows = blocks
        .par_iter()
        .map(|&(bx, by)| {
            let mut re = Vec::new();
            let mut im = Vec::new();
            let mut r_min = f64::INFINITY;
            for y in by * spec.block_h..((by + 1) * spec.block_h).min(h) {
                for x in bx * spec.block_w..((bx + 1) * spec.block_w).min(w) {
                    let c = centered.coefficients[y * w + x];
                    re.push(quantize(c.re, re_step));
                    im.push(quantize(c.im, im_step));
                    r_min = r_min.min(radius(x, y));
                }
            }
            let band = if r_max == 0.0 {
                0
            } else {
                ((BAND_COUNT as f64 * r_min / r_max).floor() as usize).min(BAND_COUNT - 1)
            };
            let re_bits = see_estimate(&VectorSet::scalars(&re), config)?.0;
            let im_bits = see_estimate(&VectorSet::scalars(&im), config)?.0;
            Ok(SpectralBlockRow { block_x: bx, block_y: by, band, re_bits, im_bits, total_bits: re_bits + im_bits })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| r.band);
    Ok(rows)
}

pub fn profile_csv(rows: &[SpectralBlockRow]) -> String {
    let mut out = String::from("block_x,block_y,band,re_bits,im_bits,total_bits\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{},{}", r.block_x, r.block_y, r.band, r.re_bits, r.im_bits, r.total_bits);
    }
    out
}

/// Mean `total_bits` per band; `None` for bands without blocks.
pub fn band_means(rows: &[SpectralBlockRow]) -> Vec<Option<f64>> {
    (0..BAND_COUNT)
        .map(|b| {
            let bits: Vec<f64> = rows.iter().filter(|r| r.band == b).map(|r| r.total_bits).collect();
            (!bits.is_empty()).then(|| bits.iter().sum::<f64>() / bits.len() as f64)
        })
        .collect()
}

/// One operator of the gate comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct GateRow {
    pub operator: String,
    pub residual: f64,
    /// Identity: raw sample bits. Spectral operators: retained coefficients
    /// times `SEE(Re) + SEE(Im)` of the quantized retained coefficients.
    pub bits: f64,
    /// Raw bits over `bits`; `None` when `bits` is 0.
    pub ratio: Option<f64>,
}

/// Evaluates every operator independently; rows sorted by `bits`.
pub fn gate_entropy_table(
    image: &ImageGrid,
    ops: &[CompressionOperator],
    quant: &SpectrumQuantizer,
    config: &SeeConfig,
) -> Result<Vec<GateRow>> {
    let raw = (image.width() * image.height()) as f64 * f64::from(image.bits());
    let spectrum = dft2(image);
    let (re_step, im_step) = quant.steps(&spectrum);
    let mut rows = ops
        .iter()
        .map(|op| {
            let residual = gate_residual(op, image)?;
            let bits = match op {
                CompressionOperator::Identity => raw,
                CompressionOperator::DftRoundtrip | CompressionOperator::DftTruncate(_) => {
                    let kept: Vec<Complex64> = match op {
                        CompressionOperator::DftTruncate(mask) => spectrum
                            .coefficients
                            .iter()
                            .zip(&mask.keep)
                            .filter(|(_, &k)| k)
                            .map(|(c, _)| *c)
                            .collect(),
                        _ => spectrum.coefficients.clone(),
                    };
                    let re: Vec<f64> = kept.iter().map(|c| quantize(c.re, re_step)).collect();
                    let im: Vec<f64> = kept.iter().map(|c| quantize(c.im, im_step)).collect();
                    let per = see_estimate(&VectorSet::scalars(&re), config)?.0
                        + see_estimate(&VectorSet::scalars(&im), config)?.0;
                    kept.len() as f64 * per
                }
            };
            let ratio = (bits > 0.0).then(|| raw / bits);
            Ok(GateRow { operator: op.name(), residual, bits, ratio })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.bits.total_cmp(&b.bits));
    Ok(rows)
}
