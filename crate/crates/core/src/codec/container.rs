//! The SEEQ container.
//!
//! ```text
//! magic    "SEEQ"
//! version  u8 (= 1)
//! header   u32 LE: width, height, P, block_w, block_h, depth,
//!          then per level: codebook size N_L, sample width S_L
//! payload  one MSB-first bit stream, zero-padded to a byte:
//!          codebooks of every level (N_L * k samples of S_L bits; level 0
//!          unsigned, deeper levels two's complement), then the index streams
//!          of every level (ceil(log2(N_L + 1)) bits each, 0 = stop)
//! ```
//!
//! Level 0 holds one index per block. Level `L > 0` holds one index per block
//! whose level `L - 1` index was not the stop symbol, in block order.

use super::bits::{BitReader, BitWriter};
use crate::error::{Error, Result};
use crate::see::index_width;

pub const MAGIC: &[u8; 4] = b"SEEQ";
pub const VERSION: u8 = 1;

const FIXED_HEADER_LEN: usize = 4 + 1 + 6 * 4;
const MAX_DEPTH: u32 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LevelHeader {
    pub codebook_size: u32,
    pub sample_bits: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContainerHeader {
    pub width: u32,
    pub height: u32,
    pub value_bits: u32,
    pub block_w: u32,
    pub block_h: u32,
    pub levels: Vec<LevelHeader>,
}

impl ContainerHeader {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn block_dim(&self) -> usize {
        self.block_w as usize * self.block_h as usize
    }

    pub fn block_count(&self) -> usize {
        (self.width.div_ceil(self.block_w) as usize) * (self.height.div_ceil(self.block_h) as usize)
    }

    fn encoded_len(&self) -> usize {
        FIXED_HEADER_LEN + 8 * self.levels.len()
    }
}

/// One level: its codebook (flat, `N * k` integer samples) and index stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContainerLevel {
    pub codebook: Vec<i64>,
    pub indices: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Container {
    pub header: ContainerHeader,
    pub levels: Vec<ContainerLevel>,
}

fn derr(offset: usize, message: impl Into<String>) -> Error {
    Error::Decode { offset, message: message.into() }
}

/// Width of the smallest two's-complement field holding `v`.
pub(crate) fn signed_width(v: i64) -> u32 {
    let magnitude = if v < 0 { !v } else { v };
    64 - magnitude.leading_zeros() + 1
}

impl Container {
    /// Checks the structural invariants that `from_bytes` enforces on input.
    pub fn validate(&self) -> Result<()> {
        let h = &self.header;
        if h.width == 0 || h.height == 0 || h.block_w == 0 || h.block_h == 0 {
            return Err(Error::invalid("container dimensions must be positive"));
        }
        if !(1..=16).contains(&h.value_bits) {
            return Err(Error::invalid("sample depth must lie in 1..=16"));
        }
        if self.levels.len() != h.levels.len() {
            return Err(Error::invalid("level count disagrees with header"));
        }
        let k = h.block_dim();
        let mut active = h.block_count();
        for (l, (lh, level)) in h.levels.iter().zip(&self.levels).enumerate() {
            if lh.codebook_size == 0 || level.codebook.len() != lh.codebook_size as usize * k {
                return Err(Error::invalid(format!("level {l} codebook size mismatch")));
            }
            if level.indices.len() != active {
                return Err(Error::invalid(format!(
                    "level {l} has {} indices, {active} blocks are active",
                    level.indices.len()
                )));
            }
            if level.indices.iter().any(|&i| i > lh.codebook_size) {
                return Err(Error::invalid(format!("level {l} index out of range")));
            }
            let fits = |v: i64| {
                if l == 0 {
                    v >= 0 && (v as u64) < (1u64 << lh.sample_bits)
                } else {
                    signed_width(v) <= lh.sample_bits
                }
            };
            if lh.sample_bits == 0 || lh.sample_bits > 63 || !level.codebook.iter().all(|&v| fits(v)) {
                return Err(Error::invalid(format!("level {l} samples do not fit {} bits", lh.sample_bits)));
            }
            if l == 0 && lh.sample_bits != h.value_bits {
                return Err(Error::invalid("level 0 sample width must equal the image depth"));
            }
            active = level.indices.iter().filter(|&&i| i != 0).count();
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let h = &self.header;
        let mut out = Vec::with_capacity(h.encoded_len());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        for v in [h.width, h.height, h.value_bits, h.block_w, h.block_h, h.levels.len() as u32] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for lh in &h.levels {
            out.extend_from_slice(&lh.codebook_size.to_le_bytes());
            out.extend_from_slice(&lh.sample_bits.to_le_bytes());
        }
        let mut bits = BitWriter::default();
        for (lh, level) in h.levels.iter().zip(&self.levels) {
            let mask = if lh.sample_bits == 64 { u64::MAX } else { (1u64 << lh.sample_bits) - 1 };
            for &v in &level.codebook {
                bits.write(v as u64 & mask, lh.sample_bits);
            }
        }
        for (lh, level) in h.levels.iter().zip(&self.levels) {
            let width = index_width(lh.codebook_size as usize);
            for &i in &level.indices {
                bits.write(u64::from(i), width);
            }
        }
        out.extend(bits.finish());
        Ok(out)
    }

    /// Parses and fully validates a container. Fails closed: any mismatch in
    /// magic, version, lengths, index ranges or padding is an error.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(derr(0, "bad magic, expected \"SEEQ\""));
        }
        match bytes.get(4) {
            Some(&VERSION) => {}
            Some(v) => return Err(derr(4, format!("unsupported version {v}"))),
            None => return Err(derr(4, "truncated before version")),
        }
        let read_u32 = |at: usize| -> Result<u32> {
            bytes
                .get(at..at + 4)
                .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .ok_or_else(|| derr(bytes.len(), "truncated header"))
        };
        let [width, height, value_bits, block_w, block_h, depth] =
            [5, 9, 13, 17, 21, 25].map(read_u32);
        let (width, height, value_bits, block_w, block_h, depth) =
            (width?, height?, value_bits?, block_w?, block_h?, depth?);
        if width == 0 || height == 0 {
            return Err(derr(5, "image dimensions must be positive"));
        }
        if !(1..=16).contains(&value_bits) {
            return Err(derr(13, format!("sample depth {value_bits} outside 1..=16")));
        }
        if block_w == 0 || block_h == 0 {
            return Err(derr(17, "block dimensions must be positive"));
        }
        if depth == 0 || depth > MAX_DEPTH {
            return Err(derr(25, format!("depth {depth} outside 1..={MAX_DEPTH}")));
        }
        let mut levels = Vec::with_capacity(depth as usize);
        for l in 0..depth as usize {
            let at = FIXED_HEADER_LEN + 8 * l;
            let codebook_size = read_u32(at)?;
            let sample_bits = read_u32(at + 4)?;
            if codebook_size == 0 {
                return Err(derr(at, format!("level {l} has an empty codebook")));
            }
            let valid_width = if l == 0 { sample_bits == value_bits } else { (2..=63).contains(&sample_bits) };
            if !valid_width {
                return Err(derr(at + 4, format!("level {l} sample width {sample_bits} is invalid")));
            }
            levels.push(LevelHeader { codebook_size, sample_bits });
        }
        let header = ContainerHeader { width, height, value_bits, block_w, block_h, levels };
        let payload_at = header.encoded_len();
        let payload = &bytes[payload_at..];
        let k = header.block_dim();

        let mut reader = BitReader::new(payload);
        let mut codebooks = Vec::with_capacity(header.depth());
        for (l, lh) in header.levels.iter().enumerate() {
            let samples = lh.codebook_size as usize * k;
            if samples.saturating_mul(lh.sample_bits as usize) > reader.remaining_bits() {
                return Err(derr(bytes.len(), format!("payload truncated in level {l} codebook")));
            }
            let mut book = Vec::with_capacity(samples);
            for _ in 0..samples {
                let raw = reader.read(lh.sample_bits).expect("length checked above");
                book.push(if l == 0 { raw as i64 } else { sign_extend(raw, lh.sample_bits) });
            }
            codebooks.push(book);
        }

        let mut active = header.block_count();
        let mut out_levels = Vec::with_capacity(header.depth());
        for ((l, lh), codebook) in header.levels.iter().enumerate().zip(codebooks) {
            let width = index_width(lh.codebook_size as usize);
            let mut indices = Vec::with_capacity(active.min(reader.remaining_bits()));
            for _ in 0..active {
                let at = payload_at + reader.byte_offset();
                let i = reader
                    .read(width)
                    .ok_or_else(|| derr(bytes.len(), format!("payload truncated in level {l} indices")))?;
                if i > u64::from(lh.codebook_size) {
                    return Err(derr(at, format!("level {l} index {i} exceeds codebook size {}", lh.codebook_size)));
                }
                indices.push(i as u32);
            }
            active = indices.iter().filter(|&&i| i != 0).count();
            out_levels.push(ContainerLevel { codebook, indices });
        }

        let used = reader.consumed_bytes();
        if payload.len() != used {
            return Err(derr(payload_at + used, format!("{} trailing bytes", payload.len() - used)));
        }
        let pad = reader.remaining_bits() as u32;
        if pad > 0 && reader.read(pad) != Some(0) {
            return Err(derr(bytes.len() - 1, "nonzero padding bits"));
        }
        Ok(Container { header, levels: out_levels })
    }
}

fn sign_extend(raw: u64, width: u32) -> i64 {
    let shift = 64 - width;
    ((raw << shift) as i64) >> shift
}
