//! Binary PGM (`P5`) reading and writing.

use super::ImageGrid;
use crate::error::{Error, Result};

fn err(offset: usize, message: impl Into<String>) -> Error {
    Error::Pgm { offset, message: message.into() }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    /// Skips whitespace and `#` comments. Comments run to the end of the line
    /// and must be terminated by a newline inside the header.
    fn skip_separators(&mut self) -> Result<usize> {
        let start = self.pos;
        while let Some(&b) = self.bytes.get(self.pos) {
            match b {
                b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c => self.pos += 1,
                b'#' => {
                    let comment = self.pos;
                    while let Some(&c) = self.bytes.get(self.pos) {
                        if c == b'\n' || c == b'\r' {
                            break;
                        }
                        self.pos += 1;
                    }
                    if self.pos >= self.bytes.len() {
                        return Err(err(comment, "unterminated comment in header"));
                    }
                }
                _ => break,
            }
        }
        Ok(self.pos - start)
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        if self.skip_separators()? == 0 {
            return Err(err(self.pos, format!("expected whitespace before {what}")));
        }
        let start = self.pos;
        let mut value: u64 = 0;
        while let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_digit() {
                break;
            }
            value = value * 10 + u64::from(b - b'0');
            if value > u64::from(u32::MAX) {
                return Err(err(start, format!("{what} is too large")));
            }
            self.pos += 1;
        }
        if self.pos == start {
            return Err(match self.bytes.get(self.pos) {
                Some(&b) => err(self.pos, format!("unexpected byte 0x{b:02x} while reading {what}")),
                None => err(self.pos, format!("header ends before {what}")),
            });
        }
        Ok(value as u32)
    }
}

/// Parses a binary PGM. `P` is 8 when maxval is at most 255, 16 otherwise.
/// Samples are kept as stored; they must not exceed maxval.
pub fn load_pgm(bytes: &[u8]) -> Result<ImageGrid> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(err(0, "expected binary PGM magic \"P5\""));
    }
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval_at = cur.pos;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(err(2, "width and height must be positive"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(err(maxval_at, format!("maxval {maxval} outside 1..=65535")));
    }
    match bytes.get(cur.pos) {
        Some(b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c) => cur.pos += 1,
        Some(_) => return Err(err(cur.pos, "expected a single whitespace byte after maxval")),
        None => return Err(err(cur.pos, "missing raster")),
    }

    let wide = maxval > 255;
    let count = width as usize * height as usize;
    let raster = &bytes[cur.pos..];
    let needed = count * if wide { 2 } else { 1 };
    if raster.len() < needed {
        return Err(err(bytes.len(), format!("raster truncated: {} of {needed} bytes", raster.len())));
    }
    let samples: Vec<u16> = if wide {
        raster[..needed].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
    } else {
        raster[..needed].iter().map(|&b| u16::from(b)).collect()
    };
    if let Some(i) = samples.iter().position(|&s| u32::from(s) > maxval) {
        let offset = cur.pos + if wide { 2 * i } else { i };
        return Err(err(offset, format!("sample {} exceeds maxval {maxval}", samples[i])));
    }
    ImageGrid::new(width as usize, height as usize, if wide { 16 } else { 8 }, samples)
}

/// Serializes with maxval `2^P - 1`; two bytes per sample (big-endian) when P > 8.
pub fn write_pgm(image: &ImageGrid) -> Vec<u8> {
    let maxval = image.max_value();
    let mut out = format!("P5\n{} {}\n{}\n", image.width(), image.height(), maxval).into_bytes();
    if maxval > 255 {
        for &s in image.samples() {
            out.extend_from_slice(&s.to_be_bytes());
        }
    } else {
        out.extend(image.samples().iter().map(|&s| s as u8));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_small_image() {
        let bytes = b"P5\n2 2\n255\n\x00\x80\xff\x07";
        let img = load_pgm(bytes).unwrap();
        assert_eq!((img.width(), img.height(), img.bits()), (2, 2, 8));
        assert_eq!(img.samples(), &[0, 128, 255, 7]);
    }

    #[test]
    fn ascii_pgm_rejected() {
        let e = load_pgm(b"P2\n2 2\n255\n0 1 2 3\n").unwrap_err();
        assert!(matches!(e, Error::Pgm { offset: 0, .. }));
    }

    #[test]
    fn comments_do_not_change_result() {
        let plain = b"P5\n3 1\n255\n\x01\x02\x03".to_vec();
        let commented = b"P5\n# made by hand\n3 # width\n1\n# maxval next\n255\n\x01\x02\x03".to_vec();
        assert_eq!(load_pgm(&plain).unwrap(), load_pgm(&commented).unwrap());
    }

    #[test]
    fn error_offsets() {
        assert!(matches!(load_pgm(b"P5\n2 2\n255\n\x00"), Err(Error::Pgm { offset: 12, .. })));
        assert!(matches!(load_pgm(b"P5\n2 2\n0\n\x00"), Err(Error::Pgm { offset: 6, .. })));
        assert!(matches!(load_pgm(b"P5\n2 # no end"), Err(Error::Pgm { offset: 5, .. })));
        assert!(matches!(load_pgm(b"P5\n2 x\n255\n"), Err(Error::Pgm { offset: 5, .. })));
        assert!(matches!(load_pgm(b"P5\n1 1\n100\n\xc8"), Err(Error::Pgm { offset: 11, .. })));
    }

    #[test]
    fn sixteen_bit_round_trip() {
        let img = ImageGrid::new(3, 1, 16, vec![0, 300, 65535]).unwrap();
        let bytes = write_pgm(&img);
        assert_eq!(load_pgm(&bytes).unwrap(), img);
    }
}
