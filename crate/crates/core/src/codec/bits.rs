//! MSB-first bit packing.

#[derive(Default)]
pub(crate) struct BitWriter {
    bytes: Vec<u8>,
    used: u32,
}

impl BitWriter {
    /// Appends the low `width` bits of `value`, most significant first.
    pub fn write(&mut self, value: u64, width: u32) {
        for shift in (0..width).rev() {
            if self.used == 0 {
                self.bytes.push(0);
            }
            let bit = ((value >> shift) & 1) as u8;
            *self.bytes.last_mut().expect("pushed above") |= bit << (7 - self.used);
            self.used = (self.used + 1) % 8;
        }
    }

    pub fn finish(self) -> Vec<u8> {
        self.bytes
    }
}

pub(crate) struct BitReader<'a> {
    bytes: &'a [u8],
    bit: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, bit: 0 }
    }

    pub fn remaining_bits(&self) -> usize {
        self.bytes.len() * 8 - self.bit
    }

    /// Byte offset of the next unread bit.
    pub fn byte_offset(&self) -> usize {
        self.bit / 8
    }

    pub fn read(&mut self, width: u32) -> Option<u64> {
        if (width as usize) > self.remaining_bits() {
            return None;
        }
        let mut value = 0u64;
        for _ in 0..width {
            let byte = self.bytes[self.bit / 8];
            value = (value << 1) | u64::from((byte >> (7 - self.bit % 8)) & 1);
            self.bit += 1;
        }
        Some(value)
    }

    /// Bytes touched so far, counting a partially read byte.
    pub fn consumed_bytes(&self) -> usize {
        self.bit.div_ceil(8)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn msb_first_layout() {
        let mut w = BitWriter::default();
        w.write(0b101, 3);
        w.write(0b1, 1);
        w.write(0xff, 8);
        assert_eq!(w.finish(), vec![0b1011_1111, 0b1111_0000]);
    }

    #[test]
    fn read_back() {
        let mut w = BitWriter::default();
        let fields = [(5u64, 3u32), (0, 1), (1023, 10), (7, 17), (1, 1)];
        for &(v, n) in &fields {
            w.write(v, n);
        }
        let bytes = w.finish();
        let mut r = BitReader::new(&bytes);
        for &(v, n) in &fields {
            assert_eq!(r.read(n), Some(v));
        }
        assert_eq!(r.consumed_bytes(), bytes.len());
        assert!(r.read(8).is_none());
    }
}
