//! Packed bit strings.
//!
//! Key material travels between modules as an explicit bit sequence: PMIs
//! pack into 4-bit groups, the cipher consumes the zero-padded byte form.
//! Bits are stored most-significant-first within each byte, and the padding
//! bits of a partial trailing byte are always zero.

use std::fmt;

/// A bit sequence with big-endian byte packing.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    bytes: Vec<u8>,
    len: usize,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut s = Self::new();
        for &b in bits {
            s.push(b);
        }
        s
    }

    /// Appends a single bit.
    pub fn push(&mut self, bit: bool) {
        if self.len % 8 == 0 {
            self.bytes.push(0);
        }
        if bit {
            let byte = self.len / 8;
            self.bytes[byte] |= 1 << (7 - (self.len % 8));
        }
        self.len += 1;
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn push_bits(&mut self, value: u64, width: u32) {
        assert!(width <= 64);
        for i in (0..width).rev() {
            self.push((value >> i) & 1 == 1);
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, index: usize) -> bool {
        assert!(index < self.len, "bit index {index} out of range {}", self.len);
        (self.bytes[index / 8] >> (7 - (index % 8))) & 1 == 1
    }

    /// Flips one bit in place (used to model corrupted keys).
    pub fn flip_bit(&mut self, index: usize) {
        assert!(index < self.len, "bit index {index} out of range {}", self.len);
        self.bytes[index / 8] ^= 1 << (7 - (index % 8));
    }

    /// The zero-padded big-endian byte form; length is `ceil(len / 8)`.
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}
