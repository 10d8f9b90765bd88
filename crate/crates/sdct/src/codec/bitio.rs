//! MSB-first bit-level writer/reader over byte buffers.

use crate::error::{Result, SdctError};

#[derive(Debug, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    /// Bits used in the final partial byte, 0..8.
    partial: u32,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_bit(&mut self, bit: bool) {
        if self.partial == 0 {
            self.bytes.push(0);
        }
        if bit {
            let last = self.bytes.last_mut().unwrap();
            *last |= 1 << (7 - self.partial);
        }
        self.partial = (self.partial + 1) % 8;
    }

    /// Writes the low `width` bits of `value`, most significant first.
    pub fn push_bits(&mut self, value: u64, width: usize) {
        debug_assert!(width <= 64);
        debug_assert!(width == 64 || value < (1u64 << width));
        for i in (0..width).rev() {
            self.push_bit((value >> i) & 1 == 1);
        }
    }

    /// Pads with zero bits to the next byte boundary; returns the number of
    /// padding bits written.
    pub fn align(&mut self) -> usize {
        let pad = (8 - self.partial as usize) % 8;
        for _ in 0..pad {
            self.push_bit(false);
        }
        pad
    }

    /// Appends whole bytes; caller must be byte-aligned.
    pub fn push_bytes(&mut self, data: &[u8]) {
        debug_assert_eq!(self.partial, 0, "push_bytes requires byte alignment");
        self.bytes.extend_from_slice(data);
    }

    pub fn bit_len(&self) -> usize {
        self.bytes.len() * 8 - ((8 - self.partial as usize) % 8)
    }

    pub fn into_bytes(mut self) -> Vec<u8> {
        self.align();
        self.bytes
    }
}

#[derive(Debug)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        BitReader { bytes, pos: 0 }
    }

    pub fn read_bit(&mut self) -> Result<bool> {
        let byte = self.pos / 8;
        if byte >= self.bytes.len() {
            return Err(SdctError::Truncated(format!(
                "bit {} past end of {}-byte payload",
                self.pos,
                self.bytes.len()
            )));
        }
        let bit = (self.bytes[byte] >> (7 - self.pos % 8)) & 1 == 1;
        self.pos += 1;
        Ok(bit)
    }

    pub fn read_bits(&mut self, width: usize) -> Result<u64> {
        debug_assert!(width <= 64);
        let mut v = 0u64;
        for _ in 0..width {
            v = (v << 1) | self.read_bit()? as u64;
        }
        Ok(v)
    }

    /// Skips to the next byte boundary; returns the number of bits skipped.
    pub fn align(&mut self) -> usize {
        let pad = (8 - self.pos % 8) % 8;
        self.pos += pad;
        pad
    }

    /// Reads `len` whole bytes; caller must be byte-aligned.
    pub fn read_bytes(&mut self, len: usize) -> Result<&'a [u8]> {
        debug_assert_eq!(self.pos % 8, 0);
        let start = self.pos / 8;
        if start + len > self.bytes.len() {
            return Err(SdctError::Truncated(format!(
                "need {len} bytes at offset {start}, have {}",
                self.bytes.len().saturating_sub(start)
            )));
        }
        self.pos += len * 8;
        Ok(&self.bytes[start..start + len])
    }

    pub fn bit_pos(&self) -> usize {
        self.pos
    }

    pub fn remaining_bits(&self) -> usize {
        self.bytes.len() * 8 - self.pos
    }
}
