//! Bitstream container header.
//!
//! Fixed layout, all multi-byte fields big-endian:
//!
//! | offset | size | field                                  |
//! |--------|------|----------------------------------------|
//! | 0      | 4    | magic "SDC1"                           |
//! | 4      | 4    | width (pixels)                         |
//! | 8      | 4    | height (pixels)                        |
//! | 12     | 2    | block size n                           |
//! | 14     | 8    | coefficient quantizer step (f64 bits)  |
//! | 22     | 8    | lambda (f64 bits)                      |
//! | 30     | 1    | q_theta                                |
//! | 31     | 1    | algorithm                              |
//! | 32     | 1    | arithmetic flavor                      |
//! | 33     | 1    | sample format                          |
//!
//! Every numeric encoding flag round-trips through the header so decoding
//! needs no side channel.

use crate::error::{Result, SdctError};

pub const MAGIC: &[u8; 4] = b"SDC1";
pub const HEADER_BYTES: usize = 34;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    DctOnly,
    Sdct1,
    SdctAm,
    SdctBt,
}

impl Algorithm {
    pub fn as_u8(self) -> u8 {
        match self {
            Algorithm::DctOnly => 0,
            Algorithm::Sdct1 => 1,
            Algorithm::SdctAm => 2,
            Algorithm::SdctBt => 3,
        }
    }

    pub fn from_u8(v: u8) -> Result<Self> {
        Ok(match v {
            0 => Algorithm::DctOnly,
            1 => Algorithm::Sdct1,
            2 => Algorithm::SdctAm,
            3 => Algorithm::SdctBt,
            _ => {
                return Err(SdctError::MalformedStream(format!(
                    "unknown algorithm id {v}"
                )))
            }
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::DctOnly => "dct",
            Algorithm::Sdct1 => "sdct1",
            Algorithm::SdctAm => "sdct-am",
            Algorithm::SdctBt => "sdct-bt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithFlavor {
    Float,
    Integer,
}

impl ArithFlavor {
    pub fn as_u8(self) -> u8 {
        match self {
            ArithFlavor::Float => 0,
            ArithFlavor::Integer => 1,
        }
    }

    pub fn from_u8(v: u8) -> Result<Self> {
        Ok(match v {
            0 => ArithFlavor::Float,
            1 => ArithFlavor::Integer,
            _ => {
                return Err(SdctError::MalformedStream(format!(
                    "unknown arithmetic flavor {v}"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFormat {
    Pgm8,
    Res16,
}

impl SampleFormat {
    pub fn as_u8(self) -> u8 {
        match self {
            SampleFormat::Pgm8 => 0,
            SampleFormat::Res16 => 1,
        }
    }

    pub fn from_u8(v: u8) -> Result<Self> {
        Ok(match v {
            0 => SampleFormat::Pgm8,
            1 => SampleFormat::Res16,
            _ => {
                return Err(SdctError::MalformedStream(format!(
                    "unknown sample format {v}"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BitstreamHeader {
    pub width: usize,
    pub height: usize,
    pub block_size: usize,
    pub coeff_step: f64,
    pub lambda: f64,
    pub q_theta: usize,
    pub algorithm: Algorithm,
    pub flavor: ArithFlavor,
    pub sample_format: SampleFormat,
}

impl BitstreamHeader {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(SdctError::MalformedStream(format!(
                "empty frame {}x{}",
                self.width, self.height
            )));
        }
        if self.width.saturating_mul(self.height) > (1 << 28) {
            return Err(SdctError::MalformedStream(format!(
                "unreasonable frame size {}x{}",
                self.width, self.height
            )));
        }
        if ![8, 16, 32].contains(&self.block_size) {
            return Err(SdctError::UnsupportedBlockSize(self.block_size));
        }
        if !(self.coeff_step > 0.0) || !self.coeff_step.is_finite() {
            return Err(SdctError::MalformedStream(format!(
                "bad coefficient step {}",
                self.coeff_step
            )));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(SdctError::MalformedStream(format!(
                "bad lambda {}",
                self.lambda
            )));
        }
        if !(2..=128).contains(&self.q_theta) {
            return Err(SdctError::MalformedStream(format!(
                "bad q_theta {}",
                self.q_theta
            )));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_BYTES);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.width as u32).to_be_bytes());
        out.extend_from_slice(&(self.height as u32).to_be_bytes());
        out.extend_from_slice(&(self.block_size as u16).to_be_bytes());
        out.extend_from_slice(&self.coeff_step.to_bits().to_be_bytes());
        out.extend_from_slice(&self.lambda.to_bits().to_be_bytes());
        out.push(self.q_theta as u8);
        out.push(self.algorithm.as_u8());
        out.push(self.flavor.as_u8());
        out.push(self.sample_format.as_u8());
        debug_assert_eq!(out.len(), HEADER_BYTES);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || &bytes[0..4] != MAGIC {
            return Err(SdctError::BadMagic);
        }
        if bytes.len() < HEADER_BYTES {
            return Err(SdctError::Truncated(format!(
                "header needs {HEADER_BYTES} bytes, stream has {}",
                bytes.len()
            )));
        }
        let header = BitstreamHeader {
            width: u32::from_be_bytes(bytes[4..8].try_into().unwrap()) as usize,
            height: u32::from_be_bytes(bytes[8..12].try_into().unwrap()) as usize,
            block_size: u16::from_be_bytes(bytes[12..14].try_into().unwrap()) as usize,
            coeff_step: f64::from_bits(u64::from_be_bytes(bytes[14..22].try_into().unwrap())),
            lambda: f64::from_bits(u64::from_be_bytes(bytes[22..30].try_into().unwrap())),
            q_theta: bytes[30] as usize,
            algorithm: Algorithm::from_u8(bytes[31])?,
            flavor: ArithFlavor::from_u8(bytes[32])?,
            sample_format: SampleFormat::from_u8(bytes[33])?,
        };
        header.validate()?;
        Ok(header)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_header() -> BitstreamHeader {
        BitstreamHeader {
            width: 512,
            height: 384,
            block_size: 16,
            coeff_step: 12.75,
            lambda: 34.9921875,
            q_theta: 8,
            algorithm: Algorithm::SdctBt,
            flavor: ArithFlavor::Float,
            sample_format: SampleFormat::Pgm8,
        }
    }

    #[test]
    fn header_round_trip_is_exact() {
        let h = sample_header();
        let bytes = h.to_bytes();
        assert_eq!(bytes.len(), HEADER_BYTES);
        assert_eq!(BitstreamHeader::from_bytes(&bytes).unwrap(), h);
    }

    #[test]
    fn bad_magic_and_truncation_are_distinct_errors() {
        let mut bytes = sample_header().to_bytes();
        assert!(matches!(
            BitstreamHeader::from_bytes(&bytes[..20]),
            Err(SdctError::Truncated(_))
        ));
        bytes[0] = b'X';
        assert!(matches!(
            BitstreamHeader::from_bytes(&bytes),
            Err(SdctError::BadMagic)
        ));
    }

    #[test]
    fn invalid_fields_rejected() {
        let mut h = sample_header();
        h.block_size = 12;
        assert!(BitstreamHeader::from_bytes(&h.to_bytes()).is_err());
        let mut h = sample_header();
        h.coeff_step = 0.0;
        assert!(BitstreamHeader::from_bytes(&h.to_bytes()).is_err());
        let mut h = sample_header();
        h.width = 0;
        assert!(BitstreamHeader::from_bytes(&h.to_bytes()).is_err());
    }
}
