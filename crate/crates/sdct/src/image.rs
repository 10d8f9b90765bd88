//! Grayscale image container and the two on-disk sample formats: 8-bit
//! binary PGM (P5) and `.res16` signed residual planes.
//!
//! The residual format is 4 magic bytes "RS16", big-endian u32 width and
//! height, then width*height big-endian i16 samples in raster order.

use crate::error::{Result, SdctError};
use std::path::Path;

pub const RES16_MAGIC: &[u8; 4] = b"RS16";

#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    /// Row-major samples; 0..255 for 8-bit sources, signed for residuals.
    pub samples: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, samples: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(SdctError::EmptyInput(format!(
                "image dimensions {width}x{height}"
            )));
        }
        if samples.len() != width * height {
            return Err(SdctError::SizeMismatch(format!(
                "{}x{} image needs {} samples, got {}",
                width,
                height,
                width * height,
                samples.len()
            )));
        }
        Ok(GrayImage {
            width,
            height,
            samples,
        })
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.samples[row * self.width + col]
    }

    /// Pads to multiples of `n` in both dimensions by edge replication.
    pub fn pad_to_multiple(&self, n: usize) -> GrayImage {
        let pw = self.width.div_ceil(n) * n;
        let ph = self.height.div_ceil(n) * n;
        if pw == self.width && ph == self.height {
            return self.clone();
        }
        let mut samples = Vec::with_capacity(pw * ph);
        for r in 0..ph {
            let sr = r.min(self.height - 1);
            for c in 0..pw {
                samples.push(self.get(sr, c.min(self.width - 1)));
            }
        }
        GrayImage {
            width: pw,
            height: ph,
            samples,
        }
    }

    pub fn crop(&self, width: usize, height: usize) -> GrayImage {
        debug_assert!(width <= self.width && height <= self.height);
        let mut samples = Vec::with_capacity(width * height);
        for r in 0..height {
            samples.extend_from_slice(&self.samples[r * self.width..r * self.width + width]);
        }
        GrayImage {
            width,
            height,
            samples,
        }
    }
}

fn is_pnm_space(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c)
}

/// Reads one whitespace-delimited PNM header token, skipping `#` comments.
fn pnm_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        while *pos < bytes.len() && is_pnm_space(bytes[*pos]) {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !is_pnm_space(bytes[*pos]) && bytes[*pos] != b'#' {
        *pos += 1;
    }
    if start == *pos {
        return Err(SdctError::ImageFormat("truncated PGM header".into()));
    }
    Ok(&bytes[start..*pos])
}

fn pnm_number(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    let token = pnm_token(bytes, pos)?;
    std::str::from_utf8(token)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| SdctError::ImageFormat(format!("bad {what} in PGM header")))
}

/// Parses an 8-bit binary PGM (P5).
pub fn read_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut pos = 0;
    if pnm_token(bytes, &mut pos)? != b"P5" {
        return Err(SdctError::ImageFormat("not a P5 PGM".into()));
    }
    let width = pnm_number(bytes, &mut pos, "width")?;
    let height = pnm_number(bytes, &mut pos, "height")?;
    let maxval = pnm_number(bytes, &mut pos, "maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(SdctError::ImageFormat(format!(
            "unsupported PGM maxval {maxval}; only 8-bit images are handled"
        )));
    }
    if width == 0 || height == 0 || width.saturating_mul(height) > (1 << 28) {
        return Err(SdctError::ImageFormat(format!(
            "unreasonable PGM dimensions {width}x{height}"
        )));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !is_pnm_space(bytes[pos]) {
        return Err(SdctError::ImageFormat("missing raster separator".into()));
    }
    pos += 1;
    let need = width * height;
    let raster = bytes
        .get(pos..pos + need)
        .ok_or_else(|| SdctError::ImageFormat("truncated PGM raster".into()))?;
    GrayImage::new(width, height, raster.iter().map(|&b| b as f64).collect())
}

/// Serializes to 8-bit binary PGM, rounding and clamping samples to 0..255.
pub fn write_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend(
        image
            .samples
            .iter()
            .map(|&v| v.round().clamp(0.0, 255.0) as u8),
    );
    out
}

/// Parses a `.res16` signed residual plane.
pub fn read_res16(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.len() < 12 {
        return Err(SdctError::ImageFormat("res16 header truncated".into()));
    }
    if &bytes[0..4] != RES16_MAGIC {
        return Err(SdctError::ImageFormat("not a RS16 residual plane".into()));
    }
    let width = u32::from_be_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let height = u32::from_be_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if width == 0 || height == 0 || width.saturating_mul(height) > (1 << 28) {
        return Err(SdctError::ImageFormat(format!(
            "unreasonable res16 dimensions {width}x{height}"
        )));
    }
    let need = width * height * 2;
    let data = bytes
        .get(12..12 + need)
        .ok_or_else(|| SdctError::ImageFormat("truncated res16 payload".into()))?;
    let samples = data
        .chunks_exact(2)
        .map(|c| i16::from_be_bytes([c[0], c[1]]) as f64)
        .collect();
    GrayImage::new(width, height, samples)
}

pub fn write_res16(image: &GrayImage) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + image.samples.len() * 2);
    out.extend_from_slice(RES16_MAGIC);
    out.extend_from_slice(&(image.width as u32).to_be_bytes());
    out.extend_from_slice(&(image.height as u32).to_be_bytes());
    for &v in &image.samples {
        let s = v.round().clamp(i16::MIN as f64, i16::MAX as f64) as i16;
        out.extend_from_slice(&s.to_be_bytes());
    }
    out
}

/// Loads either format by sniffing the magic bytes.
pub fn read_image(path: &Path) -> Result<GrayImage> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(RES16_MAGIC) {
        read_res16(&bytes)
    } else {
        read_pgm(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::TestRng;

    fn random_image(w: usize, h: usize, seed: u64) -> GrayImage {
        let mut rng = TestRng(seed);
        GrayImage::new(w, h, (0..w * h).map(|_| rng.below(256) as f64).collect()).unwrap()
    }

    #[test]
    fn pgm_round_trip() {
        let img = random_image(13, 9, 1);
        let bytes = write_pgm(&img);
        let back = read_pgm(&bytes).unwrap();
        assert_eq!(img, back);
    }

    #[test]
    fn pgm_header_with_comments() {
        let bytes = b"P5 # format\n# a comment line\n 3 \n2\n255\n\x01\x02\x03\x04\x05\x06";
        let img = read_pgm(bytes).unwrap();
        assert_eq!((img.width, img.height), (3, 2));
        assert_eq!(img.samples, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn pgm_malformed_inputs() {
        assert!(read_pgm(b"").is_err());
        assert!(read_pgm(b"P6 2 2 255 aaaa").is_err());
        assert!(read_pgm(b"P5 2 2 65535 aaaaaaaa").is_err());
        assert!(read_pgm(b"P5 2 2 255 ab").is_err()); // truncated raster
        assert!(read_pgm(b"P5 0 2 255 ").is_err());
        assert!(read_pgm(b"P5 2 x 255 aaaa").is_err());
    }

    #[test]
    fn res16_round_trip_with_negatives() {
        let mut rng = TestRng(5);
        let samples: Vec<f64> = (0..24).map(|_| rng.below(2048) as f64 - 1024.0).collect();
        let img = GrayImage::new(6, 4, samples).unwrap();
        let bytes = write_res16(&img);
        assert_eq!(read_res16(&bytes).unwrap(), img);
        assert!(read_res16(&bytes[..10]).is_err());
        assert!(read_res16(b"XXXX........").is_err());
    }

    #[test]
    fn padding_replicates_edges() {
        let img = random_image(10, 6, 3);
        let padded = img.pad_to_multiple(8);
        assert_eq!((padded.width, padded.height), (16, 8));
        for r in 0..8 {
            for c in 0..16 {
                let want = img.get(r.min(5), c.min(9));
                assert_eq!(padded.get(r, c), want);
            }
        }
        assert_eq!(padded.crop(10, 6), img);
        // already aligned stays identical
        let img = random_image(16, 8, 4);
        assert_eq!(img.pad_to_multiple(8), img);
    }
}
