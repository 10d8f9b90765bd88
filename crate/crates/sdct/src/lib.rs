//! Steerable DCT image compression.
//!
//! A block transform family obtained by rotating pairs of 2D-DCT basis
//! vectors inside the degenerate eigenspaces of the grid-graph Laplacian,
//! with rate-distortion-driven angle selection (alternated minimization and
//! binary subband trees), a complete entropy-coded bitstream, and an
//! evaluation harness (PSNR, SSIM, Bjontegaard delta).
//!
//! ```
//! use sdct::codec::{encode_image, decode_image, Algorithm, ArithFlavor,
//!     EncoderConfig, SampleFormat};
//!
//! let image = sdct::corpus::house_scene();
//! let cfg = EncoderConfig {
//!     algorithm: Algorithm::SdctBt,
//!     block_size: 16,
//!     coeff_step: 24.0,
//!     lambda: sdct::eval::LambdaPolicy::default().resolve(24.0),
//!     q_theta: 8,
//!     flavor: ArithFlavor::Float,
//!     sample_format: SampleFormat::Pgm8,
//! };
//! let encoded = encode_image(&image, &cfg).unwrap();
//! let decoded = decode_image(&encoded.bytes).unwrap();
//! assert_eq!(decoded.samples, encoded.reconstruction.samples);
//! ```

pub mod am;
pub mod bt;
pub mod codec;
pub mod corpus;
pub mod dct;
pub mod error;
pub mod eval;
pub mod image;
pub mod intdct;
pub mod pairs;
pub mod rd;
pub mod transform;

#[cfg(test)]
pub(crate) mod test_util;

pub use error::{Result, SdctError};
pub use transform::{build_sdct, AngleVector, Block, SdctBasis, SdctContext};
