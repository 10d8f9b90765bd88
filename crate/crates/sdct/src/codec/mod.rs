//! Encoder/decoder pipeline: tiling, per-block transform-mode decision,
//! uniform quantization, bit-plane arithmetic coding and the bitstream
//! container.
//!
//! Block payload layout (each block starts byte-aligned):
//!
//! 1. mode bit: 1 = directional transform, 0 = plain DCT
//! 2. angle signaling (directional blocks only):
//!    - sdct1: one angle index, ceil(log2 q) bits
//!    - sdct-am: repeated (subband end - 1 over ceil(log2 p) bits, angle
//!      index) pairs; the pair whose end equals p terminates the list
//!    - sdct-bt: tree node bits (2s - 1, breadth-first, 1 = leaf), then one
//!      angle index per leaf in the same breadth-first order
//! 3. zero padding to the next byte boundary
//! 4. coefficient payload length in bytes, big-endian u16
//! 5. coefficient payload (plane-count byte + arithmetic codeword)
//!
//! The mode decision charges the real coefficient bitrate, all angle side
//! information and the mode bit to both branches; the alignment padding and
//! the u16 length field are container overhead outside J (they are still
//! accounted bit-exactly by the audit).

pub mod arith;
pub mod bitio;
pub mod header;

use crate::am::run_sdct_am_best;
use crate::bt::{read_tree, run_sdct_bt_best, serialize_tree, SubbandTree};
use crate::error::{Result, SdctError};
use crate::image::GrayImage;
use crate::intdct::{coefficient_scale, forward_integer, inverse_integer, IntDctTable};
use crate::rd::{
    angle_index, ceil_log2, coeff_index, estimate_alpha, subband_count, AngleRateMode, RdParams,
};
use crate::transform::{AngleVector, Block, SdctContext};
use arith::{arith_decode_planes, arith_encode_planes, measure_block_rate};
use bitio::{BitReader, BitWriter};
pub use header::{Algorithm, ArithFlavor, BitstreamHeader, SampleFormat};
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct EncoderConfig {
    pub algorithm: Algorithm,
    pub block_size: usize,
    pub coeff_step: f64,
    pub lambda: f64,
    pub q_theta: usize,
    pub flavor: ArithFlavor,
    pub sample_format: SampleFormat,
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if ![8, 16, 32].contains(&self.block_size) {
            return Err(SdctError::UnsupportedBlockSize(self.block_size));
        }
        if !(self.coeff_step > 0.0) {
            return Err(SdctError::InvalidParam(format!(
                "coeff_step {} must be positive",
                self.coeff_step
            )));
        }
        if !(self.lambda >= 0.0) {
            return Err(SdctError::InvalidParam(format!(
                "lambda {} must be nonnegative",
                self.lambda
            )));
        }
        if !(2..=128).contains(&self.q_theta) {
            return Err(SdctError::InvalidParam(format!(
                "q_theta {} out of range",
                self.q_theta
            )));
        }
        Ok(())
    }

    pub fn header(&self, width: usize, height: usize) -> BitstreamHeader {
        BitstreamHeader {
            width,
            height,
            block_size: self.block_size,
            coeff_step: self.coeff_step,
            lambda: self.lambda,
            q_theta: self.q_theta,
            algorithm: self.algorithm,
            flavor: self.flavor,
            sample_format: self.sample_format,
        }
    }
}

/// Angle side information of one directional block.
#[derive(Debug, Clone)]
enum Signaling {
    Single(u8),
    /// (absolute end position, angle index) per run; last end equals p.
    Am(Vec<(usize, u8)>),
    Bt(SubbandTree, Vec<u8>),
}

impl Signaling {
    fn bits(&self, p: usize, q_theta: usize) -> usize {
        let qa = ceil_log2(q_theta);
        match self {
            Signaling::Single(_) => qa,
            Signaling::Am(runs) => runs.len() * (ceil_log2(p) + qa),
            Signaling::Bt(tree, leaves) => tree.structure_bits() + leaves.len() * qa,
        }
    }

    fn subbands(&self) -> usize {
        match self {
            Signaling::Single(_) => 1,
            Signaling::Am(runs) => runs.len(),
            Signaling::Bt(tree, _) => tree.leaf_count(),
        }
    }
}

/// Per-block encoder statistics.
#[derive(Debug, Clone)]
pub struct BlockStats {
    pub directional: bool,
    /// Signaled subband count; 0 for plain-DCT blocks.
    pub subbands: usize,
    pub mode_bits: usize,
    pub angle_bits: usize,
    pub pad_bits: usize,
    pub length_field_bits: usize,
    pub coeff_bits: usize,
    /// Lagrangian cost of the chosen branch (distortion plus lambda times
    /// real coefficient bits, angle bits and the mode bit).
    pub j: f64,
    /// Same cost evaluated for the plain-DCT branch.
    pub j_dct: f64,
    /// Sample-domain squared error of the chosen reconstruction.
    pub distortion: f64,
}

impl BlockStats {
    pub fn total_bits(&self) -> usize {
        self.mode_bits + self.angle_bits + self.pad_bits + self.length_field_bits + self.coeff_bits
    }
}

#[derive(Debug)]
pub struct EncodeOutcome {
    pub bytes: Vec<u8>,
    pub header: BitstreamHeader,
    /// Encoder-side reconstruction, cropped to the source dimensions; the
    /// decoder reproduces it bit-exactly.
    pub reconstruction: GrayImage,
    pub block_stats: Vec<BlockStats>,
}

impl EncodeOutcome {
    pub fn total_bits(&self) -> usize {
        self.bytes.len() * 8
    }

    pub fn bits_per_pixel(&self) -> f64 {
        self.total_bits() as f64 / (self.header.width * self.header.height) as f64
    }

    pub fn directional_fraction(&self) -> f64 {
        if self.block_stats.is_empty() {
            return 0.0;
        }
        self.block_stats.iter().filter(|b| b.directional).count() as f64
            / self.block_stats.len() as f64
    }

    pub fn mean_subbands(&self) -> f64 {
        let dir: Vec<&BlockStats> = self.block_stats.iter().filter(|b| b.directional).collect();
        if dir.is_empty() {
            return 0.0;
        }
        dir.iter().map(|b| b.subbands as f64).sum::<f64>() / dir.len() as f64
    }
}

/// One evaluated coding branch for a block.
struct Branch {
    signaling: Option<Signaling>,
    indices: Vec<i64>,
    recon: Vec<f64>,
    j: f64,
    distortion: f64,
}

struct BlockCoder<'a> {
    ctx: &'a SdctContext,
    table: Option<&'a IntDctTable>,
    cfg: &'a EncoderConfig,
}

impl<'a> BlockCoder<'a> {
    /// Indices and reconstruction of one candidate (angles, samples) pair on
    /// the configured arithmetic flavor.
    fn realize(&self, angles: &AngleVector, samples: &[f64]) -> Result<(Vec<i64>, Vec<f64>)> {
        match self.cfg.flavor {
            ArithFlavor::Float => {
                let exact = self.ctx.forward(angles, samples)?;
                let indices: Vec<i64> = exact
                    .iter()
                    .map(|&v| coeff_index(v, self.cfg.coeff_step))
                    .collect();
                let values: Vec<f64> = indices
                    .iter()
                    .map(|&i| i as f64 * self.cfg.coeff_step)
                    .collect();
                let recon = self.ctx.inverse(angles, &values)?;
                Ok((indices, recon))
            }
            ArithFlavor::Integer => {
                let table = self
                    .table
                    .ok_or(SdctError::MissingIntegerTable(self.cfg.block_size))?;
                let ints: Vec<i64> = samples.iter().map(|&v| v.round() as i64).collect();
                let coeffs = forward_integer(table, &self.ctx.pairs, angles, &ints)?;
                let istep = self.cfg.coeff_step * coefficient_scale(self.cfg.block_size);
                let indices: Vec<i64> = coeffs
                    .iter()
                    .map(|&c| coeff_index(c as f64, istep))
                    .collect();
                let dequant: Vec<i64> = indices
                    .iter()
                    .map(|&i| (i as f64 * istep).round() as i64)
                    .collect();
                let recon_int = inverse_integer(table, &self.ctx.pairs, angles, &dequant)?;
                Ok((indices, recon_int.iter().map(|&v| v as f64).collect()))
            }
        }
    }

    fn branch(
        &self,
        angles: &AngleVector,
        signaling: Option<Signaling>,
        samples: &[f64],
    ) -> Result<Branch> {
        let (indices, recon) = self.realize(angles, samples)?;
        let distortion: f64 = samples
            .iter()
            .zip(&recon)
            .map(|(x, r)| (x - r) * (x - r))
            .sum();
        let coeff_bits = measure_block_rate(&indices);
        let angle_bits = signaling
            .as_ref()
            .map_or(0, |s| s.bits(self.ctx.pair_count(), self.cfg.q_theta));
        let j = distortion + self.cfg.lambda * (coeff_bits + angle_bits + 1) as f64;
        Ok(Branch {
            signaling,
            indices,
            recon,
            j,
            distortion,
        })
    }

    /// Runs the configured search and the plain-DCT fallback, picks the
    /// smaller J (ties go to the DCT), and returns the decided block.
    fn plan(&self, samples: &[f64]) -> Result<(Branch, f64)> {
        let zero = AngleVector::zero(self.cfg.block_size);
        let dct = self.branch(&zero, None, samples)?;
        let j_dct = dct.j;
        let directional = match self.cfg.algorithm {
            Algorithm::DctOnly => None,
            Algorithm::Sdct1 => Some(self.search_single(samples)?),
            Algorithm::SdctAm => Some(self.search_am(samples)?),
            Algorithm::SdctBt => Some(self.search_bt(samples)?),
        };
        match directional {
            Some(dir) if dir.j < j_dct => Ok((dir, j_dct)),
            _ => Ok((dct, j_dct)),
        }
    }

    /// SDCT-1: exhaustive search over the q constant-angle vectors.
    fn search_single(&self, samples: &[f64]) -> Result<Branch> {
        let mut best: Option<Branch> = None;
        for a in 0..self.cfg.q_theta as u8 {
            let angles =
                AngleVector::constant(self.cfg.block_size, a as f64 * PI / self.cfg.q_theta as f64);
            let cand = self.branch(&angles, Some(Signaling::Single(a)), samples)?;
            if best.as_ref().map_or(true, |b| cand.j < b.j) {
                best = Some(cand);
            }
        }
        Ok(best.unwrap())
    }

    /// SDCT-AM over all constant-angle initializations; the search runs on
    /// the exact float transform, the winning angles are then realized on
    /// the configured flavor.
    fn search_am(&self, samples: &[f64]) -> Result<Branch> {
        let mut params = RdParams::new(
            self.cfg.lambda,
            crate::rd::DEFAULT_ALPHA,
            self.cfg.q_theta,
            self.cfg.coeff_step,
            AngleRateMode::AmIndexed,
        )?;
        params.alpha = estimate_alpha(self.ctx, samples, &params)?;
        let state = run_sdct_am_best(self.ctx, samples, &params)?;
        let runs = angle_runs(&state.angles, self.cfg.q_theta);
        self.branch(&state.angles, Some(Signaling::Am(runs)), samples)
    }

    /// SDCT-BT over all initial angles; same float-search, flavored-realize
    /// split as AM.
    fn search_bt(&self, samples: &[f64]) -> Result<Branch> {
        let params = RdParams::new(
            self.cfg.lambda,
            crate::rd::DEFAULT_ALPHA,
            self.cfg.q_theta,
            self.cfg.coeff_step,
            AngleRateMode::BtTree,
        )?;
        let result = run_sdct_bt_best(self.ctx, samples, &params)?;
        self.branch(
            &result.angles,
            Some(Signaling::Bt(result.tree, result.leaf_angles)),
            samples,
        )
    }
}

/// Piecewise-constant runs of a quantized angle vector as (absolute end,
/// angle index) pairs; the signaled form of AM angle vectors.
fn angle_runs(angles: &AngleVector, q_theta: usize) -> Vec<(usize, u8)> {
    let mut runs = Vec::new();
    let idx: Vec<u8> = angles
        .angles
        .iter()
        .map(|&t| angle_index(t, q_theta) as u8)
        .collect();
    let mut start = 0;
    for pos in 1..=idx.len() {
        if pos == idx.len() || idx[pos] != idx[start] {
            runs.push((pos, idx[start]));
            start = pos;
        }
    }
    debug_assert_eq!(runs.len(), subband_count(angles));
    runs
}

fn write_block(
    w: &mut BitWriter,
    branch: &Branch,
    j_dct: f64,
    p: usize,
    q_theta: usize,
) -> Result<BlockStats> {
    let directional = branch.signaling.is_some();
    w.push_bit(directional);
    let mut angle_bits = 0;
    if let Some(sig) = &branch.signaling {
        let before = w.bit_len();
        match sig {
            Signaling::Single(a) => w.push_bits(*a as u64, ceil_log2(q_theta)),
            Signaling::Am(runs) => {
                for &(end, a) in runs {
                    w.push_bits((end - 1) as u64, ceil_log2(p));
                    w.push_bits(a as u64, ceil_log2(q_theta));
                }
            }
            Signaling::Bt(tree, leaves) => {
                for bit in serialize_tree(tree) {
                    w.push_bit(bit);
                }
                for &a in leaves {
                    w.push_bits(a as u64, ceil_log2(q_theta));
                }
            }
        }
        angle_bits = w.bit_len() - before;
        debug_assert_eq!(angle_bits, sig.bits(p, q_theta));
    }
    let pad_bits = w.align();
    let payload = arith_encode_planes(&branch.indices);
    if payload.len() > u16::MAX as usize {
        return Err(SdctError::InvalidParam(format!(
            "coefficient payload of {} bytes exceeds the 64 KiB block limit",
            payload.len()
        )));
    }
    w.push_bits(payload.len() as u64, 16);
    w.push_bytes(&payload);
    Ok(BlockStats {
        directional,
        subbands: branch.signaling.as_ref().map_or(0, |s| s.subbands()),
        mode_bits: 1,
        angle_bits,
        pad_bits,
        length_field_bits: 16,
        coeff_bits: payload.len() * 8,
        j: branch.j,
        j_dct,
        distortion: branch.distortion,
    })
}

/// Encodes a grayscale image (or residual plane) into a complete bitstream.
pub fn encode_image(image: &GrayImage, cfg: &EncoderConfig) -> Result<EncodeOutcome> {
    cfg.validate()?;
    if image.samples.is_empty() {
        return Err(SdctError::EmptyInput("image has no samples".into()));
    }
    let n = cfg.block_size;
    let ctx = SdctContext::new(n)?;
    let table = match cfg.flavor {
        ArithFlavor::Integer => Some(IntDctTable::builtin(n)?),
        ArithFlavor::Float => None,
    };
    let coder = BlockCoder {
        ctx: &ctx,
        table: table.as_ref(),
        cfg,
    };
    let padded = image.pad_to_multiple(n);
    let blocks_x = padded.width / n;
    let blocks_y = padded.height / n;
    let blocks: Vec<Block> = (0..blocks_x * blocks_y)
        .map(|b| {
            let (by, bx) = (b / blocks_x, b % blocks_x);
            let mut s = Vec::with_capacity(n * n);
            for r in 0..n {
                let row = by * n + r;
                let off = row * padded.width + bx * n;
                s.extend_from_slice(&padded.samples[off..off + n]);
            }
            let mut block = Block::new(n, s).expect("tile size");
            block.origin = (by * n, bx * n);
            block.bit_depth = match cfg.sample_format {
                SampleFormat::Pgm8 => 8,
                SampleFormat::Res16 => 16,
            };
            block
        })
        .collect();

    let plans: Vec<(Branch, f64)> = blocks
        .par_iter()
        .map(|block| coder.plan(&block.samples))
        .collect::<Result<_>>()?;

    let header = cfg.header(image.width, image.height);
    let mut w = BitWriter::new();
    w.push_bytes(&header.to_bytes());
    let mut block_stats = Vec::with_capacity(plans.len());
    let mut recon = GrayImage {
        width: padded.width,
        height: padded.height,
        samples: vec![0.0; padded.samples.len()],
    };
    for (block, (branch, j_dct)) in blocks.iter().zip(&plans) {
        block_stats.push(write_block(
            &mut w,
            branch,
            *j_dct,
            ctx.pair_count(),
            cfg.q_theta,
        )?);
        let (row0, col0) = block.origin;
        for r in 0..n {
            let off = (row0 + r) * padded.width + col0;
            recon.samples[off..off + n].copy_from_slice(&branch.recon[r * n..(r + 1) * n]);
        }
    }
    Ok(EncodeOutcome {
        bytes: w.into_bytes(),
        header,
        reconstruction: recon.crop(image.width, image.height),
        block_stats,
    })
}

/// Decode-side per-block record.
#[derive(Debug, Clone)]
pub struct DecodedBlockStats {
    pub directional: bool,
    pub subbands: usize,
    pub angle_bits: usize,
    pub pad_bits: usize,
    pub coeff_bits: usize,
}

#[derive(Debug)]
pub struct DecodeOutcome {
    pub image: GrayImage,
    pub header: BitstreamHeader,
    pub block_stats: Vec<DecodedBlockStats>,
}

/// Decodes a bitstream back into the reconstruction image.
pub fn decode_image(bytes: &[u8]) -> Result<GrayImage> {
    Ok(decode_image_stats(bytes)?.image)
}

/// Decodes with per-block statistics (mode usage, side-information sizes).
pub fn decode_image_stats(bytes: &[u8]) -> Result<DecodeOutcome> {
    let header = BitstreamHeader::from_bytes(bytes)?;
    let n = header.block_size;
    let ctx = SdctContext::new(n)?;
    let table = match header.flavor {
        ArithFlavor::Integer => Some(IntDctTable::builtin(n)?),
        ArithFlavor::Float => None,
    };
    let p = ctx.pair_count();
    let q = header.q_theta;
    let pw = header.width.div_ceil(n) * n;
    let ph = header.height.div_ceil(n) * n;
    let blocks_x = pw / n;
    let blocks_y = ph / n;

    let mut r = BitReader::new(bytes);
    r.read_bytes(header::HEADER_BYTES)?;
    let mut padded = GrayImage {
        width: pw,
        height: ph,
        samples: vec![0.0; pw * ph],
    };
    let mut block_stats = Vec::with_capacity(blocks_x * blocks_y);
    for b in 0..blocks_x * blocks_y {
        let directional = r.read_bit()?;
        let mut angles = AngleVector::zero(n);
        let mut subbands = 0usize;
        let angle_start = r.bit_pos();
        if directional {
            match header.algorithm {
                Algorithm::DctOnly => {
                    return Err(SdctError::MalformedStream(format!(
                        "directional mode bit in a dct-only stream (block {b})"
                    )))
                }
                Algorithm::Sdct1 => {
                    let a = r.read_bits(ceil_log2(q))? as usize;
                    if a >= q {
                        return Err(SdctError::MalformedStream(format!(
                            "angle index {a} out of range (block {b})"
                        )));
                    }
                    angles = AngleVector::constant(n, a as f64 * PI / q as f64);
                    subbands = 1;
                }
                Algorithm::SdctAm => {
                    let mut pos = 0usize;
                    while pos < p {
                        let end = r.read_bits(ceil_log2(p))? as usize + 1;
                        let a = r.read_bits(ceil_log2(q))? as usize;
                        if end <= pos || end > p || a >= q {
                            return Err(SdctError::MalformedStream(format!(
                                "bad subband run end={end} angle={a} at position {pos} (block {b})"
                            )));
                        }
                        let theta = a as f64 * PI / q as f64;
                        for t in &mut angles.angles[pos..end] {
                            *t = theta;
                        }
                        subbands += 1;
                        pos = end;
                    }
                }
                Algorithm::SdctBt => {
                    let tree = read_tree(|| r.read_bit(), p)?;
                    let leaves = tree.leaves_bfs();
                    let mut leaf_angles = Vec::with_capacity(leaves.len());
                    for _ in 0..leaves.len() {
                        leaf_angles.push(r.read_bits(ceil_log2(q))? as u8);
                    }
                    angles = crate::bt::expand_tree_to_angles(&tree, &leaf_angles, n, q)?;
                    subbands = leaves.len();
                }
            }
        }
        let angle_bits = r.bit_pos() - angle_start;
        let pad_bits = r.align();
        let len = r.read_bits(16)? as usize;
        let payload = r.read_bytes(len)?;
        let indices = arith_decode_planes(payload, n * n)?;
        let recon: Vec<f64> = match header.flavor {
            ArithFlavor::Float => {
                let values: Vec<f64> = indices
                    .iter()
                    .map(|&i| i as f64 * header.coeff_step)
                    .collect();
                ctx.inverse(&angles, &values)?
            }
            ArithFlavor::Integer => {
                let table = table.as_ref().unwrap();
                let istep = header.coeff_step * coefficient_scale(n);
                let dequant: Vec<i64> = indices
                    .iter()
                    .map(|&i| (i as f64 * istep).round() as i64)
                    .collect();
                inverse_integer(table, &ctx.pairs, &angles, &dequant)?
                    .iter()
                    .map(|&v| v as f64)
                    .collect()
            }
        };
        let (by, bx) = (b / blocks_x, b % blocks_x);
        for row in 0..n {
            let off = (by * n + row) * pw + bx * n;
            padded.samples[off..off + n].copy_from_slice(&recon[row * n..(row + 1) * n]);
        }
        block_stats.push(DecodedBlockStats {
            directional,
            subbands,
            angle_bits,
            pad_bits,
            coeff_bits: len * 8,
        });
    }
    Ok(DecodeOutcome {
        image: padded.crop(header.width, header.height),
        header,
        block_stats,
    })
}

/// Independent bit-accounting of a stream, reconstructed by re-parsing it.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct BitAudit {
    pub header_bits: usize,
    pub mode_bits: usize,
    pub angle_bits: usize,
    pub pad_bits: usize,
    pub length_field_bits: usize,
    pub coeff_bits: usize,
}

impl BitAudit {
    pub fn total(&self) -> usize {
        self.header_bits
            + self.mode_bits
            + self.angle_bits
            + self.pad_bits
            + self.length_field_bits
            + self.coeff_bits
    }
}

/// Walks a bitstream and accounts every field; `total()` equals the file
/// size in bits for a well-formed stream.
pub fn audit_bitstream(bytes: &[u8]) -> Result<BitAudit> {
    let outcome = decode_image_stats(bytes)?;
    let mut audit = BitAudit {
        header_bits: header::HEADER_BYTES * 8,
        ..BitAudit::default()
    };
    for b in &outcome.block_stats {
        audit.mode_bits += 1;
        audit.angle_bits += b.angle_bits;
        audit.pad_bits += b.pad_bits;
        audit.length_field_bits += 16;
        audit.coeff_bits += b.coeff_bits;
    }
    Ok(audit)
}
