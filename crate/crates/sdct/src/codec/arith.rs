//! Adaptive bit-plane arithmetic coding of quantized coefficient indices.
//!
//! The binary coder follows the carry-counting design of Moffat, Neal and
//! Witten's "Arithmetic Coding Revisited": 48-bit low/range registers,
//! frequency-count probability models, bit-at-a-time renormalization. On top
//! of it, coefficient magnitudes are sent most-significant plane first with
//! three adaptive context families: a significance context per plane, one
//! refinement context, one sign context. Every block payload is coded
//! independently (fresh contexts, fresh coder) so payloads stay seekable and
//! measurable in isolation.
//!
//! Payload layout: one plane-count byte, then the arithmetic codeword. An
//! all-zero block is exactly one byte.

use crate::error::{Result, SdctError};

const B: u32 = 48;
const HALF: u64 = 1 << (B - 1);
const QUARTER: u64 = 1 << (B - 2);
/// Halve context counts past this total; keeps the model adaptive and the
/// range division exact.
const CTX_CAP: u32 = 1 << 12;
/// Upper bound on magnitude bit planes (payload byte is validated against it).
pub const MAX_PLANES: u32 = 48;

/// Destination for renormalization output; a counting sink makes rate
/// measurement identical to real encoding.
trait BitSink {
    fn put(&mut self, bit: bool);
    fn bits(&self) -> usize;
}

struct VecSink {
    bytes: Vec<u8>,
    used: u32,
}

impl VecSink {
    fn new() -> Self {
        VecSink {
            bytes: Vec::new(),
            used: 0,
        }
    }

    fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

impl BitSink for VecSink {
    fn put(&mut self, bit: bool) {
        if self.used == 0 {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().unwrap() |= 1 << (7 - self.used);
        }
        self.used = (self.used + 1) % 8;
    }

    fn bits(&self) -> usize {
        self.bytes.len() * 8 - (8 - self.used as usize) % 8
    }
}

struct CountSink(usize);

impl BitSink for CountSink {
    fn put(&mut self, _bit: bool) {
        self.0 += 1;
    }

    fn bits(&self) -> usize {
        self.0
    }
}

/// Adaptive binary probability model: zero/one counts.
#[derive(Debug, Clone, Copy)]
pub struct Context {
    c0: u32,
    c1: u32,
}

impl Default for Context {
    fn default() -> Self {
        Context { c0: 1, c1: 1 }
    }
}

impl Context {
    fn update(&mut self, bit: bool) {
        if bit {
            self.c1 += 1;
        } else {
            self.c0 += 1;
        }
        if self.c0 + self.c1 >= CTX_CAP {
            self.c0 = (self.c0 + 1) >> 1;
            self.c1 = (self.c1 + 1) >> 1;
        }
    }
}

struct Encoder<S: BitSink> {
    low: u64,
    range: u64,
    pending: usize,
    sink: S,
}

impl<S: BitSink> Encoder<S> {
    fn new(sink: S) -> Self {
        Encoder {
            low: 0,
            range: HALF,
            pending: 0,
            sink,
        }
    }

    fn emit(&mut self, bit: bool) {
        self.sink.put(bit);
        while self.pending > 0 {
            self.sink.put(!bit);
            self.pending -= 1;
        }
    }

    fn encode(&mut self, bit: bool, ctx: &mut Context) {
        let (lps, c_lps) = if ctx.c0 < ctx.c1 {
            (false, ctx.c0)
        } else {
            (true, ctx.c1)
        };
        let r = self.range / (ctx.c0 + ctx.c1) as u64;
        let r_lps = r * c_lps as u64;
        if bit == lps {
            self.low += self.range - r_lps;
            self.range = r_lps;
        } else {
            self.range -= r_lps;
        }
        while self.range <= QUARTER {
            if self.low + self.range <= HALF {
                self.emit(false);
            } else if self.low >= HALF {
                self.emit(true);
                self.low -= HALF;
            } else {
                self.pending += 1;
                self.low -= QUARTER;
            }
            self.low <<= 1;
            self.range <<= 1;
        }
        ctx.update(bit);
    }

    /// Terminates the codeword with the two disambiguation bits: the
    /// interval always spans a multiple of 2^(B-2), whose top two bits pin
    /// the value once trailing zeros are implied.
    fn finish(mut self) -> S {
        let candidate = (self.low + (QUARTER - 1)) & !(QUARTER - 1);
        debug_assert!(candidate >= self.low && candidate < self.low + self.range);
        self.emit(candidate & HALF != 0);
        self.emit(candidate & QUARTER != 0);
        self.sink
    }
}

struct Decoder<'a> {
    bytes: &'a [u8],
    bit_pos: usize,
    offset: u64,
    range: u64,
}

impl<'a> Decoder<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        let mut d = Decoder {
            bytes,
            bit_pos: 0,
            offset: 0,
            range: HALF,
        };
        for _ in 0..B {
            d.offset = (d.offset << 1) | d.next_bit();
        }
        d
    }

    /// Bits past the end of the codeword read as the implied trailing zeros.
    fn next_bit(&mut self) -> u64 {
        let byte = self.bit_pos / 8;
        let bit = if byte < self.bytes.len() {
            (self.bytes[byte] >> (7 - self.bit_pos % 8)) & 1
        } else {
            0
        };
        self.bit_pos += 1;
        bit as u64
    }

    fn decode(&mut self, ctx: &mut Context) -> bool {
        let (lps, c_lps) = if ctx.c0 < ctx.c1 {
            (false, ctx.c0)
        } else {
            (true, ctx.c1)
        };
        let r = self.range / (ctx.c0 + ctx.c1) as u64;
        let r_lps = r * c_lps as u64;
        let bit = if self.offset >= self.range - r_lps {
            self.offset -= self.range - r_lps;
            self.range = r_lps;
            lps
        } else {
            self.range -= r_lps;
            !lps
        };
        while self.range <= QUARTER {
            self.range <<= 1;
            self.offset = (self.offset << 1) | self.next_bit();
        }
        ctx.update(bit);
        bit
    }
}

/// Context set for one block payload.
struct PlaneContexts {
    significance: [Context; MAX_PLANES as usize],
    refinement: Context,
    sign: Context,
}

impl PlaneContexts {
    fn new() -> Self {
        PlaneContexts {
            significance: [Context::default(); MAX_PLANES as usize],
            refinement: Context::default(),
            sign: Context::default(),
        }
    }
}

fn plane_count(indices: &[i64]) -> u32 {
    let max_mag = indices.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0);
    64 - max_mag.leading_zeros()
}

fn write_planes<S: BitSink>(enc: &mut Encoder<S>, indices: &[i64], planes: u32) {
    let mut ctx = PlaneContexts::new();
    let mut significant = vec![false; indices.len()];
    for b in (0..planes).rev() {
        for (i, &v) in indices.iter().enumerate() {
            let bit = (v.unsigned_abs() >> b) & 1 == 1;
            if significant[i] {
                enc.encode(bit, &mut ctx.refinement);
            } else {
                enc.encode(bit, &mut ctx.significance[b as usize]);
                if bit {
                    significant[i] = true;
                    enc.encode(v < 0, &mut ctx.sign);
                }
            }
        }
    }
}

/// Entropy-codes quantization indices into a self-contained payload
/// (plane-count byte + arithmetic codeword).
pub fn arith_encode_planes(indices: &[i64]) -> Vec<u8> {
    let planes = plane_count(indices);
    debug_assert!(planes <= MAX_PLANES);
    let mut payload = vec![planes as u8];
    if planes == 0 {
        return payload;
    }
    let mut enc = Encoder::new(VecSink::new());
    write_planes(&mut enc, indices, planes);
    payload.extend_from_slice(&enc.finish().into_bytes());
    payload
}

/// Decodes `count` quantization indices from a payload produced by
/// `arith_encode_planes`.
pub fn arith_decode_planes(payload: &[u8], count: usize) -> Result<Vec<i64>> {
    let planes = *payload
        .first()
        .ok_or_else(|| SdctError::Truncated("empty coefficient payload".into()))?
        as u32;
    if planes > MAX_PLANES {
        return Err(SdctError::MalformedStream(format!(
            "coefficient payload claims {planes} bit planes"
        )));
    }
    if planes == 0 {
        return Ok(vec![0i64; count]);
    }
    let mut dec = Decoder::new(&payload[1..]);
    let mut ctx = PlaneContexts::new();
    let mut magnitudes = vec![0u64; count];
    let mut negative = vec![false; count];
    for b in (0..planes).rev() {
        for i in 0..count {
            if magnitudes[i] != 0 {
                if dec.decode(&mut ctx.refinement) {
                    magnitudes[i] |= 1 << b;
                }
            } else if dec.decode(&mut ctx.significance[b as usize]) {
                magnitudes[i] = 1 << b;
                negative[i] = dec.decode(&mut ctx.sign);
            }
        }
    }
    Ok(magnitudes
        .iter()
        .zip(&negative)
        .map(|(&m, &neg)| if neg { -(m as i64) } else { m as i64 })
        .collect())
}

/// Exact size in bits of the payload `arith_encode_planes` would produce,
/// obtained by running the coder into a counting sink.
pub fn measure_block_rate(indices: &[i64]) -> usize {
    let planes = plane_count(indices);
    if planes == 0 {
        return 8;
    }
    let mut enc = Encoder::new(CountSink(0));
    write_planes(&mut enc, indices, planes);
    let bits = enc.finish().bits();
    8 + bits.div_ceil(8) * 8
}
