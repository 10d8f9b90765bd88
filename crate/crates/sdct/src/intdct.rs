//! Integer-approximate transform path.
//!
//! The 2D-DCT is computed separably with an HEVC-style scaled integer matrix
//! (entries ~ 64 sqrt(n) times the orthonormal basis, right-shifted between
//! passes), then the pair rotation is applied with 14-bit fixed-point
//! cosine/sine. The result approximates `coefficient_scale(n)` times the
//! exact SDCT coefficients; the approximation error is measured by tests, not
//! assumed.
//!
//! Table files live in `data/int_dct_{8,16,32}.txt`:
//!
//! ```text
//! # comment lines
//! n 8
//! 64 64 64 64 64 64 64 64
//! 89 75 50 18 -18 -50 -75 -89
//! ...                            (n rows of n integers)
//! ```

use crate::error::{Result, SdctError};
use crate::pairs::PairTable;
use crate::transform::AngleVector;

const FIXED_BITS: u32 = 14;
const FIXED_HALF: i64 = 1 << (FIXED_BITS - 1);

/// Scaled integer transform matrix for one block size.
#[derive(Debug, Clone)]
pub struct IntDctTable {
    pub n: usize,
    /// Row-major n x n; row k is the scaled basis vector v^(k).
    pub m: Vec<i32>,
}

impl IntDctTable {
    /// Parses the versioned text format. `#` lines are comments; the first
    /// data line must be `n <size>`, followed by n rows of n integers.
    pub fn from_str(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let head = lines
            .next()
            .ok_or_else(|| SdctError::BadIntegerTable("empty table".into()))?;
        let n: usize = head
            .strip_prefix("n ")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| SdctError::BadIntegerTable(format!("bad size line {head:?}")))?;
        if !(2..=256).contains(&n) {
            return Err(SdctError::BadIntegerTable(format!("unreasonable size {n}")));
        }
        let mut m = Vec::with_capacity(n * n);
        for (k, line) in lines.enumerate() {
            if k >= n {
                return Err(SdctError::BadIntegerTable("too many rows".into()));
            }
            let row: std::result::Result<Vec<i32>, _> =
                line.split_whitespace().map(str::parse).collect();
            let row = row.map_err(|e| SdctError::BadIntegerTable(format!("row {k}: {e}")))?;
            if row.len() != n {
                return Err(SdctError::BadIntegerTable(format!(
                    "row {k} has {} entries, expected {n}",
                    row.len()
                )));
            }
            m.extend(row);
        }
        if m.len() != n * n {
            return Err(SdctError::BadIntegerTable(format!(
                "expected {n} rows, got {}",
                m.len() / n
            )));
        }
        Ok(IntDctTable { n, m })
    }

    /// Built-in table shipped with the crate; available for n in {8, 16, 32}.
    pub fn builtin(n: usize) -> Result<Self> {
        let text = match n {
            8 => include_str!("../data/int_dct_8.txt"),
            16 => include_str!("../data/int_dct_16.txt"),
            32 => include_str!("../data/int_dct_32.txt"),
            _ => return Err(SdctError::MissingIntegerTable(n)),
        };
        Self::from_str(text)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        Self::from_str(&std::fs::read_to_string(path)?)
    }
}

/// Ratio between integer-path coefficients and exact float coefficients:
/// (64 sqrt(n))^2 / 2^(s1+s2) = 128 / n with the shift schedule below.
pub fn coefficient_scale(n: usize) -> f64 {
    128.0 / n as f64
}

fn shifts(n: usize) -> (u32, u32) {
    let log2n = n.trailing_zeros();
    (log2n - 1, log2n + 6)
}

fn shift_round(v: i64, s: u32) -> i64 {
    (v + (1 << (s - 1))) >> s
}

/// Separable integer 2D-DCT of integer samples, row pass then column pass.
pub fn forward_int_2d(table: &IntDctTable, samples: &[i64]) -> Result<Vec<i64>> {
    let n = table.n;
    if samples.len() != n * n {
        return Err(SdctError::SizeMismatch(format!(
            "integer transform needs {} samples, got {}",
            n * n,
            samples.len()
        )));
    }
    let (s1, s2) = shifts(n);
    let mut tmp = vec![0i64; n * n];
    for r in 0..n {
        for l in 0..n {
            let mut acc = 0i64;
            for c in 0..n {
                acc += samples[r * n + c] * table.m[l * n + c] as i64;
            }
            tmp[r * n + l] = shift_round(acc, s1);
        }
    }
    let mut out = vec![0i64; n * n];
    for k in 0..n {
        for l in 0..n {
            let mut acc = 0i64;
            for r in 0..n {
                acc += table.m[k * n + r] as i64 * tmp[r * n + l];
            }
            out[k * n + l] = shift_round(acc, s2);
        }
    }
    Ok(out)
}

/// Inverse of `forward_int_2d`; net gain of the forward+inverse pipeline is
/// one, up to the rounding of the four shift stages.
pub fn inverse_int_2d(table: &IntDctTable, coeffs: &[i64]) -> Result<Vec<i64>> {
    let n = table.n;
    if coeffs.len() != n * n {
        return Err(SdctError::SizeMismatch(format!(
            "integer inverse needs {} coefficients, got {}",
            n * n,
            coeffs.len()
        )));
    }
    let (s1, s2) = (7u32, 12u32);
    let mut tmp = vec![0i64; n * n];
    for r in 0..n {
        for l in 0..n {
            let mut acc = 0i64;
            for k in 0..n {
                acc += table.m[k * n + r] as i64 * coeffs[k * n + l];
            }
            tmp[r * n + l] = shift_round(acc, s1);
        }
    }
    let mut out = vec![0i64; n * n];
    for r in 0..n {
        for c in 0..n {
            let mut acc = 0i64;
            for l in 0..n {
                acc += tmp[r * n + l] * table.m[l * n + c] as i64;
            }
            out[r * n + c] = shift_round(acc, s2);
        }
    }
    Ok(out)
}

fn fixed_sin_cos(theta: f64) -> (i64, i64) {
    let (s, c) = theta.sin_cos();
    let scale = (1i64 << FIXED_BITS) as f64;
    ((s * scale).round() as i64, (c * scale).round() as i64)
}

/// Applies R(theta)^T with 14-bit fixed-point rotation coefficients.
pub fn rotate_forward_int(pairs: &PairTable, angles: &AngleVector, coeffs: &mut [i64]) {
    for (pair, &theta) in pairs.pairs.iter().zip(&angles.angles) {
        let (s, c) = fixed_sin_cos(theta);
        let a = coeffs[pair.idx_primary];
        let b = coeffs[pair.idx_partner];
        coeffs[pair.idx_primary] = (c * a - s * b + FIXED_HALF) >> FIXED_BITS;
        coeffs[pair.idx_partner] = (s * a + c * b + FIXED_HALF) >> FIXED_BITS;
    }
}

/// Applies R(theta) with 14-bit fixed-point rotation coefficients.
pub fn rotate_inverse_int(pairs: &PairTable, angles: &AngleVector, coeffs: &mut [i64]) {
    for (pair, &theta) in pairs.pairs.iter().zip(&angles.angles) {
        let (s, c) = fixed_sin_cos(theta);
        let a = coeffs[pair.idx_primary];
        let b = coeffs[pair.idx_partner];
        coeffs[pair.idx_primary] = (c * a + s * b + FIXED_HALF) >> FIXED_BITS;
        coeffs[pair.idx_partner] = (-s * a + c * b + FIXED_HALF) >> FIXED_BITS;
    }
}

/// Integer SDCT: integer 2D-DCT then fixed-point rotation. With theta = 0 the
/// rotation stage passes the integer DCT through exactly.
pub fn forward_integer(
    table: &IntDctTable,
    pairs: &PairTable,
    angles: &AngleVector,
    samples: &[i64],
) -> Result<Vec<i64>> {
    if pairs.n != table.n || angles.n != table.n {
        return Err(SdctError::SizeMismatch(format!(
            "table n={}, pairs n={}, angles n={}",
            table.n, pairs.n, angles.n
        )));
    }
    let mut coeffs = forward_int_2d(table, samples)?;
    rotate_forward_int(pairs, angles, &mut coeffs);
    Ok(coeffs)
}

/// Matching integer inverse: undo the rotation, then the integer inverse DCT.
pub fn inverse_integer(
    table: &IntDctTable,
    pairs: &PairTable,
    angles: &AngleVector,
    coeffs: &[i64],
) -> Result<Vec<i64>> {
    let mut d = coeffs.to_vec();
    rotate_inverse_int(pairs, angles, &mut d);
    inverse_int_2d(table, &d)
}
