//! The steerable DCT: pairwise Givens rotations of the 2D-DCT basis inside
//! the degenerate eigenspaces of the grid-graph Laplacian.
//!
//! `V(theta) = V R(theta)` where `V` is the separable 2D-DCT basis and
//! `R(theta) = Delta + Rtilde(theta)` rotates each off-diagonal pair
//! `(v^(k,l), v^(l,k))` by its angle. The forward transform is computed on the
//! separable fast path `c = R(theta)^T c_DCT`; the dense basis is materialized
//! only where the full matrix is wanted (verification, oracles).

use crate::dct::{forward_2d, inverse_2d, Dct1d};
use crate::error::{Result, SdctError};
use crate::pairs::{eigen_pair_table, pair_count, PairTable};
use std::f64::consts::PI;

/// An n x n pixel or residual tile in raster order.
#[derive(Debug, Clone)]
pub struct Block {
    pub n: usize,
    /// n^2 samples, row-major.
    pub samples: Vec<f64>,
    /// (row, col) of the block origin in the source image.
    pub origin: (usize, usize),
    pub bit_depth: u8,
}

impl Block {
    pub fn new(n: usize, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != n * n {
            return Err(SdctError::SizeMismatch(format!(
                "block of side {n} needs {} samples, got {}",
                n * n,
                samples.len()
            )));
        }
        Ok(Block {
            n,
            samples,
            origin: (0, 0),
            bit_depth: 8,
        })
    }

    pub fn norm(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// The p = n(n-1)/2 rotation angles in zigzag order.
///
/// Angles are kept as plain radians; the sparsifying analysis produces
/// full-resolution values, the optimizers and the codec restrict themselves
/// to the quantized grid in [0, pi).
#[derive(Debug, Clone, PartialEq)]
pub struct AngleVector {
    pub n: usize,
    pub angles: Vec<f64>,
}

impl AngleVector {
    pub fn new(n: usize, angles: Vec<f64>) -> Result<Self> {
        let want = pair_count(n);
        if angles.len() != want {
            return Err(SdctError::AngleLengthMismatch {
                n,
                want,
                got: angles.len(),
            });
        }
        Ok(AngleVector { n, angles })
    }

    pub fn zero(n: usize) -> Self {
        AngleVector {
            n,
            angles: vec![0.0; pair_count(n)],
        }
    }

    pub fn constant(n: usize, angle: f64) -> Self {
        AngleVector {
            n,
            angles: vec![angle; pair_count(n)],
        }
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

/// Precomputed per-n machinery: 1D basis and the rotatable pair table.
#[derive(Debug, Clone)]
pub struct SdctContext {
    pub n: usize,
    pub dct: Dct1d,
    pub pairs: PairTable,
}

impl SdctContext {
    pub fn new(n: usize) -> Result<Self> {
        Ok(SdctContext {
            n,
            dct: Dct1d::new(n)?,
            pairs: eigen_pair_table(n)?,
        })
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.pairs.len()
    }

    fn check_angles(&self, angles: &AngleVector) -> Result<()> {
        if angles.n != self.n || angles.len() != self.pair_count() {
            return Err(SdctError::AngleLengthMismatch {
                n: self.n,
                want: self.pair_count(),
                got: angles.len(),
            });
        }
        Ok(())
    }

    fn check_len(&self, len: usize, what: &str) -> Result<()> {
        if len != self.n * self.n {
            return Err(SdctError::SizeMismatch(format!(
                "{what} has length {len}, expected {}",
                self.n * self.n
            )));
        }
        Ok(())
    }

    /// Separable 2D-DCT of the samples (theta = 0 coefficients).
    pub fn dct_coeffs(&self, samples: &[f64]) -> Result<Vec<f64>> {
        self.check_len(samples.len(), "sample vector")?;
        Ok(forward_2d(&self.dct, samples))
    }

    /// Applies R(theta)^T to a DCT coefficient vector in place.
    pub fn rotate_forward(&self, angles: &AngleVector, coeffs: &mut [f64]) {
        for (pair, &theta) in self.pairs.pairs.iter().zip(&angles.angles) {
            let (s, c) = theta.sin_cos();
            let a = coeffs[pair.idx_primary];
            let b = coeffs[pair.idx_partner];
            coeffs[pair.idx_primary] = c * a - s * b;
            coeffs[pair.idx_partner] = s * a + c * b;
        }
    }

    /// Applies R(theta) to an SDCT coefficient vector in place (undoes
    /// `rotate_forward`).
    pub fn rotate_inverse(&self, angles: &AngleVector, coeffs: &mut [f64]) {
        for (pair, &theta) in self.pairs.pairs.iter().zip(&angles.angles) {
            let (s, c) = theta.sin_cos();
            let a = coeffs[pair.idx_primary];
            let b = coeffs[pair.idx_partner];
            coeffs[pair.idx_primary] = c * a + s * b;
            coeffs[pair.idx_partner] = -s * a + c * b;
        }
    }

    /// Forward SDCT on the separable fast path: two 1D-DCT passes followed by
    /// the sparse pair rotation.
    pub fn forward(&self, angles: &AngleVector, samples: &[f64]) -> Result<Vec<f64>> {
        self.check_angles(angles)?;
        let mut coeffs = self.dct_coeffs(samples)?;
        self.rotate_forward(angles, &mut coeffs);
        Ok(coeffs)
    }

    /// Inverse SDCT: undo the rotation, then the separable inverse DCT.
    pub fn inverse(&self, angles: &AngleVector, coeffs: &[f64]) -> Result<Vec<f64>> {
        self.check_angles(angles)?;
        self.check_len(coeffs.len(), "coefficient vector")?;
        let mut d = coeffs.to_vec();
        self.rotate_inverse(angles, &mut d);
        Ok(inverse_2d(&self.dct, &d))
    }

    /// Rotation angles that zero one coefficient of every pair.
    ///
    /// Returns the full-resolution angles and the rotated coefficients, of
    /// which exactly p are null for generic input. Analysis tool and optional
    /// optimizer initializer; the angles here are continuous, not quantized.
    pub fn sparsifying_angles(&self, samples: &[f64]) -> Result<(AngleVector, Vec<f64>)> {
        let mut coeffs = self.dct_coeffs(samples)?;
        let mut angles = vec![0.0; self.pair_count()];
        for (m, pair) in self.pairs.pairs.iter().enumerate() {
            let a = coeffs[pair.idx_primary];
            let b = coeffs[pair.idx_partner];
            let theta = sparsifying_angle(a, b);
            angles[m] = theta;
            let (s, c) = theta.sin_cos();
            coeffs[pair.idx_primary] = c * a - s * b;
            coeffs[pair.idx_partner] = s * a + c * b;
        }
        Ok((AngleVector::new(self.n, angles)?, coeffs))
    }
}

/// The angle theta = arctan(c_kl / c_lk) that nulls the primary coefficient
/// of one pair, computed in two-argument form and reduced into [0, pi). The
/// partner absorbs the pair energy and the sign; a (0, 0) pair keeps angle 0.
pub fn sparsifying_angle(primary: f64, partner: f64) -> f64 {
    if primary == 0.0 && partner == 0.0 {
        return 0.0;
    }
    let mut theta = primary.atan2(partner);
    if theta < 0.0 {
        // rotating by theta + pi only flips the surviving sign
        theta += PI;
    }
    if theta >= PI {
        theta -= PI;
    }
    theta
}

/// The full orthogonal transform matrix for one angle vector, with the sparse
/// rotation factor kept alongside. Heavyweight; built for verification and
/// dense oracles, not on the coding path.
#[derive(Debug, Clone)]
pub struct SdctBasis {
    pub n: usize,
    pub angles: AngleVector,
    /// V(theta)^T, row-major n^2 x n^2: row i is basis vector (column) i.
    pub v_t: Vec<f64>,
}

/// Builds the dense SDCT basis: every off-diagonal pair of 2D-DCT columns is
/// replaced by its rotation; diagonal columns (and v^(n/2,n/2) for even n)
/// are untouched.
pub fn build_sdct(ctx: &SdctContext, angles: &AngleVector) -> Result<SdctBasis> {
    ctx.check_angles(angles)?;
    let n = ctx.n;
    let size = n * n;
    let mut v_t = vec![0.0; size * size];
    // Row k*n + l of V^T is the Kronecker product v^(k) (x) v^(l).
    for k in 0..n {
        for l in 0..n {
            let row = &mut v_t[(k * n + l) * size..(k * n + l + 1) * size];
            let vk = ctx.dct.vector(k);
            let vl = ctx.dct.vector(l);
            for r in 0..n {
                for c in 0..n {
                    row[r * n + c] = vk[r] * vl[c];
                }
            }
        }
    }
    for (pair, &theta) in ctx.pairs.pairs.iter().zip(&angles.angles) {
        let (s, c) = theta.sin_cos();
        let (i, j) = (pair.idx_primary, pair.idx_partner);
        for col in 0..size {
            let vi = v_t[i * size + col];
            let vj = v_t[j * size + col];
            v_t[i * size + col] = c * vi - s * vj;
            v_t[j * size + col] = s * vi + c * vj;
        }
    }
    Ok(SdctBasis {
        n,
        angles: angles.clone(),
        v_t,
    })
}

impl SdctBasis {
    /// Basis vector i (column i of V(theta)).
    pub fn column(&self, i: usize) -> &[f64] {
        let size = self.n * self.n;
        &self.v_t[i * size..(i + 1) * size]
    }

    /// Dense forward transform c = V(theta)^T x.
    pub fn forward_dense(&self, samples: &[f64]) -> Vec<f64> {
        let size = self.n * self.n;
        (0..size)
            .map(|i| self.column(i).iter().zip(samples).map(|(v, x)| v * x).sum())
            .collect()
    }

    /// Dense inverse transform x = V(theta) c.
    pub fn inverse_dense(&self, coeffs: &[f64]) -> Vec<f64> {
        let size = self.n * self.n;
        let mut out = vec![0.0; size];
        for i in 0..size {
            let ci = coeffs[i];
            if ci == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(self.column(i)) {
                *o += ci * v;
            }
        }
        out
    }

    /// Max absolute deviation of V^T V from the identity.
    pub fn gram_residual(&self) -> f64 {
        let size = self.n * self.n;
        let mut worst = 0.0f64;
        for i in 0..size {
            for j in i..size {
                let dot: f64 = self
                    .column(i)
                    .iter()
                    .zip(self.column(j))
                    .map(|(a, b)| a * b)
                    .sum();
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - want).abs());
            }
        }
        worst
    }

    /// Dense R(theta) = Delta + Rtilde(theta) for structural checks.
    pub fn rotation_dense(&self, ctx: &SdctContext) -> Vec<f64> {
        let size = self.n * self.n;
        let mut r = vec![0.0; size * size];
        for k in 0..self.n {
            let i = k * self.n + k;
            r[i * size + i] = 1.0;
        }
        for (pair, &theta) in ctx.pairs.pairs.iter().zip(&self.angles.angles) {
            let (s, c) = theta.sin_cos();
            let (i, j) = (pair.idx_primary, pair.idx_partner);
            r[i * size + i] = c;
            r[j * size + j] = c;
            r[i * size + j] = s;
            r[j * size + i] = -s;
        }
        r
    }
}
