//! 1D-DCT basis from the path-graph Laplacian and the separable 2D transform.
//!
//! The type-2 DCT vectors are the eigenvectors of the Laplacian of the path
//! graph `P_n`; the 2D-DCT basis is their Kronecker products, which form an
//! eigenbasis of the 4-connected grid `P_n x P_n`.

use crate::error::{Result, SdctError};
use std::f64::consts::PI;

/// Orthonormal 1D-DCT basis of size `n` with path-graph Laplacian eigenvalues.
#[derive(Debug, Clone)]
pub struct Dct1d {
    pub n: usize,
    /// Row-major n x n matrix; row k is the unit-norm basis vector v^(k).
    pub vectors: Vec<f64>,
    /// `eigenvalues[k]` = 4 sin^2(pi k / 2n), strictly increasing.
    pub eigenvalues: Vec<f64>,
}

impl Dct1d {
    /// Builds the DCT-2 basis: component j of vector k is proportional to
    /// cos(pi k (j + 1/2) / n), normalized to unit l2 norm.
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(SdctError::InvalidSize(n));
        }
        let mut vectors = vec![0.0; n * n];
        for k in 0..n {
            for j in 0..n {
                vectors[k * n + j] = (PI * k as f64 * (j as f64 + 0.5) / n as f64).cos();
            }
            let norm = vectors[k * n..(k + 1) * n]
                .iter()
                .map(|x| x * x)
                .sum::<f64>()
                .sqrt();
            for j in 0..n {
                vectors[k * n + j] /= norm;
            }
        }
        let eigenvalues = (0..n)
            .map(|k| {
                let s = (PI * k as f64 / (2.0 * n as f64)).sin();
                4.0 * s * s
            })
            .collect();
        Ok(Dct1d {
            n,
            vectors,
            eigenvalues,
        })
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k * self.n..(k + 1) * self.n]
    }
}

/// Laplacian of the 4-connected n x n grid graph `P_n x P_n`, dense row-major
/// `n^2 x n^2` with integer-valued entries.
pub fn grid_laplacian(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(SdctError::InvalidSize(n));
    }
    let size = n * n;
    let mut lap = vec![0.0; size * size];
    let idx = |r: usize, c: usize| r * n + c;
    for r in 0..n {
        for c in 0..n {
            let i = idx(r, c);
            let mut degree = 0.0;
            let mut neighbor = |j: usize| {
                lap[i * size + j] = -1.0;
                degree += 1.0;
            };
            if r > 0 {
                neighbor(idx(r - 1, c));
            }
            if r + 1 < n {
                neighbor(idx(r + 1, c));
            }
            if c > 0 {
                neighbor(idx(r, c - 1));
            }
            if c + 1 < n {
                neighbor(idx(r, c + 1));
            }
            lap[i * size + i] = degree;
        }
    }
    Ok(lap)
}

/// Forward separable 2D-DCT: coefficients d with d[k*n+l] = v^(k,l)^T x,
/// computed as two 1D passes (rows then columns).
pub fn forward_2d(basis: &Dct1d, samples: &[f64]) -> Vec<f64> {
    let n = basis.n;
    debug_assert_eq!(samples.len(), n * n);
    // tmp = X * T^T  (transform along rows)
    let mut tmp = vec![0.0; n * n];
    for r in 0..n {
        for l in 0..n {
            let vl = basis.vector(l);
            let mut acc = 0.0;
            for c in 0..n {
                acc += samples[r * n + c] * vl[c];
            }
            tmp[r * n + l] = acc;
        }
    }
    // out = T * tmp (transform along columns)
    let mut out = vec![0.0; n * n];
    for k in 0..n {
        let vk = basis.vector(k);
        for l in 0..n {
            let mut acc = 0.0;
            for r in 0..n {
                acc += vk[r] * tmp[r * n + l];
            }
            out[k * n + l] = acc;
        }
    }
    out
}

/// Inverse separable 2D-DCT: samples x = sum_{k,l} d[k*n+l] v^(k,l).
pub fn inverse_2d(basis: &Dct1d, coeffs: &[f64]) -> Vec<f64> {
    let n = basis.n;
    debug_assert_eq!(coeffs.len(), n * n);
    // tmp = T^T * D
    let mut tmp = vec![0.0; n * n];
    for r in 0..n {
        for l in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += basis.vector(k)[r] * coeffs[k * n + l];
            }
            tmp[r * n + l] = acc;
        }
    }
    // out = tmp * T
    let mut out = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            let mut acc = 0.0;
            for l in 0..n {
                acc += tmp[r * n + l] * basis.vector(l)[c];
            }
            out[r * n + c] = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::{mat_vec, max_abs_diff, rand_vec};

    #[test]
    fn dct_1d_rejects_tiny_sizes() {
        assert!(matches!(Dct1d::new(0), Err(SdctError::InvalidSize(0))));
        assert!(matches!(Dct1d::new(1), Err(SdctError::InvalidSize(1))));
    }

    #[test]
    fn dct_1d_is_orthonormal() {
        for n in [2, 3, 4, 8, 16] {
            let b = Dct1d::new(n).unwrap();
            for k in 0..n {
                for m in 0..n {
                    let dot: f64 = b
                        .vector(k)
                        .iter()
                        .zip(b.vector(m))
                        .map(|(a, c)| a * c)
                        .sum();
                    let want = if k == m { 1.0 } else { 0.0 };
                    assert!((dot - want).abs() <= 1e-10, "n={n} k={k} m={m} dot={dot}");
                }
            }
        }
    }

    #[test]
    fn dct_1d_eigenvalues_match_formula() {
        let b = Dct1d::new(4).unwrap();
        assert_eq!(b.eigenvalues[0], 0.0);
        // lambda_2 = 4 sin^2(pi/4) = 2
        assert!((b.eigenvalues[2] - 2.0).abs() <= 1e-12);
        for k in 1..4 {
            assert!(b.eigenvalues[k] > b.eigenvalues[k - 1]);
        }
        // DC vector is constant
        let v0 = b.vector(0);
        for j in 1..4 {
            assert!((v0[j] - v0[0]).abs() <= 1e-12);
        }
    }

    /// Oracle: dense path-graph Laplacian multiply; each DCT vector must be an
    /// eigenvector with the formula eigenvalue.
    #[test]
    fn dct_1d_vectors_are_path_laplacian_eigenvectors() {
        for n in [2, 3, 4, 8, 16] {
            let b = Dct1d::new(n).unwrap();
            // L(P_n): tridiagonal with degrees 1 (ends) and 2.
            let mut lap = vec![0.0; n * n];
            for i in 0..n {
                let deg = if i == 0 || i == n - 1 { 1.0 } else { 2.0 };
                lap[i * n + i] = deg;
                if i > 0 {
                    lap[i * n + i - 1] = -1.0;
                }
                if i + 1 < n {
                    lap[i * n + i + 1] = -1.0;
                }
            }
            for k in 0..n {
                let lv = mat_vec(&lap, b.vector(k), n, n);
                let scaled: Vec<f64> = b.vector(k).iter().map(|x| x * b.eigenvalues[k]).collect();
                assert!(
                    max_abs_diff(&lv, &scaled) <= 1e-10,
                    "n={n} k={k} residual too large"
                );
            }
        }
    }

    #[test]
    fn grid_laplacian_small_cases() {
        // n=2: the 4-cycle; every node has degree 2.
        let lap = grid_laplacian(2).unwrap();
        for i in 0..4 {
            assert_eq!(lap[i * 4 + i], 2.0);
            let row_sum: f64 = lap[i * 4..(i + 1) * 4].iter().sum();
            assert_eq!(row_sum, 0.0);
        }
        // n=3: center node (1,1) has degree 4.
        let lap = grid_laplacian(3).unwrap();
        let center = 1 * 3 + 1;
        assert_eq!(lap[center * 9 + center], 4.0);
        // Symmetry, zero row sums, diagonal in {2,3,4}.
        for n in [2usize, 3, 4, 5] {
            let lap = grid_laplacian(n).unwrap();
            let size = n * n;
            for i in 0..size {
                let row_sum: f64 = lap[i * size..(i + 1) * size].iter().sum();
                assert_eq!(row_sum, 0.0, "n={n} row {i}");
                assert!([2.0, 3.0, 4.0].contains(&lap[i * size + i]));
                for j in 0..size {
                    assert_eq!(lap[i * size + j], lap[j * size + i]);
                }
            }
        }
    }

    #[test]
    fn forward_inverse_2d_round_trip() {
        let basis = Dct1d::new(8).unwrap();
        let x = rand_vec(64, 7);
        let d = forward_2d(&basis, &x);
        let back = inverse_2d(&basis, &d);
        assert!(max_abs_diff(&x, &back) <= 1e-12);
        // Parseval
        let ex: f64 = x.iter().map(|v| v * v).sum();
        let ed: f64 = d.iter().map(|v| v * v).sum();
        assert!((ex - ed).abs() <= 1e-9 * ex.max(1.0));
    }
}
