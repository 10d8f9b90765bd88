//! Enumeration of the rotatable eigenvector pairs of the grid Laplacian.
//!
//! Every off-diagonal frequency pair (k, l), k != l, shares the eigenvalue
//! lambda_k + lambda_l between v^(k,l) and v^(l,k) and can be rotated without
//! leaving the eigenspace. Pairs are ordered by an off-diagonal zigzag scan,
//! each unordered pair counted once; diagonal indices (k, k) never rotate.

use crate::dct::Dct1d;
use crate::error::Result;

/// One rotatable pair, stored with k > l.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EigenPair {
    /// Higher frequency index of the pair.
    pub k: usize,
    /// Lower frequency index, l < k.
    pub l: usize,
    /// Position in the zigzag ordering, 0..p-1.
    pub zigzag_position: usize,
    /// Vector index of v^(k,l): k*n + l.
    pub idx_primary: usize,
    /// Vector index of v^(l,k): l*n + k.
    pub idx_partner: usize,
}

/// Multiplicity class of an eigenvalue in the grid-Laplacian spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Multiplicity {
    /// lambda_{k,k} with k != n/2: algebraic multiplicity 1.
    Simple,
    /// lambda = 4, shared by all v^(k,n-k): algebraic multiplicity n-1.
    FourSpace,
    /// Generic off-diagonal pair: algebraic multiplicity 2.
    Double,
}

/// Table of the p = n(n-1)/2 rotatable pairs for block side n, with the
/// eigenvalue of each pair.
#[derive(Debug, Clone)]
pub struct PairTable {
    pub n: usize,
    /// Pairs in zigzag order; length p.
    pub pairs: Vec<EigenPair>,
    /// `eigenvalue[m]` = lambda_k + lambda_l for pair m.
    pub eigenvalues: Vec<f64>,
    /// Multiplicity class per pair.
    pub multiplicity: Vec<Multiplicity>,
}

/// Number of rotatable pairs for block side n.
pub fn pair_count(n: usize) -> usize {
    n * (n - 1) / 2
}

/// Builds the pair table. Pairs follow the classical zigzag scan over the
/// (k, l) frequency grid restricted to off-diagonal entries, each unordered
/// pair taken at its first encounter.
pub fn eigen_pair_table(n: usize) -> Result<PairTable> {
    let basis = Dct1d::new(n)?;
    let mut pairs = Vec::with_capacity(pair_count(n));
    // Antidiagonal d = k + l; the scan alternates direction like the JPEG
    // zigzag: odd d walks row-increasing, even d row-decreasing.
    for d in 1..=(2 * n - 2) {
        let lo = d.saturating_sub(n - 1);
        let hi = d.min(n - 1);
        let rows: Vec<usize> = if d % 2 == 1 {
            (lo..=hi).collect()
        } else {
            (lo..=hi).rev().collect()
        };
        for r in rows {
            let c = d - r;
            if r == c {
                continue;
            }
            let (k, l) = if r > c { (r, c) } else { (c, r) };
            // first encounter of the unordered pair {k, l}
            if pairs.iter().any(|p: &EigenPair| p.k == k && p.l == l) {
                continue;
            }
            pairs.push(EigenPair {
                k,
                l,
                zigzag_position: pairs.len(),
                idx_primary: k * n + l,
                idx_partner: l * n + k,
            });
        }
    }
    debug_assert_eq!(pairs.len(), pair_count(n));
    let eigenvalues: Vec<f64> = pairs
        .iter()
        .map(|p| basis.eigenvalues[p.k] + basis.eigenvalues[p.l])
        .collect();
    let multiplicity: Vec<Multiplicity> = pairs
        .iter()
        .map(|p| {
            if p.k + p.l == n {
                Multiplicity::FourSpace
            } else {
                Multiplicity::Double
            }
        })
        .collect();
    Ok(PairTable {
        n,
        pairs,
        eigenvalues,
        multiplicity,
    })
}

/// Full eigenvalue list of L(P_n x P_n) indexed by the vector index k*n + l.
pub fn grid_eigenvalues(n: usize) -> Result<Vec<f64>> {
    let basis = Dct1d::new(n)?;
    let mut out = vec![0.0; n * n];
    for k in 0..n {
        for l in 0..n {
            out[k * n + l] = basis.eigenvalues[k] + basis.eigenvalues[l];
        }
    }
    Ok(out)
}
