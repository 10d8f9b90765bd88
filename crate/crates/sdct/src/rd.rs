//! Rate-distortion functional J(c, theta), rate terms, quantizers and the
//! thresholding operators shared by both angle-selection algorithms.
//!
//! J = D + lambda (R_c + R_theta) with D the squared reconstruction error.
//! The coefficient rate is the linear model alpha * |c|_0 during
//! optimization; the entropy coder supplies real bitrates for final streams
//! and for the alpha estimate.

use crate::codec::arith::measure_block_rate;
use crate::error::{Result, SdctError};
use crate::transform::{AngleVector, SdctContext};
use std::f64::consts::PI;

/// Fallback bits-per-coefficient when a block has no nonzero DCT
/// coefficients to estimate alpha from.
pub const DEFAULT_ALPHA: f64 = 8.0;

/// Which side-information cost formula R_theta uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleRateMode {
    /// Subband ends sent as indices: s * (ceil(log2 q) + ceil(log2 p)).
    AmIndexed,
    /// Binary decision tree: s * ceil(log2 q) + (2s - 1).
    BtTree,
}

#[derive(Debug, Clone)]
pub struct RdParams {
    /// Lagrangian multiplier, >= 0.
    pub lambda: f64,
    /// Bits per nonzero coefficient in the linear rate model, > 0.
    pub alpha: f64,
    /// Number of angle quantization levels (grid i*pi/q in [0, pi)).
    pub q_theta: usize,
    /// Uniform coefficient quantizer step, > 0.
    pub coeff_step: f64,
    pub angle_mode: AngleRateMode,
}

impl RdParams {
    pub fn new(
        lambda: f64,
        alpha: f64,
        q_theta: usize,
        coeff_step: f64,
        angle_mode: AngleRateMode,
    ) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(SdctError::InvalidParam(format!("lambda {lambda} < 0")));
        }
        if !(alpha > 0.0) {
            return Err(SdctError::InvalidParam(format!("alpha {alpha} <= 0")));
        }
        if q_theta < 2 {
            return Err(SdctError::InvalidParam(format!("q_theta {q_theta} < 2")));
        }
        if !(coeff_step > 0.0) {
            return Err(SdctError::InvalidParam(format!(
                "coeff_step {coeff_step} <= 0"
            )));
        }
        Ok(RdParams {
            lambda,
            alpha,
            q_theta,
            coeff_step,
            angle_mode,
        })
    }
}

/// One evaluation of the Lagrangian, kept with its parts.
#[derive(Debug, Clone, PartialEq)]
pub struct RdBreakdown {
    pub distortion: f64,
    pub rate_coeffs: f64,
    pub rate_angles: f64,
    pub j: f64,
    pub num_subbands: usize,
    pub nonzeros: usize,
}

impl RdBreakdown {
    pub fn assemble(
        distortion: f64,
        rate_coeffs: f64,
        rate_angles: f64,
        lambda: f64,
        num_subbands: usize,
        nonzeros: usize,
    ) -> Self {
        RdBreakdown {
            distortion,
            rate_coeffs,
            rate_angles,
            j: distortion + lambda * (rate_coeffs + rate_angles),
            num_subbands,
            nonzeros,
        }
    }
}

pub fn ceil_log2(v: usize) -> usize {
    debug_assert!(v >= 1);
    v.next_power_of_two().trailing_zeros() as usize
}

/// Squared reconstruction error |x - V(theta) c|_2^2.
pub fn distortion(
    ctx: &SdctContext,
    samples: &[f64],
    angles: &AngleVector,
    coeffs: &[f64],
) -> Result<f64> {
    let recon = ctx.inverse(angles, coeffs)?;
    if recon.len() != samples.len() {
        return Err(SdctError::SizeMismatch(format!(
            "{} samples vs {} reconstructed",
            samples.len(),
            recon.len()
        )));
    }
    Ok(samples
        .iter()
        .zip(&recon)
        .map(|(x, r)| (x - r) * (x - r))
        .sum())
}

/// Linear coefficient-rate model alpha * |c|_0.
pub fn rate_coeffs_model(coeffs: &[f64], params: &RdParams) -> f64 {
    params.alpha * coeffs.iter().filter(|v| **v != 0.0).count() as f64
}

/// Number of angle subbands: the first subband always counts, plus one for
/// every position whose angle differs from its predecessor. A constant
/// vector therefore costs one subband even at theta = 0; the all-DCT case is
/// signaled by the per-block mode bit instead of a free angle vector.
pub fn subband_count(angles: &AngleVector) -> usize {
    let mut s = 1;
    for w in angles.angles.windows(2) {
        if w[0] != w[1] {
            s += 1;
        }
    }
    s
}

/// Side-information cost of the angle vector in bits.
pub fn rate_angles(angles: &AngleVector, params: &RdParams) -> f64 {
    let s = subband_count(angles);
    let p = angles.len().max(1);
    rate_angles_for_subbands(s, p, params)
}

/// Same cost formula from an explicit subband count.
pub fn rate_angles_for_subbands(s: usize, p: usize, params: &RdParams) -> f64 {
    let angle_bits = ceil_log2(params.q_theta);
    match params.angle_mode {
        AngleRateMode::AmIndexed => (s * (angle_bits + ceil_log2(p))) as f64,
        AngleRateMode::BtTree => (s * angle_bits + 2 * s - 1) as f64,
    }
}

/// Zeroes every component with |x| <= threshold.
pub fn hard_threshold(values: &mut [f64], threshold: f64) {
    for v in values.iter_mut() {
        if v.abs() <= threshold {
            *v = 0.0;
        }
    }
}

/// Signed quantization index of `value` on the uniform grid, half-way ties
/// rounded toward zero.
pub fn coeff_index(value: f64, step: f64) -> i64 {
    let t = (value.abs() / step - 0.5).ceil();
    let t = if t <= 0.0 { 0.0 } else { t };
    (t as i64) * value.signum() as i64
}

/// Nearest grid value of Q_c.
pub fn quantize_coeff(value: f64, step: f64) -> f64 {
    coeff_index(value, step) as f64 * step
}

pub fn quantize_coeffs(values: &[f64], params: &RdParams) -> Vec<f64> {
    values
        .iter()
        .map(|v| quantize_coeff(*v, params.coeff_step))
        .collect()
}

/// Index of the nearest grid point of Q_theta = {i pi/q : i = 0..q-1},
/// half-way ties rounded toward zero.
pub fn angle_index(value: f64, q_theta: usize) -> usize {
    let step = PI / q_theta as f64;
    let t = (value / step - 0.5).ceil();
    let t = if t <= 0.0 { 0.0 } else { t };
    (t as usize).min(q_theta - 1)
}

/// Nearest grid value of Q_theta.
pub fn quantize_angle(value: f64, params: &RdParams) -> f64 {
    angle_index(value, params.q_theta) as f64 * PI / params.q_theta as f64
}

/// Per-component minimizer of (x - v)^2 + lam_alpha * [v != 0] over the
/// quantized grid: the nearest grid value, or zero when zero is at least as
/// good. Coincides with hard thresholding of the quantized value at
/// sqrt(lambda alpha) except when the quantization error itself tips the
/// comparison.
pub fn optimal_coeff(value: f64, step: f64, lam_alpha: f64) -> f64 {
    let q = quantize_coeff(value, step);
    if q == 0.0 {
        return 0.0;
    }
    let keep = (value - q) * (value - q) + lam_alpha;
    if value * value <= keep {
        0.0
    } else {
        q
    }
}

/// Assembles the full RD breakdown of one (angles, coeffs) pair under the
/// linear coefficient-rate model.
pub fn evaluate_j(
    ctx: &SdctContext,
    samples: &[f64],
    angles: &AngleVector,
    coeffs: &[f64],
    params: &RdParams,
) -> Result<RdBreakdown> {
    let d = distortion(ctx, samples, angles, coeffs)?;
    let rc = rate_coeffs_model(coeffs, params);
    let ra = rate_angles(angles, params);
    let nz = coeffs.iter().filter(|v| **v != 0.0).count();
    Ok(RdBreakdown::assemble(
        d,
        rc,
        ra,
        params.lambda,
        subband_count(angles),
        nz,
    ))
}

/// Per-block rate slope: twice the measured bits-per-nonzero of this block's
/// quantized DCT coefficients; falls back to `DEFAULT_ALPHA` when the block
/// quantizes to zero.
pub fn estimate_alpha(ctx: &SdctContext, samples: &[f64], params: &RdParams) -> Result<f64> {
    let dct = ctx.dct_coeffs(samples)?;
    let indices: Vec<i64> = dct
        .iter()
        .map(|v| coeff_index(*v, params.coeff_step))
        .collect();
    let nonzeros = indices.iter().filter(|v| **v != 0).count();
    if nonzeros == 0 {
        return Ok(DEFAULT_ALPHA);
    }
    let bits = measure_block_rate(&indices);
    Ok(2.0 * bits as f64 / nonzeros as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::{rand_vec, TestRng};

    fn params(lambda: f64, alpha: f64, step: f64, mode: AngleRateMode) -> RdParams {
        RdParams::new(lambda, alpha, 8, step, mode).unwrap()
    }

    #[test]
    fn param_validation() {
        assert!(RdParams::new(-1.0, 1.0, 8, 1.0, AngleRateMode::AmIndexed).is_err());
        assert!(RdParams::new(0.0, 0.0, 8, 1.0, AngleRateMode::AmIndexed).is_err());
        assert!(RdParams::new(0.0, 1.0, 1, 1.0, AngleRateMode::AmIndexed).is_err());
        assert!(RdParams::new(0.0, 1.0, 8, 0.0, AngleRateMode::AmIndexed).is_err());
    }

    #[test]
    fn distortion_cases() {
        let ctx = SdctContext::new(8).unwrap();
        let x = rand_vec(64, 2);
        let angles = AngleVector::constant(8, 0.7);
        // exact coefficients reconstruct exactly
        let c = ctx.forward(&angles, &x).unwrap();
        let d = distortion(&ctx, &x, &angles, &c).unwrap();
        let energy: f64 = x.iter().map(|v| v * v).sum();
        assert!(d <= 1e-18 * energy.max(1.0));
        // zero coefficients: D = |x|^2
        let d0 = distortion(&ctx, &x, &angles, &vec![0.0; 64]).unwrap();
        assert!((d0 - energy).abs() <= 1e-9 * energy);
        // Parseval: D equals coefficient-domain error for quantized c
        let p = params(0.0, 1.0, 0.5, AngleRateMode::AmIndexed);
        let cq = quantize_coeffs(&c, &p);
        let d = distortion(&ctx, &x, &angles, &cq).unwrap();
        let dc: f64 = c.iter().zip(&cq).map(|(a, b)| (a - b) * (a - b)).sum();
        assert!((d - dc).abs() <= 1e-9 * d.max(1.0));
    }

    #[test]
    fn rate_model_is_linear_in_nonzeros() {
        let p = params(1.0, 6.5, 1.0, AngleRateMode::AmIndexed);
        assert_eq!(rate_coeffs_model(&vec![0.0; 64], &p), 0.0);
        let mut c = vec![0.0; 64];
        for i in 0..10 {
            c[i * 3] = 1.0 + i as f64;
        }
        assert_eq!(rate_coeffs_model(&c, &p), 65.0);
        let p2 = params(1.0, 13.0, 1.0, AngleRateMode::AmIndexed);
        assert_eq!(rate_coeffs_model(&c, &p2), 130.0);
    }

    #[test]
    fn angle_rate_formulas() {
        // constant nonzero theta over p=28: one subband
        let angles = AngleVector::constant(8, PI / 8.0);
        let am = params(1.0, 1.0, 1.0, AngleRateMode::AmIndexed);
        let bt = params(1.0, 1.0, 1.0, AngleRateMode::BtTree);
        assert_eq!(subband_count(&angles), 1);
        assert_eq!(rate_angles(&angles, &am), 8.0); // 3 + ceil(log2 28) = 3 + 5
        assert_eq!(rate_angles(&angles, &bt), 4.0); // 3*1 + (2*1 - 1)
                                                    // theta = 0 still costs one subband; the DCT fallback is the mode bit
        let zero = AngleVector::zero(8);
        assert_eq!(rate_angles(&zero, &am), 8.0);
        // monotone in s
        let mut prev = 0.0;
        for s in 1..=28 {
            let r = rate_angles_for_subbands(s, 28, &am);
            assert!(r > prev);
            prev = r;
        }
    }

    #[test]
    fn hard_threshold_semantics() {
        let mut v = vec![5.0, 0.1, -3.0];
        hard_threshold(&mut v, 1.0);
        assert_eq!(v, vec![5.0, 0.0, -3.0]);
        // threshold 0 keeps everything nonzero, zeroes exact zeros only
        let mut v = vec![1e-300, -2.0, 0.0];
        hard_threshold(&mut v, 0.0);
        assert_eq!(v, vec![1e-300, -2.0, 0.0]);
        // boundary |x| == t is zeroed
        let mut v = vec![1.0, -1.0, 1.0 + 1e-12];
        hard_threshold(&mut v, 1.0);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[1], 0.0);
        assert!(v[2] != 0.0);
        // idempotence
        let mut a = rand_vec(32, 4);
        hard_threshold(&mut a, 0.3);
        let b = a.clone();
        hard_threshold(&mut a, 0.3);
        assert_eq!(a, b);
    }

    #[test]
    fn quantizer_arithmetic() {
        assert_eq!(quantize_coeff(14.0, 10.0), 10.0);
        assert_eq!(quantize_coeff(-14.0, 10.0), -10.0);
        assert_eq!(quantize_coeff(15.0, 10.0), 10.0); // tie toward zero
        assert_eq!(quantize_coeff(-15.0, 10.0), -10.0);
        assert_eq!(quantize_coeff(16.0, 10.0), 20.0);
        assert_eq!(quantize_coeff(30.0, 10.0), 30.0); // on grid already
        assert_eq!(coeff_index(0.0, 10.0), 0);

        let p = params(0.0, 1.0, 1.0, AngleRateMode::AmIndexed);
        assert!((quantize_angle(0.4, &p) - PI / 8.0).abs() <= 1e-15);
        assert_eq!(quantize_angle(0.0, &p), 0.0);
        // beyond the last grid point clamps to 7 pi / 8
        assert!((quantize_angle(3.14, &p) - 7.0 * PI / 8.0).abs() <= 1e-15);
        // grid values map to themselves
        for i in 0..8 {
            let v = i as f64 * PI / 8.0;
            assert_eq!(quantize_angle(v, &p), v);
            assert_eq!(angle_index(v, 8), i);
        }
    }

    /// Brute-force oracle: optimal_coeff against exhaustive search over grid
    /// candidates near the value.
    #[test]
    fn optimal_coeff_matches_exhaustive_grid_search() {
        let mut rng = TestRng(99);
        for _ in 0..4000 {
            let step = rng.range_f64(0.05, 4.0);
            let lam_alpha = rng.range_f64(0.0, 9.0);
            let x = rng.range_f64(-12.0, 12.0);
            let got = optimal_coeff(x, step, lam_alpha);
            let mut best = (0.0, x * x);
            let base = (x / step).floor() as i64;
            for k in (base - 3)..=(base + 3) {
                let v = k as f64 * step;
                if v == 0.0 {
                    continue;
                }
                let j = (x - v) * (x - v) + lam_alpha;
                if j < best.1 {
                    best = (v, j);
                }
            }
            assert_eq!(got, best.0, "x={x} step={step} la={lam_alpha}");
        }
    }

    #[test]
    fn evaluate_j_assembles_parts() {
        let ctx = SdctContext::new(4).unwrap();
        let x = rand_vec(16, 8);
        let angles = AngleVector::constant(4, PI / 4.0);
        let p = params(0.7, 5.0, 0.25, AngleRateMode::AmIndexed);
        let c = quantize_coeffs(&ctx.forward(&angles, &x).unwrap(), &p);
        let bd = evaluate_j(&ctx, &x, &angles, &c, &p).unwrap();
        // recomputing from parts reproduces J exactly
        assert_eq!(
            bd.j,
            bd.distortion + p.lambda * (bd.rate_coeffs + bd.rate_angles)
        );
        assert_eq!(bd.rate_coeffs, rate_coeffs_model(&c, &p));
        assert_eq!(bd.rate_angles, rate_angles(&angles, &p));
        // lambda = 0: J is the distortion alone
        let p0 = params(0.0, 5.0, 0.25, AngleRateMode::AmIndexed);
        let bd0 = evaluate_j(&ctx, &x, &angles, &c, &p0).unwrap();
        assert_eq!(bd0.j, bd0.distortion);
    }

    #[test]
    fn alpha_estimate_follows_measured_rate() {
        let ctx = SdctContext::new(8).unwrap();
        let p = params(1.0, 1.0, 4.0, AngleRateMode::AmIndexed);
        let x: Vec<f64> = rand_vec(64, 21).iter().map(|v| v * 100.0).collect();
        let alpha = estimate_alpha(&ctx, &x, &p).unwrap();
        let dct = ctx.dct_coeffs(&x).unwrap();
        let idx: Vec<i64> = dct.iter().map(|v| coeff_index(*v, 4.0)).collect();
        let nnz = idx.iter().filter(|v| **v != 0).count();
        let bits = measure_block_rate(&idx);
        assert_eq!(alpha, 2.0 * bits as f64 / nnz as f64);
        // degenerate block falls back to the default
        let flat = vec![0.0; 64];
        assert_eq!(estimate_alpha(&ctx, &flat, &p).unwrap(), DEFAULT_ALPHA);
    }
}
