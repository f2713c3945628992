//! Numerically stable evaluation of L2-normalized Hermite functions
//! psi_k(u) = H_k(u) e^{-u^2/2} / sqrt(2^k k! sqrt(pi)) and of the h-scaled
//! multi-dimensional eigenfunctions phi_{alpha,h}.
//!
//! The three-term recurrence runs on the Gaussian-weighted functions, never
//! on bare polynomials (raw H_k overflows doubles near k ~ 150). A power-of-
//! two exponent rides along so the recurrence stays healthy even when the
//! Gaussian factor alone underflows, as it does deep in the classically
//! forbidden tail; emitted values below 1e-300 are flushed to exact zero.

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Values and derivatives of psi_0..psi_K at a single argument.
#[derive(Debug, Clone)]
pub struct HermiteTable {
    pub argument: f64,
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
}

/// Magnitudes below this are flushed to exact zero on output.
pub const FLUSH_THRESHOLD: f64 = 1e-300;

const RESCALE_LIMIT: f64 = 1.3407807929942597e154; // 2^512
const RESCALE_FACTOR_DOWN: f64 = 7.458340731200207e-155; // 2^-512
const PI_NEG_QUARTER: f64 = 0.7511255444649425; // pi^{-1/4}

/// Reconstruct v * 2^scale2, flushing results below `FLUSH_THRESHOLD` to zero.
#[inline]
fn emit(v: f64, scale2: i64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    let log2_mag = v.abs().log2() + scale2 as f64;
    if log2_mag < -997.0 {
        return 0.0;
    }
    let e1 = scale2.clamp(-996, 996);
    let e2 = scale2 - e1;
    let out = v * (2.0f64).powi(e1 as i32) * (2.0f64).powi(e2 as i32);
    if out.abs() < FLUSH_THRESHOLD {
        0.0
    } else {
        out
    }
}

/// Evaluate psi_0..psi_K and their derivatives at `u`.
///
/// Derivatives use the exact identity psi_k' = sqrt(2k) psi_{k-1} - u psi_k,
/// evaluated on the emitted values, so the identity holds bit-for-bit.
pub fn hermite_table(u: f64, max_degree: usize) -> Result<HermiteTable> {
    if !u.is_finite() {
        return Err(Error::Domain(format!(
            "hermite argument must be finite, got {u}"
        )));
    }
    let k_max = max_degree;
    let mut values = vec![0.0; k_max + 1];

    // Gaussian factor carried as mantissa in [1,2) times 2^scale2.
    let gauss_log2 = -0.5 * u * u * std::f64::consts::LOG2_E;
    let mut scale2 = gauss_log2.floor() as i64;
    let mantissa = (gauss_log2 - scale2 as f64).exp2();

    let mut prev = 0.0f64;
    let mut curr = PI_NEG_QUARTER * mantissa;
    values[0] = emit(curr, scale2);
    if k_max >= 1 {
        let next = std::f64::consts::SQRT_2 * u * curr;
        prev = curr;
        curr = next;
        values[1] = emit(curr, scale2);
    }
    for k in 1..k_max {
        let kf = k as f64;
        let next = u * (2.0 / (kf + 1.0)).sqrt() * curr - (kf / (kf + 1.0)).sqrt() * prev;
        prev = curr;
        curr = next;
        let m = prev.abs().max(curr.abs());
        if m > RESCALE_LIMIT {
            prev *= RESCALE_FACTOR_DOWN;
            curr *= RESCALE_FACTOR_DOWN;
            scale2 += 512;
        } else if m != 0.0 && m < RESCALE_FACTOR_DOWN {
            prev *= RESCALE_LIMIT;
            curr *= RESCALE_LIMIT;
            scale2 -= 512;
        }
        values[k + 1] = emit(curr, scale2);
    }

    let mut derivs = vec![0.0; k_max + 1];
    derivs[0] = -u * values[0];
    for k in 1..=k_max {
        derivs[k] = (2.0 * k as f64).sqrt() * values[k - 1] - u * values[k];
    }

    Ok(HermiteTable {
        argument: u,
        values,
        derivs,
    })
}

/// The h-scaled eigenfunction phi_{alpha,h}(x) = h^{-d/4} prod_j psi_{alpha_j}(x_j/sqrt(h)).
pub fn phi_alpha(x: &[f64], alpha: &[usize], params: &ModelParams) -> Result<f64> {
    if x.len() != params.dim() || alpha.len() != params.dim() {
        return Err(Error::Domain(format!(
            "point/index dimension mismatch: got {}/{}, params d={}",
            x.len(),
            alpha.len(),
            params.dim()
        )));
    }
    let sqrt_h = params.h().sqrt();
    let mut prod = params.h().powf(-(params.dim() as f64) / 4.0);
    for (xi, &ai) in x.iter().zip(alpha) {
        if !xi.is_finite() {
            return Err(Error::Domain(format!("non-finite coordinate {xi}")));
        }
        let table = hermite_table(xi / sqrt_h, ai)?;
        prod *= table.values[ai];
    }
    Ok(prod)
}
