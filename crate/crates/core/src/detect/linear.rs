use num_complex::Complex64;

use super::flops::FlopCount;
use super::DetectionResult;
use crate::error::{MimoError, Result};
use crate::linalg::{cholesky_solve, corr_sqrt, residual_norm_sqr, ComplexMatrix, ComplexVector};
use crate::modem::Constellation;

/// MMSE filter output with the per-layer bias `μ_n = [G⁻¹H*H]_nn`,
/// `G = H*H + σ²I`.
#[derive(Clone, Debug)]
pub struct MmseOutput {
    pub estimate: ComplexVector,
    pub bias: Vec<f64>,
}

pub fn mmse_equalize(y: &[Complex64], h: &ComplexMatrix, sigma2: f64) -> Result<MmseOutput> {
    let n = h.cols();
    if y.len() != h.rows() {
        return Err(MimoError::DimensionMismatch("observation length differs from receive antennas".into()));
    }
    let mut g = h.adjoint().matmul(h);
    for k in 0..n {
        g[(k, k)] += sigma2;
    }
    let c = corr_sqrt(&g)?;
    let estimate = cholesky_solve(&c, &h.adjoint_mul_vec(y));
    // μ_n = 1 − σ² [G⁻¹]_nn
    let bias = (0..n)
        .map(|k| {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[k] = Complex64::new(1.0, 0.0);
            1.0 - sigma2 * cholesky_solve(&c, &e)[k].re
        })
        .collect();
    Ok(MmseOutput { estimate, bias })
}

/// Linear MMSE reference: slice `(H*H + σ²I)⁻¹ H* y` componentwise.
pub fn mmse(y: &[Complex64], h: &ComplexMatrix, sigma2: f64, c: &Constellation) -> Result<DetectionResult> {
    let out = mmse_equalize(y, h, sigma2)?;
    let symbols: Vec<usize> = out.estimate.iter().map(|&z| c.slice(z)).collect();
    let (m, n) = (h.rows() as u64, h.cols() as u64);
    let mut flops = FlopCount::ZERO;
    // matched filter and the two triangular solves
    flops.complex_mul(m * n + n * n);
    flops.complex_add(n * (m - 1) + n * (n - 1));
    let points: Vec<Complex64> = symbols.iter().map(|&s| c.point(s)).collect();
    let distance = residual_norm_sqr(y, h, &points);
    Ok(DetectionResult { symbols, distance, per_candidate: None, flops })
}
