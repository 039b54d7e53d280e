//! Pairwise-error-probability union bounds for PML and SSSD.

use num_complex::Complex64;

use crate::error::{MimoError, Result};
use crate::modem::Constellation;

/// Largest difference-vector space enumerated by [`pep_bound_pml`].
pub const PEP_ENUMERATION_CAP: u64 = 1 << 24;

/// Distinct nonzero differences `p − q` between constellation points.
pub fn scalar_differences(c: &Constellation) -> Vec<Complex64> {
    // quantise on the point spacing so rounding noise cannot split a value
    let unit = c.scale();
    let mut keys: Vec<(i64, i64)> = Vec::new();
    for p in c.points() {
        for q in c.points() {
            let d = (p - q) / unit;
            let key = (d.re.round() as i64, d.im.round() as i64);
            if key != (0, 0) {
                keys.push(key);
            }
        }
    }
    keys.sort_unstable();
    keys.dedup();
    keys.into_iter().map(|(re, im)| Complex64::new(re as f64, im as f64) * unit).collect()
}

/// Union bound on the PML vector error rate: the sum over every nonzero
/// difference vector `d` with entries in `Φ ∪ {0}` of
/// `det(I + d d*/(4Nσ²))^{-2} = (1 + ‖d‖²/(4Nσ²))^{-2}`.
pub fn pep_bound_pml(sigma2: f64, c: &Constellation, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(MimoError::Config("need at least one layer".into()));
    }
    let mut norms: Vec<f64> = vec![0.0];
    norms.extend(scalar_differences(c).iter().map(|d| d.norm_sqr()));
    let size = (norms.len() as f64).powi(n as i32);
    if size > PEP_ENUMERATION_CAP as f64 {
        return Err(MimoError::SearchSpaceTooLarge { size, cap: PEP_ENUMERATION_CAP });
    }
    let scale = 4.0 * n as f64 * sigma2;
    let mut idx = vec![0usize; n];
    let mut total = 0.0;
    loop {
        // odometer over Φ ∪ {0}, skipping the all-zero vector
        let mut k = 0;
        while k < n {
            idx[k] += 1;
            if idx[k] < norms.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
        let dist: f64 = idx.iter().map(|&i| norms[i]).sum();
        total += (1.0 + dist / scale).powi(-2);
    }
    Ok(total)
}

/// Union bound on the SSSD root-symbol error rate,
/// `Σ_{d∈Φ} (|d|² / (4Nσ² + 4δ))^{-N}` for interference energy `δ`.
pub fn pep_bound_sssd(sigma2: f64, c: &Constellation, n: usize, delta_sq: f64) -> f64 {
    let denom = 4.0 * n as f64 * sigma2 + 4.0 * delta_sq;
    scalar_differences(c).iter().map(|d| (d.norm_sqr() / denom).powi(-(n as i32))).sum()
}

/// Worst-case residual interference energy after a one-bit root slicing
/// error: `Σ_n E[r̊²_n,N] β²` with `β = 2/log₂L` (2 for BPSK).
/// `expectations` holds one entry per upper layer.
pub fn delta_max_sq(l: usize, expectations: &[f64]) -> f64 {
    let beta = if l == 2 { 2.0 } else { 2.0 / (l as f64).log2() };
    expectations.iter().map(|e| e * beta * beta).sum()
}

/// `N−1` upper layers at the unit-variance mean `E[r̊²] = 4`.
pub fn default_expectations(n: usize) -> Vec<f64> {
    vec![4.0; n.saturating_sub(1)]
}
