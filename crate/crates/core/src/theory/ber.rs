//! Layer-wise BER approximations for (punctured) nulling and cancellation
//! and the punctured chase detector.

use super::gfun::g_any;
use crate::error::{MimoError, Result};

/// Largest layer count accepted by the full error-pattern recursion.
pub const MAX_PATTERN_LAYERS: usize = 16;

/// Variance of the residual interference left by a wrong lower-layer
/// decision: 4 for BPSK, `(2/log₂L)²` otherwise.
pub fn interference_variance(l: usize) -> f64 {
    if l == 2 {
        4.0
    } else {
        (2.0 / (l as f64).log2()).powi(2)
    }
}

/// Which lower-layer error patterns feed the conditional error rate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PatternSet {
    /// Every indicator vector over layers `n+1..N`; each layer's own
    /// outcome extends the patterns seen by the layers above it.
    Full,
    /// Only the root-layer outcome matters, as after full puncturing.
    RootOnly,
}

/// Generic error-pattern recursion. Returns per-layer values, index 0 being
/// the first (top) layer and index `N−1` the root.
///
/// Layer `n < N` sees `G(dof(n), 1/(σ² + v|ψ|), L)` for pattern `ψ`, where
/// `|ψ|` counts wrong lower layers; the root layer sees `G(1, 1/σ², L)`.
/// `dof` takes the 1-based layer index.
pub fn pattern_recursion(
    n_layers: usize,
    sigma2: f64,
    l: usize,
    v: f64,
    patterns: PatternSet,
    dof: impl Fn(usize) -> usize,
) -> Result<Vec<f64>> {
    if n_layers == 0 {
        return Err(MimoError::Config("need at least one layer".into()));
    }
    if patterns == PatternSet::Full && n_layers > MAX_PATTERN_LAYERS {
        return Err(MimoError::PatternSpaceTooLarge(n_layers));
    }
    let mut out = vec![0.0; n_layers];
    let root = g_any(1, 1.0 / sigma2, l)?;
    out[n_layers - 1] = root;
    // probs[mask]: probability of the error indicators of the processed
    // lower layers, bit i set for the i-th processed layer
    let mut probs = vec![1.0 - root, root];
    for n in (1..n_layers).rev() {
        let d = dof(n);
        let cond: Vec<f64> = (0..probs.len())
            .map(|mask| g_any(d, 1.0 / (sigma2 + v * (mask as u32).count_ones() as f64), l))
            .collect::<Result<_>>()?;
        let mut p = 0.0;
        for (c, q) in cond.iter().zip(&probs) {
            p += c * q;
        }
        out[n - 1] = p;
        if patterns == PatternSet::Full && n > 1 {
            let width = probs.len();
            let mut next = vec![0.0; 2 * width];
            for mask in 0..width {
                next[mask] = probs[mask] * (1.0 - cond[mask]);
                next[mask | width] = probs[mask] * cond[mask];
            }
            probs = next;
        }
    }
    Ok(out)
}

/// Nulling and cancellation: layer `n` has diversity `N−n+1` and sees every
/// lower-layer error pattern.
pub fn nc_ber_theory(n_layers: usize, sigma2: f64, l: usize) -> Result<Vec<f64>> {
    pattern_recursion(n_layers, sigma2, l, interference_variance(l), PatternSet::Full, |n| n_layers - n + 1)
}

/// Punctured N/C: upper layers have diversity 2 and only the root decision
/// propagates, `P̊_n = G(2,1/σ²)(1−P̊_N) + G(2,1/(σ²+v))P̊_N`.
pub fn pnc_ber_theory(n_layers: usize, sigma2: f64, l: usize) -> Result<Vec<f64>> {
    pnc_ber_theory_with(n_layers, sigma2, l, interference_variance(l))
}

/// [`pnc_ber_theory`] with an explicit interference variance.
pub fn pnc_ber_theory_with(n_layers: usize, sigma2: f64, l: usize, v: f64) -> Result<Vec<f64>> {
    if n_layers == 0 {
        return Err(MimoError::Config("need at least one layer".into()));
    }
    let root = g_any(1, 1.0 / sigma2, l)?;
    let clean = g_any(2, 1.0 / sigma2, l)?;
    let hit = g_any(2, 1.0 / (sigma2 + v), l)?;
    let mut out = vec![clean * (1.0 - root) + hit * root; n_layers];
    out[n_layers - 1] = root;
    Ok(out)
}

/// Punctured chase detector: `(N−1) G(2, 1/σ², L)`; the root layer is
/// searched exhaustively and contributes no propagated error.
pub fn pcd_ber_theory(n_layers: usize, sigma2: f64, l: usize) -> Result<f64> {
    if n_layers < 2 {
        return Err(MimoError::Config("need at least two layers".into()));
    }
    Ok((n_layers - 1) as f64 * g_any(2, 1.0 / sigma2, l)?)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}
