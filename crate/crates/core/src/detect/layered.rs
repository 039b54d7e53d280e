//! Detectors that repeat a list search over all cyclic layer orderings.

use num_complex::Complex64;

use super::flops::FlopCount;
use super::frame::{argmin, Candidate, Frame};
use super::{true_distance, DetectionResult};
use crate::error::Result;
use crate::linalg::{cyclic_qr, cyclic_wr, residual_norm_sqr, ComplexMatrix, PuncturePattern};
use crate::modem::Constellation;

/// Candidate list of one ordering, symbols mapped back to original layers.
#[derive(Clone, Debug)]
pub struct Pass {
    /// Original layer detected at the root of this ordering.
    pub root: usize,
    pub permutation: Vec<usize>,
    /// One candidate per root symbol, distances in this ordering's frame.
    pub candidates: Vec<Candidate>,
    /// Index of the list minimum.
    pub best: usize,
}

impl Pass {
    pub fn winner(&self) -> &Candidate {
        &self.candidates[self.best]
    }
}

fn build_pass(root: usize, permutation: Vec<usize>, frame: &Frame, c: &Constellation, flops: &mut FlopCount) -> Pass {
    let mut list = frame.chase_list(c, flops);
    for cand in &mut list {
        let mut orig = vec![0usize; cand.symbols.len()];
        for (j, &layer) in permutation.iter().enumerate() {
            orig[layer] = cand.symbols[j];
        }
        cand.symbols = orig;
    }
    let best = argmin(list.iter().map(|c| c.distance));
    Pass { root, permutation, candidates: list, best }
}

/// Chase lists over the `N` cyclic QR orderings.
pub fn chase_passes(y: &[Complex64], h: &ComplexMatrix, c: &Constellation, flops: &mut FlopCount) -> Result<Vec<Pass>> {
    cyclic_qr(h)?
        .into_iter()
        .map(|step| {
            let frame = Frame::from_qr(y, &step.factors)?;
            Ok(build_pass(step.root, step.permutation, &frame, c, flops))
        })
        .collect()
}

/// Punctured chase lists over the `N` cyclic WR orderings.
pub fn pchase_passes(
    y: &[Complex64],
    h: &ComplexMatrix,
    c: &Constellation,
    pattern: &PuncturePattern,
    flops: &mut FlopCount,
) -> Result<Vec<Pass>> {
    cyclic_wr(h, pattern)?
        .into_iter()
        .map(|step| {
            let frame = Frame::from_wr(y, &step.factors)?;
            Ok(build_pass(step.root, step.permutation, &frame, c, flops))
        })
        .collect()
}

fn all_candidates(passes: &[Pass]) -> Vec<Candidate> {
    passes.iter().flat_map(|p| p.candidates.iter().cloned()).collect()
}

/// Chase detection over every cyclic ordering; QR frames preserve the
/// Euclidean metric, so the per-ordering winners compare directly.
pub fn lord(y: &[Complex64], h: &ComplexMatrix, c: &Constellation) -> Result<DetectionResult> {
    let mut flops = FlopCount::ZERO;
    let passes = chase_passes(y, h, c, &mut flops)?;
    let t = argmin(passes.iter().map(|p| p.winner().distance));
    let win = passes[t].winner().clone();
    Ok(DetectionResult { symbols: win.symbols, distance: win.distance, per_candidate: Some(all_candidates(&passes)), flops })
}

/// Vector subspace detector: punctured chase over every cyclic ordering,
/// winners compared by their true distance `‖y − H x‖²`.
pub fn vssd(y: &[Complex64], h: &ComplexMatrix, c: &Constellation) -> Result<DetectionResult> {
    let mut flops = FlopCount::ZERO;
    let passes = pchase_passes(y, h, c, &PuncturePattern::full(h.cols()), &mut flops)?;
    let dists: Vec<f64> = passes.iter().map(|p| true_distance(y, h, &p.winner().symbols, c, &mut flops)).collect();
    let t = argmin(dists.iter().copied());
    Ok(DetectionResult {
        symbols: passes[t].winner().symbols.clone(),
        distance: dists[t],
        per_candidate: Some(all_candidates(&passes)),
        flops,
    })
}

fn root_symbols(passes: &[Pass]) -> Vec<usize> {
    let mut out = vec![0usize; passes.len()];
    for p in passes {
        out[p.root] = p.winner().symbols[p.root];
    }
    out
}

fn symbol_wise(y: &[Complex64], h: &ComplexMatrix, c: &Constellation, passes: Vec<Pass>, flops: FlopCount) -> DetectionResult {
    let symbols = root_symbols(&passes);
    let points: Vec<Complex64> = symbols.iter().map(|&s| c.point(s)).collect();
    // reported for diagnostics, not part of the detector's arithmetic
    let distance = residual_norm_sqr(y, h, &points);
    DetectionResult { symbols, distance, per_candidate: Some(all_candidates(&passes)), flops }
}

/// Symbol-wise subspace detector: layer `t` takes the root decision of the
/// punctured chase pass with `t` at the root.
pub fn sssd(y: &[Complex64], h: &ComplexMatrix, c: &Constellation) -> Result<DetectionResult> {
    let mut flops = FlopCount::ZERO;
    let passes = pchase_passes(y, h, c, &PuncturePattern::full(h.cols()), &mut flops)?;
    Ok(symbol_wise(y, h, c, passes, flops))
}

/// Symbol-wise LORD: as [`sssd`] with QR chase passes.
pub fn slord(y: &[Complex64], h: &ComplexMatrix, c: &Constellation) -> Result<DetectionResult> {
    let mut flops = FlopCount::ZERO;
    let passes = chase_passes(y, h, c, &mut flops)?;
    Ok(symbol_wise(y, h, c, passes, flops))
}
