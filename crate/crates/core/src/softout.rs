//! Max-log LLRs from candidate lists.
//!
//! `λ = (min_{b=0} d − min_{b=1} d) / σ²`, so a positive value favours bit 1.
//! Values are clipped to `±clip` and a bit value absent from every list
//! saturates at the clip.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::detect::{chase_passes, mmse_equalize, pchase_passes, Candidate, DetectorId, FlopCount, Pass};
use crate::error::{MimoError, Result};
use crate::linalg::{ComplexMatrix, PuncturePattern, QrFactors};
use crate::modem::Constellation;

pub const DEFAULT_CLIP: f64 = 60.0;

const RATIO_FLOOR: f64 = 1e-12;

/// LLRs indexed by (layer, bit), layers in original order.
#[derive(Clone, Debug, PartialEq)]
pub struct LlrFrame {
    layers: usize,
    bits: usize,
    llr: Vec<f64>,
    clip: f64,
}

impl LlrFrame {
    fn zeros(layers: usize, bits: usize, clip: f64) -> Self {
        Self { layers, bits, llr: vec![0.0; layers * bits], clip }
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn bits_per_layer(&self) -> usize {
        self.bits
    }

    pub fn clip(&self) -> f64 {
        self.clip
    }

    pub fn get(&self, layer: usize, bit: usize) -> f64 {
        self.llr[layer * self.bits + bit]
    }

    pub fn layer(&self, layer: usize) -> &[f64] {
        &self.llr[layer * self.bits..(layer + 1) * self.bits]
    }

    pub fn values(&self) -> &[f64] {
        &self.llr
    }

    /// The same LLRs saturated at `min(clip, self.clip())`.
    pub fn clipped(mut self, clip: f64) -> Self {
        if clip < self.clip {
            for v in &mut self.llr {
                *v = v.clamp(-clip, clip);
            }
            self.clip = clip;
        }
        self
    }

    /// Bit decisions, 1 where `λ > 0`, layer-major.
    pub fn hard_bits(&self) -> Vec<u8> {
        self.llr.iter().map(|&v| u8::from(v > 0.0)).collect()
    }

    fn set(&mut self, layer: usize, bit: usize, min0: f64, min1: f64, sigma2: f64) {
        self.llr[layer * self.bits + bit] = saturate((min0 - min1) / sigma2, self.clip);
    }
}

fn saturate(v: f64, clip: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(-clip, clip)
    }
}

fn check_sigma2(sigma2: f64) -> Result<()> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(MimoError::Config(format!("noise variance must be positive, got {sigma2}")));
    }
    Ok(())
}

/// Per-bit minima over the candidates for one layer.
fn bit_minima(cands: &[Candidate], layer: usize, c: &Constellation) -> Vec<[f64; 2]> {
    let mut mins = vec![[f64::INFINITY; 2]; c.bits_per_symbol()];
    for cand in cands {
        let s = cand.symbols[layer];
        for (k, m) in mins.iter_mut().enumerate() {
            let b = c.bit(s, k) as usize;
            if cand.distance < m[b] {
                m[b] = cand.distance;
            }
        }
    }
    mins
}

/// Root-layer LLRs from a single candidate list.
pub fn llr_from_list(cands: &[Candidate], layer: usize, c: &Constellation, sigma2: f64, clip: f64) -> Vec<f64> {
    bit_minima(cands, layer, c)
        .into_iter()
        .map(|[m0, m1]| saturate((m0 - m1) / sigma2, clip))
        .collect()
}

fn per_partition(passes: &[Pass], c: &Constellation, sigma2: f64, clip: f64) -> LlrFrame {
    let mut out = LlrFrame::zeros(passes.len(), c.bits_per_symbol(), clip);
    for p in passes {
        for (k, [m0, m1]) in bit_minima(&p.candidates, p.root, c).into_iter().enumerate() {
            out.set(p.root, k, m0, m1, sigma2);
        }
    }
    out
}

fn global(passes: &[Pass], c: &Constellation, sigma2: f64, clip: f64) -> LlrFrame {
    let n = passes.len();
    let mut out = LlrFrame::zeros(n, c.bits_per_symbol(), clip);
    for layer in 0..n {
        let mut mins = vec![[f64::INFINITY; 2]; c.bits_per_symbol()];
        for p in passes {
            for (m, pm) in mins.iter_mut().zip(bit_minima(&p.candidates, layer, c)) {
                m[0] = m[0].min(pm[0]);
                m[1] = m[1].min(pm[1]);
            }
        }
        for (k, [m0, m1]) in mins.into_iter().enumerate() {
            out.set(layer, k, m0, m1, sigma2);
        }
    }
    out
}

fn wr_passes(y: &[Complex64], h: &ComplexMatrix, c: &Constellation) -> Result<Vec<Pass>> {
    let mut flops = FlopCount::ZERO;
    pchase_passes(y, h, c, &PuncturePattern::full(h.cols()), &mut flops)
}

fn qr_passes(y: &[Complex64], h: &ComplexMatrix, c: &Constellation) -> Result<Vec<Pass>> {
    let mut flops = FlopCount::ZERO;
    chase_passes(y, h, c, &mut flops)
}

/// Symbol-wise subspace LLRs: layer `t`'s bits come from the punctured
/// chase list of the ordering with `t` at the root.
pub fn llr_sssd(y: &[Complex64], h: &ComplexMatrix, c: &Constellation, sigma2: f64) -> Result<LlrFrame> {
    check_sigma2(sigma2)?;
    Ok(per_partition(&wr_passes(y, h, c)?, c, sigma2, DEFAULT_CLIP))
}

/// As [`llr_sssd`] with QR chase lists.
pub fn llr_slord(y: &[Complex64], h: &ComplexMatrix, c: &Constellation, sigma2: f64) -> Result<LlrFrame> {
    check_sigma2(sigma2)?;
    Ok(per_partition(&qr_passes(y, h, c)?, c, sigma2, DEFAULT_CLIP))
}

/// Global-distance subspace LLRs: minima over the union of all punctured
/// lists, for every bit of every layer.
pub fn llr_ssd(y: &[Complex64], h: &ComplexMatrix, c: &Constellation, sigma2: f64) -> Result<LlrFrame> {
    check_sigma2(sigma2)?;
    Ok(global(&wr_passes(y, h, c)?, c, sigma2, DEFAULT_CLIP))
}

/// As [`llr_ssd`] over the QR chase lists.
pub fn llr_lord(y: &[Complex64], h: &ComplexMatrix, c: &Constellation, sigma2: f64) -> Result<LlrFrame> {
    check_sigma2(sigma2)?;
    Ok(global(&qr_passes(y, h, c)?, c, sigma2, DEFAULT_CLIP))
}

/// Per-layer LLRs of the bias-removed MMSE output `z_n = x̃_n / μ_n`,
/// treated as a scalar channel with noise variance `(1 − μ_n) / μ_n`.
pub fn llr_mmse(y: &[Complex64], h: &ComplexMatrix, c: &Constellation, sigma2: f64) -> Result<LlrFrame> {
    check_sigma2(sigma2)?;
    let eq = mmse_equalize(y, h, sigma2)?;
    let n = h.cols();
    let mut out = LlrFrame::zeros(n, c.bits_per_symbol(), DEFAULT_CLIP);
    for layer in 0..n {
        let mu = eq.bias[layer];
        if !(mu > 0.0) {
            return Err(MimoError::DivideByZero(format!("MMSE bias of layer {layer} is {mu:e}")));
        }
        let z = eq.estimate[layer] / mu;
        let var = ((1.0 - mu) / mu).max(f64::MIN_POSITIVE);
        let cands: Vec<Candidate> = (0..c.order())
            .map(|s| {
                let mut symbols = vec![0; n];
                symbols[layer] = s;
                Candidate { symbols, distance: (z - c.point(s)).norm_sqr() }
            })
            .collect();
        for (k, [m0, m1]) in bit_minima(&cands, layer, c).into_iter().enumerate() {
            out.set(layer, k, m0, m1, var);
        }
    }
    Ok(out)
}

/// LLRs for a soft-capable detector. `pcd` and `cd` evaluate their lists
/// for every ordering, which is the same computation as `sssd` and `slord`.
pub fn soft_output(id: DetectorId, y: &[Complex64], h: &ComplexMatrix, c: &Constellation, sigma2: f64) -> Result<LlrFrame> {
    match id {
        DetectorId::Sssd | DetectorId::Pcd => llr_sssd(y, h, c, sigma2),
        DetectorId::Slord | DetectorId::Cd => llr_slord(y, h, c, sigma2),
        DetectorId::Ssd => llr_ssd(y, h, c, sigma2),
        DetectorId::Lord => llr_lord(y, h, c, sigma2),
        DetectorId::Mmse => llr_mmse(y, h, c, sigma2),
        other => Err(MimoError::Config(format!("detector {other} has no soft output"))),
    }
}

/// One root symbol of the distance-scaling sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingRow {
    pub root_symbol: usize,
    /// Chase candidate metric in the QR frame.
    pub qr_distance: f64,
    /// Punctured chase candidate metric in the WR frame.
    pub wr_distance: f64,
}

impl ScalingRow {
    /// `wr / qr`, undefined at (numerically) zero QR distance.
    pub fn ratio(&self) -> Option<f64> {
        (self.qr_distance > RATIO_FLOOR).then(|| self.wr_distance / self.qr_distance)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingReport {
    /// Rows sorted by QR-frame distance (root symbol breaks ties).
    pub rows: Vec<ScalingRow>,
    /// Fraction of row pairs whose order flips between the two frames.
    pub order_flip_rate: f64,
    pub mean_ratio: f64,
}

impl ScalingReport {
    pub fn to_text(&self) -> String {
        let mut s = String::from("# root_symbol qr_distance wr_distance ratio\n");
        for r in &self.rows {
            let ratio = r.ratio().map_or_else(|| "nan".to_string(), |v| v.to_string());
            let _ = writeln!(s, "{} {} {} {}", r.root_symbol, r.qr_distance, r.wr_distance, ratio);
        }
        let _ = writeln!(s, "# mean_ratio {}", self.mean_ratio);
        let _ = writeln!(s, "# order_flip_rate {}", self.order_flip_rate);
        s
    }
}

/// Sweeps the root symbol of the identity ordering and tabulates the chase
/// metrics in the QR frame against the punctured ones in the WR frame.
pub fn distance_scaling_report(y: &[Complex64], h: &ComplexMatrix, c: &Constellation) -> Result<ScalingReport> {
    let qr: QrFactors = crate::linalg::qrd(h)?;
    let wr = crate::linalg::wrd(h, &PuncturePattern::full(h.cols()))?;
    let q_list = crate::detect::chase(&qr.q.adjoint_mul_vec(y), &qr.r, c)?.per_candidate.unwrap_or_default();
    let w_list = crate::detect::pchase(&wr.w.adjoint_mul_vec(y), &wr, c)?.per_candidate.unwrap_or_default();
    let mut rows: Vec<ScalingRow> = q_list
        .iter()
        .zip(&w_list)
        .enumerate()
        .map(|(s, (a, b))| ScalingRow { root_symbol: s, qr_distance: a.distance, wr_distance: b.distance })
        .collect();
    rows.sort_by(|a, b| a.qr_distance.total_cmp(&b.qr_distance).then(a.root_symbol.cmp(&b.root_symbol)));

    let mut flips = 0usize;
    let mut pairs = 0usize;
    for i in 0..rows.len() {
        for j in (i + 1)..rows.len() {
            pairs += 1;
            if rows[i].wr_distance > rows[j].wr_distance {
                flips += 1;
            }
        }
    }
    let ratios: Vec<f64> = rows.iter().filter_map(ScalingRow::ratio).collect();
    let mean_ratio = if ratios.is_empty() { f64::NAN } else { ratios.iter().sum::<f64>() / ratios.len() as f64 };
    Ok(ScalingReport {
        rows,
        order_flip_rate: if pairs == 0 { 0.0 } else { flips as f64 / pairs as f64 },
        mean_ratio,
    })
}
