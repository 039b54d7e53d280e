//! Hard-output detectors.
//!
//! Frame-level detectors ([`nc`], [`pnc`], [`chase`], [`pchase`]) take an
//! already rotated observation and triangular factor. Channel-level
//! detectors take `y` and `H` and handle decomposition and layer ordering
//! themselves. Symbols are always reported as constellation indices in the
//! original layer order.

mod flops;
mod frame;
mod layered;
mod linear;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use flops::FlopCount;
pub use frame::Candidate;
pub use layered::{chase_passes, lord, pchase_passes, slord, sssd, vssd, Pass};
pub use linear::{mmse, mmse_equalize, MmseOutput};

use frame::{argmin, Frame};
use crate::error::{MimoError, Result};
use crate::linalg::{qrd, wrd, ComplexMatrix, PuncturePattern, WrFactors};
use crate::modem::Constellation;

/// Default enumeration cap for the ML and PML searches.
pub const DEFAULT_SEARCH_CAP: u64 = 1 << 24;

#[derive(Clone, Debug, PartialEq)]
pub struct DetectionResult {
    pub symbols: Vec<usize>,
    pub distance: f64,
    pub per_candidate: Option<Vec<Candidate>>,
    pub flops: FlopCount,
}

/// Nulling and cancellation on `ỹ = R x + ñ`.
pub fn nc(y_tilde: &[Complex64], r: &ComplexMatrix, c: &Constellation) -> Result<DetectionResult> {
    let frame = Frame::triangular(y_tilde.to_vec(), r)?;
    Ok(hard_sic(&frame, c))
}

/// Punctured nulling and cancellation on `ȳ = R̊ x + W* n`.
///
/// With the full pattern every upper layer depends only on the root
/// decision and the slicing is a single vector step; partial patterns fall
/// back to back-substitution over the kept entries.
pub fn pnc(y_bar: &[Complex64], wr: &WrFactors, c: &Constellation) -> Result<DetectionResult> {
    let frame = Frame::punctured(y_bar.to_vec(), wr)?;
    Ok(hard_sic(&frame, c))
}

fn hard_sic(frame: &Frame, c: &Constellation) -> DetectionResult {
    let mut flops = FlopCount::ZERO;
    let (symbols, distance) = frame.sic(None, c, &mut flops, false);
    DetectionResult { symbols, distance, per_candidate: None, flops }
}

/// Chase detector: one SIC continuation per root symbol, best by
/// `‖ỹ − R x‖²`.
pub fn chase(y_tilde: &[Complex64], r: &ComplexMatrix, c: &Constellation) -> Result<DetectionResult> {
    let frame = Frame::triangular(y_tilde.to_vec(), r)?;
    Ok(list_decision(&frame, c))
}

/// Punctured chase detector, best by `‖ȳ − R̊ x‖²`.
pub fn pchase(y_bar: &[Complex64], wr: &WrFactors, c: &Constellation) -> Result<DetectionResult> {
    let frame = Frame::punctured(y_bar.to_vec(), wr)?;
    Ok(list_decision(&frame, c))
}

fn list_decision(frame: &Frame, c: &Constellation) -> DetectionResult {
    let mut flops = FlopCount::ZERO;
    let list = frame.chase_list(c, &mut flops);
    let best = argmin(list.iter().map(|cand| cand.distance));
    DetectionResult {
        symbols: list[best].symbols.clone(),
        distance: list[best].distance,
        per_candidate: Some(list),
        flops,
    }
}

fn check_search_space(n: usize, c: &Constellation, cap: u64) -> Result<()> {
    let size = (c.order() as f64).powi(n as i32);
    if size > cap as f64 {
        return Err(MimoError::SearchSpaceTooLarge { size, cap });
    }
    Ok(())
}

/// Maximum-likelihood detection, `argmin ‖y − H x‖²` over all `L^N`
/// vectors, found exactly by a pruned tree search in the QR frame.
pub fn ml_exhaustive(y: &[Complex64], h: &ComplexMatrix, c: &Constellation) -> Result<DetectionResult> {
    ml_with_cap(y, h, c, DEFAULT_SEARCH_CAP)
}

pub fn ml_with_cap(y: &[Complex64], h: &ComplexMatrix, c: &Constellation, cap: u64) -> Result<DetectionResult> {
    check_search_space(h.cols(), c, cap)?;
    let frame = Frame::from_qr(y, &qrd(h)?)?;
    Ok(searched(&frame, c))
}

/// Punctured ML, `argmin ‖W*(y − H x)‖²`.
pub fn pml_exhaustive(
    y: &[Complex64],
    h: &ComplexMatrix,
    c: &Constellation,
    pattern: &PuncturePattern,
) -> Result<DetectionResult> {
    pml_with_cap(y, h, c, pattern, DEFAULT_SEARCH_CAP)
}

pub fn pml_with_cap(
    y: &[Complex64],
    h: &ComplexMatrix,
    c: &Constellation,
    pattern: &PuncturePattern,
    cap: u64,
) -> Result<DetectionResult> {
    check_search_space(h.cols(), c, cap)?;
    let frame = Frame::from_wr(y, &wrd(h, pattern)?)?;
    Ok(searched(&frame, c))
}

fn searched(frame: &Frame, c: &Constellation) -> DetectionResult {
    let mut flops = FlopCount::ZERO;
    let (symbols, distance) = frame.search(c, &mut flops);
    DetectionResult { symbols, distance, per_candidate: None, flops }
}

/// `‖y − H x‖²`, charged as `N²` complex products and `N(N−1)` complex
/// additions for `Hx`, `N` subtractions for the residual, `N` squared
/// magnitudes costed as complex products and `N−1` additions for the sum.
pub fn true_distance(
    y: &[Complex64],
    h: &ComplexMatrix,
    x: &[usize],
    c: &Constellation,
    flops: &mut FlopCount,
) -> f64 {
    let (m, n) = (h.rows() as u64, h.cols() as u64);
    let points: Vec<Complex64> = x.iter().map(|&s| c.point(s)).collect();
    let d = crate::linalg::residual_norm_sqr(y, h, &points);
    flops.complex_mul(m * n);
    flops.complex_add(m * (n - 1));
    flops.complex_add(m);
    flops.complex_mul(m);
    flops.complex_add(m - 1);
    d
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorId {
    Ml,
    Pml,
    Nc,
    Pnc,
    Ppnc,
    Cd,
    Pcd,
    Ppcd,
    Lord,
    Ssd,
    Sssd,
    Slord,
    Mmse,
}

impl DetectorId {
    pub const ALL: [DetectorId; 13] = [
        DetectorId::Ml,
        DetectorId::Pml,
        DetectorId::Nc,
        DetectorId::Pnc,
        DetectorId::Ppnc,
        DetectorId::Cd,
        DetectorId::Pcd,
        DetectorId::Ppcd,
        DetectorId::Lord,
        DetectorId::Ssd,
        DetectorId::Sssd,
        DetectorId::Slord,
        DetectorId::Mmse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetectorId::Ml => "ml",
            DetectorId::Pml => "pml",
            DetectorId::Nc => "nc",
            DetectorId::Pnc => "pnc",
            DetectorId::Ppnc => "ppnc",
            DetectorId::Cd => "cd",
            DetectorId::Pcd => "pcd",
            DetectorId::Ppcd => "ppcd",
            DetectorId::Lord => "lord",
            DetectorId::Ssd => "ssd",
            DetectorId::Sssd => "sssd",
            DetectorId::Slord => "slord",
            DetectorId::Mmse => "mmse",
        }
    }

    /// Whether the detector needs a square channel and WR factors.
    pub fn uses_puncturing(self) -> bool {
        matches!(
            self,
            DetectorId::Pml | DetectorId::Pnc | DetectorId::Ppnc | DetectorId::Pcd | DetectorId::Ppcd | DetectorId::Ssd | DetectorId::Sssd
        )
    }

    /// Whether a max-log LLR generator exists for this detector.
    pub fn has_soft_output(self) -> bool {
        matches!(
            self,
            DetectorId::Pcd | DetectorId::Cd | DetectorId::Sssd | DetectorId::Slord | DetectorId::Ssd | DetectorId::Lord | DetectorId::Mmse
        )
    }
}

impl fmt::Display for DetectorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorId {
    type Err = MimoError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let s = if s == "vssd" { "ssd".to_string() } else { s };
        DetectorId::ALL
            .iter()
            .copied()
            .find(|d| d.name() == s)
            .ok_or_else(|| MimoError::Config(format!("unknown detector '{s}'")))
    }
}

/// A configured detector.
#[derive(Clone, Debug)]
pub struct Detector {
    id: DetectorId,
    constellation: Constellation,
    /// Columns (0-based) left unpunctured by `ppnc`/`ppcd`; `None` keeps the
    /// column next to the last one.
    partial_columns: Option<Vec<usize>>,
    search_cap: u64,
}

impl Detector {
    pub fn new(id: DetectorId, constellation: Constellation) -> Self {
        Self { id, constellation, partial_columns: None, search_cap: DEFAULT_SEARCH_CAP }
    }

    pub fn with_partial_columns(mut self, cols: Vec<usize>) -> Self {
        self.partial_columns = Some(cols);
        self
    }

    pub fn with_search_cap(mut self, cap: u64) -> Self {
        self.search_cap = cap;
        self
    }

    pub fn id(&self) -> DetectorId {
        self.id
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    /// Puncture pattern used for an `n`-layer channel.
    pub fn pattern(&self, n: usize) -> Result<PuncturePattern> {
        match self.id {
            DetectorId::Ppnc | DetectorId::Ppcd => {
                let cols = match &self.partial_columns {
                    Some(c) => c.clone(),
                    None => vec![n.saturating_sub(2)],
                };
                PuncturePattern::retaining_columns(n, &cols)
            }
            _ => Ok(PuncturePattern::full(n)),
        }
    }

    /// Runs the detector on `y = H x + n`.
    pub fn detect(&self, y: &[Complex64], h: &ComplexMatrix, sigma2: f64) -> Result<DetectionResult> {
        let c = &self.constellation;
        let n = h.cols();
        if self.id.uses_puncturing() && h.rows() != n {
            return Err(MimoError::DimensionMismatch(format!("{} needs a square channel", self.id)));
        }
        match self.id {
            DetectorId::Ml => ml_with_cap(y, h, c, self.search_cap),
            DetectorId::Pml => pml_with_cap(y, h, c, &self.pattern(n)?, self.search_cap),
            DetectorId::Nc | DetectorId::Cd => {
                let qr = qrd(h)?;
                let yt = frame::rotate(&qr.q, y)?;
                if self.id == DetectorId::Nc {
                    nc(&yt, &qr.r, c)
                } else {
                    chase(&yt, &qr.r, c)
                }
            }
            DetectorId::Pnc | DetectorId::Ppnc | DetectorId::Pcd | DetectorId::Ppcd => {
                let wr = wrd(h, &self.pattern(n)?)?;
                let yb = frame::rotate(&wr.w, y)?;
                if matches!(self.id, DetectorId::Pnc | DetectorId::Ppnc) {
                    pnc(&yb, &wr, c)
                } else {
                    pchase(&yb, &wr, c)
                }
            }
            DetectorId::Lord => lord(y, h, c),
            DetectorId::Ssd => vssd(y, h, c),
            DetectorId::Sssd => sssd(y, h, c),
            DetectorId::Slord => slord(y, h, c),
            DetectorId::Mmse => mmse(y, h, sigma2, c),
        }
    }
}
