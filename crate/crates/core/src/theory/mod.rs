//! Analytic models: average error rates over Rayleigh fading, layer BER
//! recursions, PEP bounds, flop costs, empirical list-event probabilities
//! and slope fitting.

mod ber;
mod complexity;
mod empirical;
mod gfun;
mod pep;
mod slope;

use serde::{Deserialize, Serialize};

pub use ber::{
    interference_variance, mean, nc_ber_theory, pattern_recursion, pcd_ber_theory, pnc_ber_theory,
    pnc_ber_theory_with, PatternSet, MAX_PATTERN_LAYERS,
};
pub use complexity::{flop_model, nc_mult_saving_ratio, theta1, theta2, theta3, FlopDelta, FlopModel, SavingsRow};
pub use empirical::{empirical_probs, EmpiricalConfig, EmpiricalPoint, EventCounts};
pub use gfun::{g_any, g_qam, g_rayleigh};
pub use pep::{
    default_expectations, delta_max_sq, pep_bound_pml, pep_bound_sssd, scalar_differences, PEP_ENUMERATION_CAP,
};
pub use slope::{diversity_slope, SlopePoint, MIN_SLOPE_EVENTS};

use crate::channel::sigma2_from_snr;
use crate::error::{MimoError, Result};

/// Which analytic curve to tabulate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    /// N/C, averaged over layers.
    Nc,
    /// Punctured N/C, averaged over layers.
    Pnc,
    /// Punctured chase detector closed form.
    Pcd,
    /// `G(d, γ, L)` at `γ = 10^{snr/10}`.
    G { diversity: usize },
}

impl CurveKind {
    pub fn label(&self) -> String {
        match self {
            CurveKind::Nc => "nc".into(),
            CurveKind::Pnc => "pnc".into(),
            CurveKind::Pcd => "pcd".into(),
            CurveKind::G { diversity } => format!("g{diversity}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryCurve {
    pub label: String,
    pub snr_db: Vec<f64>,
    pub values: Vec<f64>,
}

impl TheoryCurve {
    /// Tabulates `kind` for `n` layers of order `l`. SNR maps to noise as in
    /// the simulator, `σ² = N / 10^{snr/10}`. The N/C curves report the mean
    /// over the `N` layers; the PCD curve is its closed form unchanged.
    pub fn evaluate(kind: CurveKind, n: usize, l: usize, snr_db: &[f64]) -> Result<Self> {
        if snr_db.is_empty() || snr_db.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(MimoError::Config("SNR grid must be nonempty and strictly increasing".into()));
        }
        let values = snr_db
            .iter()
            .map(|&s| {
                let sigma2 = sigma2_from_snr(s, n);
                match kind {
                    CurveKind::Nc => nc_ber_theory(n, sigma2, l).map(|v| mean(&v)),
                    CurveKind::Pnc => pnc_ber_theory(n, sigma2, l).map(|v| mean(&v)),
                    CurveKind::Pcd => pcd_ber_theory(n, sigma2, l),
                    CurveKind::G { diversity } => g_any(diversity, 10f64.powf(s / 10.0), l),
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self { label: kind.label(), snr_db: snr_db.to_vec(), values })
    }

    pub fn slope_points(&self) -> Vec<SlopePoint> {
        self.snr_db
            .iter()
            .zip(&self.values)
            .map(|(&snr_db, &ber)| SlopePoint { snr_db, ber, events: None })
            .collect()
    }

    /// `snr_db,value` lines under a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("snr_db,value\n");
        for (x, v) in self.snr_db.iter().zip(&self.values) {
            s.push_str(&format!("{x},{v}\n"));
        }
        s
    }
}
