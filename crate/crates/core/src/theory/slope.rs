//! Least-squares diversity slope of an error-rate curve.

use crate::error::{MimoError, Result};

/// Minimum error events a simulated point needs to enter the fit.
pub const MIN_SLOPE_EVENTS: u64 = 100;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopePoint {
    pub snr_db: f64,
    pub ber: f64,
    /// Error events behind the estimate; `None` for analytic curves.
    pub events: Option<u64>,
}

/// Slope of `log₁₀ BER` against `snr_db / 10` over the last 10 dB of the
/// usable points (positive BER, at least [`MIN_SLOPE_EVENTS`] events).
pub fn diversity_slope(points: &[SlopePoint]) -> Result<f64> {
    let usable: Vec<&SlopePoint> = points
        .iter()
        .filter(|p| p.ber > 0.0 && p.ber.is_finite() && p.events.is_none_or(|e| e >= MIN_SLOPE_EVENTS))
        .collect();
    let top = usable
        .iter()
        .map(|p| p.snr_db)
        .fold(f64::NEG_INFINITY, f64::max);
    let fit: Vec<(f64, f64)> = usable
        .iter()
        .filter(|p| p.snr_db >= top - 10.0)
        .map(|p| (p.snr_db / 10.0, p.ber.log10()))
        .collect();
    if fit.len() < 2 {
        return Err(MimoError::InsufficientData(format!(
            "slope fit needs two usable points in the top decade, found {}",
            fit.len()
        )));
    }
    let n = fit.len() as f64;
    let mx = fit.iter().map(|p| p.0).sum::<f64>() / n;
    let my = fit.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = fit.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = fit.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(MimoError::InsufficientData("slope fit needs distinct SNR values".into()));
    }
    Ok(sxy / sxx)
}
