//! Empirical distributions of the squared diagonals of `R` and `R̊`.
//!
//! With unit-variance entries `2 r²_nn` is chi-squared with `2(N−n+1)`
//! degrees of freedom (1-based `n`); puncturing leaves 4 degrees of freedom
//! on every layer above the last two.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::channel::{draw_channel, ChannelConfig, RngStream};
use crate::error::{MimoError, Result};
use crate::linalg::{qrd, wrd, PuncturePattern};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistConfig {
    pub n: usize,
    pub draws: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub workers: usize,
    /// KS significance level.
    #[serde(default = "default_alpha")]
    pub significance: f64,
    /// Rows of the emitted CDF table per layer.
    #[serde(default = "default_grid")]
    pub cdf_points: usize,
}

fn one() -> usize {
    1
}

fn default_alpha() -> f64 {
    0.01
}

fn default_grid() -> usize {
    50
}

impl DistConfig {
    pub fn new(n: usize, draws: u64) -> Self {
        Self { n, draws, seed: 0, workers: 1, significance: default_alpha(), cdf_points: default_grid() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub dof: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdfRow {
    pub x: f64,
    pub qr_empirical: f64,
    pub wr_empirical: f64,
    pub qr_theory: f64,
    pub wr_theory: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerDist {
    /// 1-based layer.
    pub layer: usize,
    pub qr: KsResult,
    pub wr: KsResult,
    /// Largest gap between the two empirical CDFs.
    pub qr_wr_gap: f64,
    pub cdf: Vec<CdfRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistReport {
    pub config: DistConfig,
    pub layers: Vec<LayerDist>,
}

/// Degrees of freedom of `2 r²` for 1-based layer `layer` of `n`.
pub fn qr_dof(n: usize, layer: usize) -> usize {
    2 * (n - layer + 1)
}

pub fn wr_dof(n: usize, layer: usize) -> usize {
    if layer + 2 <= n {
        4
    } else {
        qr_dof(n, layer)
    }
}

/// Asymptotic Kolmogorov tail probability with the usual small-sample
/// correction of the argument.
fn kolmogorov_p(d: f64, samples: usize) -> f64 {
    let sn = (samples as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = 2.0 * (-1f64).powi(k as i32 - 1) * (-2.0 * k * k * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

/// One-sample KS statistic of sorted `xs` against `cdf`.
pub fn ks_statistic(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Empirical CDF of sorted `xs` at `x`.
fn ecdf(xs: &[f64], x: f64) -> f64 {
    xs.partition_point(|&v| v <= x) as f64 / xs.len() as f64
}

fn ks_test(xs: &[f64], dof: usize, alpha: f64) -> Result<KsResult> {
    let chi = ChiSquared::new(dof as f64).map_err(|e| MimoError::Config(e.to_string()))?;
    let statistic = ks_statistic(xs, |x| chi.cdf(x));
    let p_value = kolmogorov_p(statistic, xs.len());
    Ok(KsResult { dof, statistic, p_value, passed: p_value >= alpha })
}

/// Draws `draws` i.i.d. channels, decomposes each by QR and full
/// puncturing, and tests `2 r²_nn` and `2 r̊²_nn` per layer.
pub fn run_dist_study(cfg: &DistConfig) -> Result<DistReport> {
    if cfg.n < 2 || cfg.draws < 2 {
        return Err(MimoError::Config("distribution study needs n >= 2 and draws >= 2".into()));
    }
    if !(cfg.significance > 0.0 && cfg.significance < 1.0) || cfg.workers == 0 {
        return Err(MimoError::Config("significance must lie in (0, 1) and workers >= 1".into()));
    }
    let n = cfg.n;
    let channel = ChannelConfig::square(n);
    let pattern = PuncturePattern::full(n);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| MimoError::Config(e.to_string()))?;
    let diags: Vec<(Vec<f64>, Vec<f64>)> = pool.install(|| {
        (0..cfg.draws)
            .into_par_iter()
            .map(|t| {
                let h = draw_channel(&channel, &mut RngStream::new(cfg.seed, 0, t));
                let qr = qrd(&h)?;
                let wr = wrd(&h, &pattern)?;
                let sq = |m: &crate::linalg::ComplexMatrix| (0..n).map(|k| 2.0 * m[(k, k)].re.powi(2)).collect();
                Ok((sq(&qr.r), sq(&wr.r_punc)))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut layers = Vec::with_capacity(n);
    for k in 0..n {
        let mut qr: Vec<f64> = diags.iter().map(|d| d.0[k]).collect();
        let mut wr: Vec<f64> = diags.iter().map(|d| d.1[k]).collect();
        qr.sort_unstable_by(f64::total_cmp);
        wr.sort_unstable_by(f64::total_cmp);
        let layer = k + 1;
        let (dq, dw) = (qr_dof(n, layer), wr_dof(n, layer));
        let chi_q = ChiSquared::new(dq as f64).map_err(|e| MimoError::Config(e.to_string()))?;
        let chi_w = ChiSquared::new(dw as f64).map_err(|e| MimoError::Config(e.to_string()))?;
        let top = qr.last().copied().unwrap_or(0.0).max(wr.last().copied().unwrap_or(0.0));
        let cdf = (0..cfg.cdf_points)
            .map(|i| {
                let x = top * (i + 1) as f64 / cfg.cdf_points as f64;
                CdfRow {
                    x,
                    qr_empirical: ecdf(&qr, x),
                    wr_empirical: ecdf(&wr, x),
                    qr_theory: chi_q.cdf(x),
                    wr_theory: chi_w.cdf(x),
                }
            })
            .collect();
        let qr_wr_gap = qr.iter().chain(&wr).map(|&x| (ecdf(&qr, x) - ecdf(&wr, x)).abs()).fold(0.0, f64::max);
        layers.push(LayerDist {
            layer,
            qr: ks_test(&qr, dq, cfg.significance)?,
            wr: ks_test(&wr, dw, cfg.significance)?,
            qr_wr_gap,
            cdf,
        });
    }
    Ok(DistReport { config: cfg.clone(), layers })
}

impl DistReport {
    pub fn passed(&self) -> bool {
        self.layers.iter().all(|l| l.qr.passed && l.wr.passed)
    }

    /// KS summary, one line per layer.
    pub fn summary(&self) -> String {
        let mut s = String::from("layer  qr_dof  qr_ks     qr_p      wr_dof  wr_ks     wr_p\n");
        for l in &self.layers {
            let _ = writeln!(
                s,
                "{:<6} {:<7} {:<9.5} {:<9.4} {:<7} {:<9.5} {:.4}",
                l.layer, l.qr.dof, l.qr.statistic, l.qr.p_value, l.wr.dof, l.wr.statistic, l.wr.p_value
            );
        }
        s
    }

    /// CDF table as CSV.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("layer,x,qr_empirical,wr_empirical,qr_theory,wr_theory\n");
        for l in &self.layers {
            for r in &l.cdf {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    l.layer, r.x, r.qr_empirical, r.wr_empirical, r.qr_theory, r.wr_theory
                );
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dof_tables() {
        assert_eq!((1..=4).map(|l| qr_dof(4, l)).collect::<Vec<_>>(), vec![8, 6, 4, 2]);
        assert_eq!((1..=4).map(|l| wr_dof(4, l)).collect::<Vec<_>>(), vec![4, 4, 4, 2]);
    }

    #[test]
    fn ks_detects_wrong_law() {
        let chi = ChiSquared::new(4.0).unwrap();
        // quantiles of chi²(4) placed at mid-ranks: tiny statistic
        let xs: Vec<f64> = (0..1000).map(|i| chi.inverse_cdf((i as f64 + 0.5) / 1000.0)).collect();
        let good = ks_test(&xs, 4, 0.01).unwrap();
        assert!(good.statistic <= 0.0005 + 1e-9 && good.passed);
        let bad = ks_test(&xs, 8, 0.01).unwrap();
        assert!(!bad.passed);
    }

    #[test]
    fn kolmogorov_tail_values() {
        // P(K > 1.36) ≈ 0.05 and P(K > 1.63) ≈ 0.01 for large samples
        assert!((kolmogorov_p(1.358 / 1e3, 1_000_000) - 0.05).abs() < 2e-3);
        assert!((kolmogorov_p(1.628 / 1e3, 1_000_000) - 0.01).abs() < 1e-3);
    }

    #[test]
    fn small_study_is_deterministic() {
        let mut cfg = DistConfig::new(3, 500);
        let a = run_dist_study(&cfg).unwrap();
        cfg.workers = 3;
        let b = run_dist_study(&cfg).unwrap();
        assert_eq!(a.layers, b.layers);
        // the last two rows are untouched by puncturing
        assert_eq!(a.layers[2].qr_wr_gap, 0.0);
        assert_eq!(a.layers[1].qr_wr_gap, 0.0);
        assert!(a.to_csv().lines().count() == 1 + 3 * 50);
    }
}
