use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{SimConfig, SimMode};
use crate::channel::{draw_trial, sigma2_from_snr, ChannelModel, RngStream, Trial};
use crate::detect::FlopCount;
use crate::error::{MimoError, Result};
use crate::modem::{bit_errors, vector_to_bits};
use crate::softout::soft_output;

/// Trials evaluated per worker between early-stop checks.
const BLOCK: u64 = 256;

/// Tallies for one SNR point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub snr_db: f64,
    pub sigma2: f64,
    pub trials: u64,
    pub frame_errors: u64,
    pub bit_errors: u64,
    pub bits: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flops: Option<FlopCount>,
}

impl PointResult {
    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.bit_errors as f64 / self.bits as f64
        }
    }

    pub fn fer(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.frame_errors as f64 / self.trials as f64
        }
    }
}

/// A campaign's configuration echo and per-point tallies. The wall time and
/// the worker count are kept out of result files, and equality ignores
/// both, so a file depends on nothing but the configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimResult {
    pub config: SimConfig,
    pub points: Vec<PointResult>,
    #[serde(skip)]
    pub wall_time_secs: Option<f64>,
}

impl PartialEq for SimResult {
    fn eq(&self, other: &Self) -> bool {
        let same_config = SimConfig { workers: other.config.workers, ..self.config.clone() } == other.config;
        same_config && self.points == other.points
    }
}

struct Outcome {
    frame_error: bool,
    bit_errors: u64,
    bits: u64,
    flops: FlopCount,
    /// `(layer, bit, llr, tx_bit)` rows for the LLR dump.
    llrs: Vec<(usize, usize, f64, u8)>,
}

/// Evaluates trials in blocks and scans them in trial order, stopping at the
/// `target`-th frame error, so the tally never depends on the block size or
/// the number of workers.
fn run_point(
    pool: &rayon::ThreadPool,
    cfg: &SimConfig,
    snr_index: usize,
    trial: impl Fn(&mut RngStream) -> Result<Outcome> + Sync,
    mut on_trial: impl FnMut(u64, &Outcome) -> Result<()>,
) -> Result<PointResult> {
    let snr_db = cfg.snr_db[snr_index];
    let sigma2 = sigma2_from_snr(snr_db, cfg.channel.n_tx);
    let mut point = PointResult {
        snr_db,
        sigma2,
        trials: 0,
        frame_errors: 0,
        bit_errors: 0,
        bits: 0,
        flops: cfg.instrument.then_some(FlopCount::ZERO),
    };
    let wave = BLOCK * cfg.workers as u64;
    let mut start = 0;
    while start < cfg.max_trials {
        let end = (start + wave).min(cfg.max_trials);
        let outcomes: Vec<Result<Outcome>> = pool.install(|| {
            (0..(end - start) as usize)
                .into_par_iter()
                .with_min_len(BLOCK as usize)
                .map(|k| trial(&mut RngStream::new(cfg.seed, snr_index as u64, start + k as u64)))
                .collect()
        });
        for (t, outcome) in (start..end).zip(outcomes) {
            let o = outcome.map_err(|e| annotate(e, snr_db, t))?;
            point.trials += 1;
            point.frame_errors += u64::from(o.frame_error);
            point.bit_errors += o.bit_errors;
            point.bits += o.bits;
            if let Some(f) = point.flops.as_mut() {
                *f += o.flops;
            }
            on_trial(t, &o)?;
            if cfg.target_errors > 0 && point.frame_errors >= cfg.target_errors {
                return Ok(point);
            }
        }
        start = end;
    }
    Ok(point)
}

fn annotate(e: MimoError, snr_db: f64, trial: u64) -> MimoError {
    match e {
        MimoError::DivideByZero(m) => MimoError::DivideByZero(format!("{m} (snr {snr_db} dB, trial {trial})")),
        other => other,
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| MimoError::Config(e.to_string()))
}

/// Hard-output campaign: frame errors when any symbol differs, bit errors
/// over the Gray labels.
pub fn run_ho(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let clock = Instant::now();
    let model = ChannelModel::new(&cfg.channel)?;
    let det = cfg.detector()?;
    let c = det.constellation().clone();
    let pool = pool(cfg.workers)?;
    let bits = (cfg.channel.n_tx * c.bits_per_symbol()) as u64;
    let points = (0..cfg.snr_db.len())
        .map(|i| {
            let sigma2 = sigma2_from_snr(cfg.snr_db[i], cfg.channel.n_tx);
            let trial = |rng: &mut RngStream| {
                let Trial { h, x, y } = draw_trial(&model, &c, sigma2, rng);
                let r = det.detect(&y, &h, sigma2)?;
                let errs = bit_errors(&r.symbols, &x);
                Ok(Outcome { frame_error: r.symbols != x, bit_errors: errs, bits, flops: r.flops, llrs: Vec::new() })
            };
            run_point(&pool, cfg, i, trial, |_, _| Ok(()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimResult { config: cfg.clone(), points, wall_time_secs: Some(clock.elapsed().as_secs_f64()) })
}

/// Soft-output campaign with bit decisions taken from the LLR signs. When
/// `dump` is given, every counted trial's LLRs are written as
/// `snr_db,trial,layer,bit,llr,tx_bit` rows.
pub fn run_so(cfg: &SimConfig, mut dump: Option<&mut dyn Write>) -> Result<SimResult> {
    cfg.validate()?;
    if !cfg.detector.has_soft_output() {
        return Err(MimoError::Config(format!("detector {} has no soft output", cfg.detector)));
    }
    let clock = Instant::now();
    let model = ChannelModel::new(&cfg.channel)?;
    let c = cfg.constellation()?;
    let pool = pool(cfg.workers)?;
    let keep = dump.is_some();
    if let Some(w) = dump.as_mut() {
        writeln!(w, "snr_db,trial,layer,bit,llr,tx_bit")?;
    }
    let q = c.bits_per_symbol();
    let points = (0..cfg.snr_db.len())
        .map(|i| {
            let snr_db = cfg.snr_db[i];
            let sigma2 = sigma2_from_snr(snr_db, cfg.channel.n_tx);
            let trial = |rng: &mut RngStream| {
                let Trial { h, x, y } = draw_trial(&model, &c, sigma2, rng);
                let llr = soft_output(cfg.detector, &y, &h, &c, sigma2)?.clipped(cfg.llr_clip);
                let tx = vector_to_bits(&x, &c);
                let decided = llr.hard_bits();
                let errs = tx.iter().zip(&decided).filter(|(a, b)| a != b).count() as u64;
                let llrs = if keep {
                    (0..tx.len()).map(|k| (k / q, k % q, llr.values()[k], tx[k])).collect()
                } else {
                    Vec::new()
                };
                Ok(Outcome { frame_error: errs > 0, bit_errors: errs, bits: tx.len() as u64, flops: FlopCount::ZERO, llrs })
            };
            let mut point = run_point(&pool, cfg, i, trial, |t, o| {
                if let Some(w) = dump.as_mut() {
                    for &(layer, bit, v, b) in &o.llrs {
                        writeln!(w, "{snr_db},{t},{layer},{bit},{v},{b}")?;
                    }
                }
                Ok(())
            })?;
            point.flops = None;
            Ok(point)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimResult { config: cfg.clone(), points, wall_time_secs: Some(clock.elapsed().as_secs_f64()) })
}

/// [`run_ho`] or [`run_so`] according to the configured mode.
pub fn run(cfg: &SimConfig) -> Result<SimResult> {
    match cfg.mode {
        SimMode::Ho => run_ho(cfg),
        SimMode::So => run_so(cfg, None),
    }
}
