//! Monte Carlo estimates of the list-membership and root-decision error
//! probabilities of the chase and punctured chase detectors, conditioned on
//! the ML decision being correct.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{draw_trial, sigma2_from_snr, ChannelConfig, ChannelModel, RngStream, Trial};
use crate::detect::{chase, ml_exhaustive, pchase, DetectionResult};
use crate::error::{MimoError, Result};
use crate::linalg::{qrd, wrd, PuncturePattern};
use crate::modem::Constellation;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalConfig {
    pub channel: ChannelConfig,
    pub snr_db: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
}

/// Event counts at one SNR point. `ml_correct` is the denominator of every
/// conditional probability below except where noted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounts {
    pub trials: u64,
    pub ml_wrong: u64,
    pub ml_correct: u64,
    /// Truth missing from the chase list.
    pub cd_missed: u64,
    /// Truth missing from the punctured chase list.
    pub pcd_missed: u64,
    /// Truth listed by the chase detector (denominator of `cd_misselect`).
    pub cd_listed: u64,
    pub cd_misselect: u64,
    /// Truth listed by the punctured detector (denominator of
    /// `pcd_misselect` and `pcd_root_wrong_listed`).
    pub pcd_listed: u64,
    pub pcd_misselect: u64,
    /// Root symbol wrong while the truth is missing from the list.
    pub cd_root_wrong_missed: u64,
    pub pcd_root_wrong_missed: u64,
    /// Root symbol wrong while the truth is listed.
    pub pcd_root_wrong_listed: u64,
}

impl EventCounts {
    fn merge(mut self, o: Self) -> Self {
        self.trials += o.trials;
        self.ml_wrong += o.ml_wrong;
        self.ml_correct += o.ml_correct;
        self.cd_missed += o.cd_missed;
        self.pcd_missed += o.pcd_missed;
        self.cd_listed += o.cd_listed;
        self.cd_misselect += o.cd_misselect;
        self.pcd_listed += o.pcd_listed;
        self.pcd_misselect += o.pcd_misselect;
        self.cd_root_wrong_missed += o.cd_root_wrong_missed;
        self.pcd_root_wrong_missed += o.pcd_root_wrong_missed;
        self.pcd_root_wrong_listed += o.pcd_root_wrong_listed;
        self
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalPoint {
    pub snr_db: f64,
    pub counts: EventCounts,
    pub p_ml: f64,
    /// Truth missing from the chase list, given a correct ML decision.
    pub p_b: f64,
    /// Chase detector wrong although the truth is listed; zero by
    /// construction since both use the same metric.
    pub p_a: f64,
    pub p_b_punctured: f64,
    pub p_a_punctured: f64,
    /// Root wrong and truth missing, for the chase detector.
    pub p_c_times_b: f64,
    pub p_c_times_b_punctured: f64,
    /// Root wrong though the truth is in the punctured list.
    pub p_d_punctured: f64,
}

impl EmpiricalPoint {
    fn from_counts(snr_db: f64, c: EventCounts) -> Self {
        Self {
            snr_db,
            counts: c,
            p_ml: ratio(c.ml_wrong, c.trials),
            p_b: ratio(c.cd_missed, c.ml_correct),
            p_a: ratio(c.cd_misselect, c.cd_listed),
            p_b_punctured: ratio(c.pcd_missed, c.ml_correct),
            p_a_punctured: ratio(c.pcd_misselect, c.pcd_listed),
            p_c_times_b: ratio(c.cd_root_wrong_missed, c.ml_correct),
            p_c_times_b_punctured: ratio(c.pcd_root_wrong_missed, c.ml_correct),
            p_d_punctured: ratio(c.pcd_root_wrong_listed, c.pcd_listed),
        }
    }
}

fn classify(
    model: &ChannelModel,
    c: &Constellation,
    pattern: &PuncturePattern,
    sigma2: f64,
    rng: &mut RngStream,
) -> Result<EventCounts> {
    let Trial { h, x, y } = draw_trial(model, c, sigma2, rng);
    let mut out = EventCounts { trials: 1, ..Default::default() };
    let ml = ml_exhaustive(&y, &h, c)?;
    if ml.symbols != x {
        out.ml_wrong = 1;
        return Ok(out);
    }
    out.ml_correct = 1;
    let root = x.len() - 1;
    let qr = qrd(&h)?;
    let cd = chase(&qr.q.adjoint_mul_vec(&y), &qr.r, c)?;
    let wr = wrd(&h, pattern)?;
    let pcd = pchase(&wr.w.adjoint_mul_vec(&y), &wr, c)?;
    let listed = |r: &DetectionResult| {
        r.per_candidate.as_ref().is_some_and(|l| l.iter().any(|cand| cand.symbols == x))
    };
    if listed(&cd) {
        out.cd_listed = 1;
        out.cd_misselect = u64::from(cd.symbols != x);
    } else {
        out.cd_missed = 1;
        out.cd_root_wrong_missed = u64::from(cd.symbols[root] != x[root]);
    }
    if listed(&pcd) {
        out.pcd_listed = 1;
        out.pcd_misselect = u64::from(pcd.symbols != x);
        out.pcd_root_wrong_listed = u64::from(pcd.symbols[root] != x[root]);
    } else {
        out.pcd_missed = 1;
        out.pcd_root_wrong_missed = u64::from(pcd.symbols[root] != x[root]);
    }
    Ok(out)
}

/// Runs the ML oracle and both list detectors on the same trials at each
/// SNR point. Trial `t` at point `i` draws from substream `(seed, i, t)`.
pub fn empirical_probs(cfg: &EmpiricalConfig, c: &Constellation) -> Result<Vec<EmpiricalPoint>> {
    let model = ChannelModel::new(&cfg.channel)?;
    if cfg.channel.n_tx != cfg.channel.n_rx {
        return Err(MimoError::DimensionMismatch("list detectors need a square channel".into()));
    }
    let pattern = PuncturePattern::full(cfg.channel.n_tx);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| MimoError::Config(e.to_string()))?;
    cfg.snr_db
        .iter()
        .enumerate()
        .map(|(i, &snr)| {
            let sigma2 = sigma2_from_snr(snr, cfg.channel.n_tx);
            let counts = pool.install(|| {
                (0..cfg.trials)
                    .into_par_iter()
                    .map(|t| classify(&model, c, &pattern, sigma2, &mut RngStream::new(cfg.seed, i as u64, t)))
                    .try_reduce(EventCounts::default, |a, b| Ok(a.merge(b)))
            })?;
            Ok(EmpiricalPoint::from_counts(snr, counts))
        })
        .collect()
}
