//! Channel, symbol and noise generation.
//!
//! Every trial draws from its own ChaCha8 stream: the key comes from the
//! master seed and the stream id packs `(snr_index << 40) | trial_index`, so
//! a trial's draws do not depend on how trials are scheduled. Gaussians use
//! the ziggurat sampler of `rand_distr::StandardNormal`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{MimoError, Result};
use crate::linalg::{corr_sqrt, exponential_correlation, ComplexMatrix, ComplexVector};
use crate::modem::Constellation;

const TRIAL_BITS: u32 = 40;

/// Deterministic random source for one (snr point, trial).
#[derive(Clone, Debug)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, snr_index: u64, trial_index: u64) -> Self {
        assert!(trial_index < 1 << TRIAL_BITS, "trial index too large");
        assert!(snr_index < 1 << (64 - TRIAL_BITS), "snr index too large");
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream((snr_index << TRIAL_BITS) | trial_index);
        Self { rng }
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Circularly symmetric complex Gaussian with total variance `var`.
    pub fn complex_gaussian(&mut self, var: f64) -> Complex64 {
        let s = (0.5 * var).sqrt();
        let re = self.standard_normal();
        let im = self.standard_normal();
        Complex64::new(re * s, im * s)
    }

    pub fn uniform_index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    /// Transmit-side exponential correlation.
    #[serde(default)]
    pub correlation_alpha: f64,
    /// Receive-side exponential correlation.
    #[serde(default)]
    pub correlation_beta: f64,
}

impl ChannelConfig {
    pub fn square(n: usize) -> Self {
        Self { n_tx: n, n_rx: n, correlation_alpha: 0.0, correlation_beta: 0.0 }
    }

    pub fn correlated(n: usize, alpha: f64, beta: f64) -> Self {
        Self { n_tx: n, n_rx: n, correlation_alpha: alpha, correlation_beta: beta }
    }

    pub fn is_correlated(&self) -> bool {
        self.correlation_alpha != 0.0 || self.correlation_beta != 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 || self.n_rx == 0 {
            return Err(MimoError::Config("antenna counts must be positive".into()));
        }
        if self.n_rx < self.n_tx {
            return Err(MimoError::Config(format!("n_rx ({}) < n_tx ({})", self.n_rx, self.n_tx)));
        }
        for (name, v) in [("correlation_alpha", self.correlation_alpha), ("correlation_beta", self.correlation_beta)] {
            if !(0.0..1.0).contains(&v) {
                return Err(MimoError::Config(format!("{name} = {v} outside [0, 1)")));
            }
        }
        Ok(())
    }
}

/// I.i.d. Rayleigh channel of size `n_rx × n_tx`, unit-variance entries.
pub fn draw_channel(cfg: &ChannelConfig, rng: &mut RngStream) -> ComplexMatrix {
    ComplexMatrix::from_fn(cfg.n_rx, cfg.n_tx, |_, _| rng.complex_gaussian(1.0))
}

/// Kronecker-correlated channel `C_r H C_t*` with `C C* = R` for the
/// exponential correlation matrices `R_t = [α^|i-j|]`, `R_r = [β^|i-j|]`.
pub fn draw_correlated(cfg: &ChannelConfig, rng: &mut RngStream) -> Result<ComplexMatrix> {
    let model = ChannelModel::new(cfg)?;
    Ok(model.draw(rng))
}

/// Channel generator with the correlation factors computed once.
#[derive(Clone, Debug)]
pub struct ChannelModel {
    cfg: ChannelConfig,
    factors: Option<(ComplexMatrix, ComplexMatrix)>,
}

impl ChannelModel {
    pub fn new(cfg: &ChannelConfig) -> Result<Self> {
        cfg.validate()?;
        let factors = if cfg.is_correlated() {
            let tx = corr_sqrt(&exponential_correlation(cfg.n_tx, cfg.correlation_alpha))?;
            let rx = corr_sqrt(&exponential_correlation(cfg.n_rx, cfg.correlation_beta))?;
            Some((rx, tx.adjoint()))
        } else {
            None
        };
        Ok(Self { cfg: cfg.clone(), factors })
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.cfg
    }

    pub fn draw(&self, rng: &mut RngStream) -> ComplexMatrix {
        let h = draw_channel(&self.cfg, rng);
        match &self.factors {
            Some((rx, tx_adj)) => rx.matmul(&h).matmul(tx_adj),
            None => h,
        }
    }
}

/// Noise variance for a per-receive-antenna SNR of `N/σ²`.
pub fn sigma2_from_snr(snr_db: f64, n_tx: usize) -> f64 {
    n_tx as f64 / 10f64.powf(snr_db / 10.0)
}

pub fn draw_noise(m: usize, sigma2: f64, rng: &mut RngStream) -> ComplexVector {
    (0..m).map(|_| rng.complex_gaussian(sigma2)).collect()
}

/// One transmission `y = H x + n` with uniformly drawn symbol indices.
#[derive(Clone, Debug)]
pub struct Trial {
    pub h: ComplexMatrix,
    pub x: Vec<usize>,
    pub y: ComplexVector,
}

/// Draws the channel, then the symbols, then the noise.
pub fn draw_trial(model: &ChannelModel, c: &Constellation, sigma2: f64, rng: &mut RngStream) -> Trial {
    let cfg = model.config();
    let h = model.draw(rng);
    let x: Vec<usize> = (0..cfg.n_tx).map(|_| rng.uniform_index(c.order())).collect();
    let points: ComplexVector = x.iter().map(|&s| c.point(s)).collect();
    let noise = draw_noise(cfg.n_rx, sigma2, rng);
    let y = h.mul_vec(&points).iter().zip(&noise).map(|(a, b)| a + b).collect();
    Trial { h, x, y }
}
