use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelConfig;
use crate::detect::{Detector, DetectorId, DEFAULT_SEARCH_CAP};
use crate::error::{MimoError, Result};
use crate::linalg::PuncturePattern;
use crate::modem::{build_qam, Constellation};
use crate::softout::DEFAULT_CLIP;

/// Puncture pattern selector, written `full` or `partial:c1,c2,...` with
/// 0-based columns left unpunctured.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PatternSpec {
    Full,
    Partial(Vec<usize>),
}

impl PatternSpec {
    pub fn build(&self, n: usize) -> Result<PuncturePattern> {
        match self {
            PatternSpec::Full => Ok(PuncturePattern::full(n)),
            PatternSpec::Partial(cols) => PuncturePattern::retaining_columns(n, cols),
        }
    }
}

impl FromStr for PatternSpec {
    type Err = MimoError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "full" {
            return Ok(PatternSpec::Full);
        }
        let Some(rest) = s.strip_prefix("partial:") else {
            return Err(MimoError::Config(format!("unknown pattern '{s}', expected full or partial:<cols>")));
        };
        let cols = rest
            .split(',')
            .map(|c| c.trim().parse::<usize>().map_err(|_| MimoError::Config(format!("bad column '{c}' in pattern"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(PatternSpec::Partial(cols))
    }
}

impl TryFrom<String> for PatternSpec {
    type Error = MimoError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PatternSpec> for String {
    fn from(p: PatternSpec) -> String {
        p.to_string()
    }
}

impl fmt::Display for PatternSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternSpec::Full => f.write_str("full"),
            PatternSpec::Partial(cols) => {
                let cols: Vec<String> = cols.iter().map(|c| c.to_string()).collect();
                write!(f, "partial:{}", cols.join(","))
            }
        }
    }
}

/// Hard decisions or LLR-sign decisions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimMode {
    #[default]
    Ho,
    So,
}

fn default_channel() -> ChannelConfig {
    ChannelConfig::square(4)
}

fn default_order() -> usize {
    16
}

fn default_max_trials() -> u64 {
    100_000
}

fn default_target_errors() -> u64 {
    200
}

fn default_workers() -> usize {
    1
}

fn default_clip() -> f64 {
    DEFAULT_CLIP
}

/// One simulation campaign. Only `detector` and `snr_db` are required;
/// the rest defaults to a 4×4 uncorrelated 16-QAM hard-output run of at
/// most 100 000 trials per point, stopping at 200 frame errors, seed 0,
/// one worker.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub detector: DetectorId,
    pub snr_db: Vec<f64>,
    #[serde(default = "default_channel")]
    pub channel: ChannelConfig,
    #[serde(default = "default_order")]
    pub order: usize,
    /// Only meaningful for the partially punctured detectors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<PatternSpec>,
    #[serde(default)]
    pub mode: SimMode,
    #[serde(default = "default_max_trials")]
    pub max_trials: u64,
    /// Frame errors after which a point stops; 0 runs every trial.
    #[serde(default = "default_target_errors")]
    pub target_errors: u64,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads. Read from files but never written, so result files
    /// do not depend on it.
    #[serde(default = "default_workers", skip_serializing)]
    pub workers: usize,
    /// Accumulate detector flop counts (hard-output runs only).
    #[serde(default)]
    pub instrument: bool,
    /// LLR saturation level, at most the generators' own clip.
    #[serde(default = "default_clip")]
    pub llr_clip: f64,
}

impl SimConfig {
    pub fn new(detector: DetectorId, snr_db: Vec<f64>) -> Self {
        Self {
            detector,
            snr_db,
            channel: default_channel(),
            order: default_order(),
            pattern: None,
            mode: SimMode::Ho,
            max_trials: default_max_trials(),
            target_errors: default_target_errors(),
            seed: 0,
            workers: default_workers(),
            instrument: false,
            llr_clip: DEFAULT_CLIP,
        }
    }

    pub fn constellation(&self) -> Result<Constellation> {
        build_qam(self.order)
    }

    /// The configured detector, with its pattern applied.
    pub fn detector(&self) -> Result<Detector> {
        let det = Detector::new(self.detector, self.constellation()?);
        let partial = matches!(self.detector, DetectorId::Ppnc | DetectorId::Ppcd);
        match (&self.pattern, partial) {
            (None, _) => Ok(det),
            (Some(PatternSpec::Partial(cols)), true) => Ok(det.with_partial_columns(cols.clone())),
            (Some(PatternSpec::Full), false) if self.detector.uses_puncturing() => Ok(det),
            (Some(p), _) => Err(MimoError::Config(format!("pattern {p} does not apply to detector {}", self.detector))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        let c = self.constellation()?;
        if self.snr_db.is_empty() {
            return Err(MimoError::Config("SNR grid is empty".into()));
        }
        if self.snr_db.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
            return Err(MimoError::Config("SNR grid contains an invalid value".into()));
        }
        if self.snr_db.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(MimoError::Config("SNR grid must be strictly increasing".into()));
        }
        if self.max_trials == 0 {
            return Err(MimoError::Config("max_trials must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(MimoError::Config("workers must be at least 1".into()));
        }
        if !(self.llr_clip > 0.0 && self.llr_clip <= DEFAULT_CLIP) {
            return Err(MimoError::Config(format!("llr_clip must lie in (0, {DEFAULT_CLIP}]")));
        }
        if self.detector.uses_puncturing() && self.channel.n_rx != self.channel.n_tx {
            return Err(MimoError::Config(format!("{} needs a square channel", self.detector)));
        }
        if self.mode == SimMode::So && !self.detector.has_soft_output() {
            return Err(MimoError::Config(format!("detector {} has no soft output", self.detector)));
        }
        if matches!(self.detector, DetectorId::Ml | DetectorId::Pml) {
            let size = (c.order() as f64).powi(self.channel.n_tx as i32);
            if size > DEFAULT_SEARCH_CAP as f64 {
                return Err(MimoError::SearchSpaceTooLarge { size, cap: DEFAULT_SEARCH_CAP });
            }
        }
        self.detector()?.pattern(self.channel.n_tx)?;
        Ok(())
    }
}
