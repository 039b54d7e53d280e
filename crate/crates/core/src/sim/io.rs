use std::fs;
use std::path::{Path, PathBuf};

use super::config::SimConfig;
use super::run::SimResult;
use crate::error::{MimoError, Result};

pub fn parse_config(text: &str) -> Result<SimConfig> {
    let cfg: SimConfig = toml::from_str(text).map_err(|e| MimoError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads and validates a TOML campaign description.
pub fn load_config(path: &Path) -> Result<SimConfig> {
    let text = fs::read_to_string(path).map_err(|e| MimoError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        MimoError::Config(m) => MimoError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn config_to_toml(cfg: &SimConfig) -> Result<String> {
    toml::to_string(cfg).map_err(|e| MimoError::Config(e.to_string()))
}

pub fn result_to_json(result: &SimResult) -> Result<String> {
    let mut s = serde_json::to_string_pretty(result).map_err(|e| MimoError::Config(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_result(result: &SimResult, path: &Path) -> Result<()> {
    fs::write(path, result_to_json(result)?)?;
    Ok(())
}

pub fn load_result(path: &Path) -> Result<SimResult> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| MimoError::Config(format!("{}: {e}", path.display())))
}

/// Whitespace-separated `snr_db ber fer trials` rows under a `#` header.
pub fn plot_data(result: &SimResult) -> String {
    let mut s = String::from("# snr_db ber fer trials\n");
    for p in &result.points {
        s.push_str(&format!("{} {} {} {}\n", p.snr_db, p.ber(), p.fer(), p.trials));
    }
    s
}

/// Key-value description of the run behind a plot file.
pub fn plot_meta(result: &SimResult) -> String {
    let c = &result.config;
    let pattern = c.pattern.as_ref().map_or_else(|| "default".to_string(), |p| p.to_string());
    let mode = match c.mode {
        super::config::SimMode::Ho => "ho",
        super::config::SimMode::So => "so",
    };
    format!(
        "detector {}\nmode {mode}\norder {}\nn_tx {}\nn_rx {}\ncorrelation_alpha {}\ncorrelation_beta {}\npattern {pattern}\n\
         max_trials {}\ntarget_errors {}\nseed {}\ncolumns snr_db ber fer trials\n",
        c.detector,
        c.order,
        c.channel.n_tx,
        c.channel.n_rx,
        c.channel.correlation_alpha,
        c.channel.correlation_beta,
        c.max_trials,
        c.target_errors,
        c.seed
    )
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Writes [`plot_data`] to `path` and [`plot_meta`] to `path.meta`.
pub fn emit_plot_data(result: &SimResult, path: &Path) -> Result<()> {
    fs::write(path, plot_data(result))?;
    fs::write(meta_path(path), plot_meta(result))?;
    Ok(())
}
