//! Monte Carlo campaigns, distribution studies and result files.
//!
//! Trial `t` of SNR point `i` always draws from substream `(seed, i, t)`,
//! and tallies are accumulated in trial order, so a result is a function of
//! its configuration alone.

mod config;
mod dist;
mod io;
mod run;

pub use config::{PatternSpec, SimConfig, SimMode};
pub use dist::{ks_statistic, qr_dof, run_dist_study, wr_dof, CdfRow, DistConfig, DistReport, KsResult, LayerDist};
pub use io::{
    config_to_toml, emit_plot_data, load_config, load_result, meta_path, parse_config, plot_data, plot_meta,
    result_to_json, write_result,
};
pub use run::{run, run_ho, run_so, PointResult, SimResult};

use crate::theory::SlopePoint;

impl SimResult {
    /// Points for [`crate::theory::diversity_slope`], bit errors as events.
    pub fn slope_points(&self) -> Vec<SlopePoint> {
        self.points
            .iter()
            .map(|p| SlopePoint { snr_db: p.snr_db, ber: p.ber(), events: Some(p.bit_errors) })
            .collect()
    }
}
