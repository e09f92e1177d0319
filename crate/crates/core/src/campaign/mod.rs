//! Randomized measurement sets, drift and misalignment, campaigns of many
//! sets and their result files.

mod config;
mod run;
mod summary;

pub use config::{
    BeamConfig, ExperimentConfig, Imperfections, IntensitySettings, PhotonSettings, RegimeSelection,
};
pub use run::{
    alignment_check, analyze_entries, analyze_raw_set, randomize_sequence, raw_dir, regime_index,
    run_measurement_set, AlignmentCheck, EntryData, SetResult, Visit,
};
pub use summary::{
    aggregate_campaign, emit_results, read_summary, theory_orders, CampaignSummary, OrderSummary,
    RegimeSummary, SetPoint,
};

use std::path::Path;

use rayon::prelude::*;

use crate::error::Result;

/// Every set of every selected regime, ordered by regime and set index.
pub fn run_campaign(config: &ExperimentConfig, raw_root: Option<&Path>) -> Result<Vec<SetResult>> {
    config.validate()?;
    let mut out = Vec::new();
    for regime in config.regime.regimes() {
        let sets = (0..config.sets)
            .into_par_iter()
            .map(|s| run_measurement_set(config, regime, s, raw_root))
            .collect::<Result<Vec<_>>>()?;
        log::info!("{} regime: {} sets done", regime.tag(), sets.len());
        out.extend(sets);
    }
    Ok(out)
}
