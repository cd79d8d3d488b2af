//! Shared analysis configuration: defaults, optional config file, flag
//! overrides. The effective configuration is echoed into every JSON
//! report so results are reproducible from the report alone.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use aula_core::pipeline::AnalysisConfig;

use crate::CliError;

/// Every knob the commands share. A config file uses this exact JSON
/// schema; any field may be omitted to keep its default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub frame_len_ms: f64,
    pub overlap: f64,
    pub calibration_offset_db: f64,
    pub silence_threshold_db: f64,
    pub speaker_delta_db: f64,
    pub instructor_bin_width_db: f64,
    pub level_low_dba: f64,
    pub level_high_dba: f64,
    pub knn_k: usize,
    pub gmm_components: usize,
    pub seed: u64,
}

impl Default for CliConfig {
    fn default() -> Self {
        let analysis = AnalysisConfig::default();
        Self {
            frame_len_ms: analysis.frame_len_ms,
            overlap: analysis.overlap,
            calibration_offset_db: analysis.calibration_offset_db,
            silence_threshold_db: analysis.silence_threshold_db,
            speaker_delta_db: analysis.speaker_delta_db,
            instructor_bin_width_db: analysis.instructor_bin_width_db,
            level_low_dba: analysis.level_low_dba,
            level_high_dba: analysis.level_high_dba,
            knn_k: 5,
            gmm_components: 4,
            seed: 7,
        }
    }
}

impl CliConfig {
    pub fn analysis(&self) -> AnalysisConfig {
        AnalysisConfig {
            frame_len_ms: self.frame_len_ms,
            overlap: self.overlap,
            calibration_offset_db: self.calibration_offset_db,
            silence_threshold_db: self.silence_threshold_db,
            speaker_delta_db: self.speaker_delta_db,
            instructor_bin_width_db: self.instructor_bin_width_db,
            level_low_dba: self.level_low_dba,
            level_high_dba: self.level_high_dba,
        }
    }
}

/// Global flags accepted by every subcommand. Precedence: built-in
/// defaults, then the config file, then explicit flags.
#[derive(Debug, Clone, clap::Args)]
pub struct ConfigFlags {
    /// JSON config file in the CliConfig schema
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Analysis frame length, milliseconds
    #[arg(long, global = true, value_name = "MS")]
    pub frame_len_ms: Option<f64>,
    /// Fractional frame overlap in [0, 1)
    #[arg(long, global = true, value_name = "FRAC")]
    pub overlap: Option<f64>,
    /// Offset mapping dBFS to dBA
    #[arg(long, global = true, value_name = "DB")]
    pub calibration_offset_db: Option<f64>,
    /// Silence cutoff below the clip's loud frames, dB
    #[arg(long, global = true, value_name = "DB")]
    pub silence_threshold_db: Option<f64>,
    /// Teacher speech lies within this distance of the instructor level, dB
    #[arg(long, global = true, value_name = "DB")]
    pub speaker_delta_db: Option<f64>,
    /// Histogram bin width for the instructor level, dB
    #[arg(long, global = true, value_name = "DB")]
    pub instructor_bin_width_db: Option<f64>,
    /// Instructor levels below this are low speech, dBA
    #[arg(long, global = true, value_name = "DBA")]
    pub level_low_dba: Option<f64>,
    /// Instructor levels above this are high speech, dBA
    #[arg(long, global = true, value_name = "DBA")]
    pub level_high_dba: Option<f64>,
    /// Neighbour count for the noise classifier (odd)
    #[arg(long, global = true, value_name = "K")]
    pub knn_k: Option<usize>,
    /// Mixture components per voice model
    #[arg(long, global = true, value_name = "M")]
    pub gmm_components: Option<usize>,
    /// Seed for synthesis, fold assignment, and model initialization
    #[arg(long, global = true, value_name = "SEED")]
    pub seed: Option<u64>,
}

impl ConfigFlags {
    pub fn resolve(&self) -> Result<CliConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
            }
            None => CliConfig::default(),
        };
        macro_rules! apply {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$field = v; })*
            };
        }
        apply!(
            frame_len_ms,
            overlap,
            calibration_offset_db,
            silence_threshold_db,
            speaker_delta_db,
            instructor_bin_width_db,
            level_low_dba,
            level_high_dba,
            knn_k,
            gmm_components,
            seed
        );
        Ok(cfg)
    }
}
