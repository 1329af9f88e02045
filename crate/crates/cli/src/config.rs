//! Config documents for each subcommand and their JSON schemas.
//!
//! Documents are decoded straight into the typed structs; every struct
//! rejects unknown keys, and decode errors carry the JSON path of the
//! offending value.

use std::path::Path;

use maser_soliton::analysis::RegimeThresholds;
use maser_soliton::io::TrajectoryFormat;
use maser_soliton::lle::{LleConfig, LleInit};
use maser_soliton::mbe::{MbeConfig, MbeInit};
use maser_soliton::params::PhysicalParams;
use maser_soliton::sweep::{AnalysisSettings, SweepPlan};
use schemars::JsonSchema;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

fn mode_one() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct NormalizeConfig {
    pub physical: PhysicalParams,
    /// Cooperativity `C`; fixes the remaining freedom in the scalings.
    #[serde(rename = "C")]
    pub cooperativity: f64,
    /// Signal mode (1 or 2) used for the ring equation.
    #[serde(default = "mode_one")]
    pub mode_index: usize,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSettings {
    /// Encoding of the field snapshots.
    pub trajectory: TrajectoryFormat,
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SimulateLleConfig {
    pub config: LleConfig,
    pub init: LleInit,
    #[serde(default)]
    pub analysis: AnalysisSettings,
    #[serde(default)]
    pub output: OutputSettings,
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SimulateMbeConfig {
    pub config: MbeConfig,
    pub init: MbeInit,
    #[serde(default)]
    pub analysis: AnalysisSettings,
    #[serde(default)]
    pub output: OutputSettings,
}

fn zero() -> f64 {
    0.0
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeConfig {
    /// Leading fraction of the record dropped before analysis.
    #[serde(default = "zero")]
    pub discard_fraction: f64,
    /// Trajectory channel to average when the input is a trajectory file.
    #[serde(default)]
    pub channel: usize,
    #[serde(default)]
    pub thresholds: RegimeThresholds,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        AnalyzeConfig {
            discard_fraction: 0.0,
            channel: 0,
            thresholds: RegimeThresholds::default(),
        }
    }
}

/// Subcommands that take a config document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ConfigKind {
    Normalize,
    SimulateLle,
    SimulateMbe,
    Sweep,
    Analyze,
}

impl ConfigKind {
    #[cfg(test)]
    pub const ALL: [ConfigKind; 5] = [
        ConfigKind::Normalize,
        ConfigKind::SimulateLle,
        ConfigKind::SimulateMbe,
        ConfigKind::Sweep,
        ConfigKind::Analyze,
    ];

    pub fn schema(self) -> serde_json::Value {
        let schema = match self {
            ConfigKind::Normalize => schemars::schema_for!(NormalizeConfig),
            ConfigKind::SimulateLle => schemars::schema_for!(SimulateLleConfig),
            ConfigKind::SimulateMbe => schemars::schema_for!(SimulateMbeConfig),
            ConfigKind::Sweep => schemars::schema_for!(SweepPlan),
            ConfigKind::Analyze => schemars::schema_for!(AnalyzeConfig),
        };
        serde_json::to_value(schema).expect("schemas serialize")
    }
}

/// Decode `text` into `T`, naming the offending key on failure.
pub fn parse_config<T: DeserializeOwned>(text: &str, origin: &str) -> CliResult<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            CliError::config(format!("{origin}: {inner}"))
        } else {
            CliError::config(format!("{origin}: at `{path}`: {inner}"))
        }
    })
}

pub fn load_config<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text, &path.display().to_string())
}
