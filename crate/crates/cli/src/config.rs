use std::path::Path;

use relevkit::augment::{AugmentConfig, HttpConfig};
use relevkit::scorer::Scorer;
use relevkit::SummaryBudget;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    #[default]
    Mock,
    Http,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    pub mock_seed: u64,
    pub http: HttpConfig,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            kind: ProviderKind::Mock,
            mock_seed: 0,
            http: HttpConfig::default(),
        }
    }
}

/// Everything a pipeline stage may need. Loaded from `--config` (same
/// schema as `--print-config` output), then overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub budget: SummaryBudget,
    pub scorer: Scorer,
    pub augment: AugmentConfig,
    pub provider: ProviderConfig,
    pub workers: usize,
    /// 0 = warnings, 1 = info, 2+ = debug.
    pub verbosity: u8,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            budget: SummaryBudget::default(),
            scorer: Scorer::default(),
            augment: AugmentConfig::default(),
            provider: ProviderConfig::default(),
            workers: 1,
            verbosity: 0,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
