//! Tool configuration: one TOML file with a section per stage.
//!
//! Every field has a default, unknown keys are rejected, and command-line
//! flags override file values. A run manifest can be passed back as the
//! configuration to repeat a run.

use std::path::Path;

use serde::{Deserialize, Serialize};

use screeneval_core::corpus::synth::SynthAudioConfig;
use screeneval_core::corpus::{SynthConfig, USER_KEYS, DERIVED_KEYS};
use screeneval_core::dsp::FrontEndConfig;
use screeneval_core::model::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolConfig {
    /// Seed shared by every stage unless a section sets its own.
    pub seed: Option<u64>,
    pub synth: SynthConfig,
    pub partition: PartitionConfig,
    pub frontend: FrontEndConfig,
    pub audio: SynthAudioConfig,
    pub text: TextConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub robustness: RobustnessConfig,
}

impl Default for ToolConfig {
    fn default() -> Self {
        ToolConfig {
            seed: None,
            synth: SynthConfig::default(),
            partition: PartitionConfig::default(),
            frontend: FrontEndConfig::default(),
            audio: SynthAudioConfig::default(),
            text: TextConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            robustness: RobustnessConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionConfig {
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig {
            test_fraction: 0.25,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextConfig {
    /// Hashed vocabulary size.
    pub dim: usize,
    /// Words per synthetic transcript when rendering from latent values.
    pub synth_words: usize,
}

impl Default for TextConfig {
    fn default() -> Self {
        TextConfig {
            dim: 64,
            synth_words: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregatorKind {
    #[default]
    Mean,
    Learned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Encoder widths; the predictor is added on top.
    pub hidden: Vec<usize>,
    /// Reconstruction epochs before supervised training; 0 skips it.
    pub pretrain_epochs: usize,
    pub aggregator: AggregatorKind,
    /// Standardize inputs with statistics of the training segments.
    pub standardize: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hidden: vec![16, 8],
            pretrain_epochs: 0,
            aggregator: AggregatorKind::Mean,
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    #[default]
    OneVsRest,
    AllPairs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobustnessConfig {
    pub min_count: usize,
    pub keys: Vec<String>,
    pub mode: ModeName,
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        RobustnessConfig {
            min_count: screeneval_core::corpus::DEFAULT_MIN_COUNT,
            keys: USER_KEYS.iter().chain(DERIVED_KEYS.iter()).map(|k| k.to_string()).collect(),
            mode: ModeName::OneVsRest,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

impl ToolConfig {
    /// Reads TOML, or the `config` object of a run manifest (`*.json`).
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let invalid = |message: String| ConfigError::Invalid {
            path: path.display().to_string(),
            message,
        };
        if path.extension().is_some_and(|e| e == "json") {
            let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| invalid(e.to_string()))?;
            let cfg = v.get("config").cloned().unwrap_or(v);
            return serde_json::from_value(cfg).map_err(|e| invalid(e.to_string()));
        }
        toml::from_str(&text).map_err(|e| invalid(e.to_string().trim_end().to_string()))
    }

    /// Pushes a global seed into every section.
    pub fn apply_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.synth.seed = seed;
        self.partition.seed = seed;
        self.train.seed = seed;
    }

    /// Resolves the top-level seed, if any, into the sections.
    pub fn resolved(mut self) -> Self {
        if let Some(s) = self.seed {
            self.apply_seed(s);
        }
        self
    }
}
