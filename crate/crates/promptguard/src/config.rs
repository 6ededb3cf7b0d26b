//! Run configuration: a TOML file, then environment variables, then flags.
//!
//! ```toml
//! [pool]
//! per_category = 120
//!
//! [voting]
//! shots_per_category = 20
//! variant = "with_keywords"
//!
//! [backend]
//! endpoint = "http://localhost:8000/v1"
//! model = "Qwen/Qwen3-32B"
//! ```

use std::path::{Path, PathBuf};
use std::time::Duration;

use promptguard_core::baselines::NGramConfig;
use promptguard_core::corpus::Shortfall;
use promptguard_core::prompt::PromptVariant;
use promptguard_core::voting::VotingConfig;
use promptguard_core::Category;
use serde::{Deserialize, Serialize};

use crate::io::DataFormat;
use crate::retry::RetryPolicy;

pub const ENV_API_BASE: &str = "PROMPTGUARD_API_BASE";
pub const ENV_API_KEY: &str = "PROMPTGUARD_API_KEY";
pub const ENV_MODEL: &str = "PROMPTGUARD_MODEL";

pub const DEFAULT_MODEL: &str = "Qwen/Qwen3-32B";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing {path}")]
    Parse {
        path: PathBuf,
        #[source]
        source: Box<toml::de::Error>,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    /// OpenAI-compatible chat-completions endpoint.
    #[default]
    Remote,
    /// Votes for the category of the first keyword in the input sentence.
    MockKeyword,
    /// Always votes `mock_label`.
    MockConstant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// API base; requests go to `{endpoint}/chat/completions`.
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub max_in_flight: usize,
    pub backoff_base_ms: u64,
    pub backoff_cap_ms: u64,
    /// Never written to output artifacts.
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub mock_label: Category,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Remote,
            endpoint: "http://localhost:8000/v1".into(),
            model: DEFAULT_MODEL.into(),
            temperature: 0.0,
            timeout_secs: 120,
            max_retries: 3,
            max_in_flight: 8,
            backoff_base_ms: 1000,
            backoff_cap_ms: 30_000,
            api_key: None,
            mock_label: Category::None,
        }
    }
}

impl BackendConfig {
    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            max_retries: self.max_retries,
            base_ms: self.backoff_base_ms,
            cap_ms: self.backoff_cap_ms,
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(ConfigError::Invalid(format!(
                "backend.temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if self.max_in_flight == 0 {
            return Err(ConfigError::Invalid("backend.max_in_flight must be at least 1".into()));
        }
        if self.kind == BackendKind::Remote && self.endpoint.trim().is_empty() {
            return Err(ConfigError::Invalid("backend.endpoint is empty".into()));
        }
        if self.model.trim().is_empty() {
            return Err(ConfigError::Invalid("backend.model is empty".into()));
        }
        Ok(())
    }
}

/// Which documents the DF filter and chi-square scores are computed over.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DfSource {
    #[default]
    Pool,
    Raw,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoolConfig {
    pub per_category: usize,
    pub seed: u64,
    pub shortfall: Shortfall,
}

impl Default for PoolConfig {
    fn default() -> Self {
        PoolConfig {
            per_category: 120,
            seed: 0,
            shortfall: Shortfall::Reject,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionConfig {
    pub df_source: DfSource,
    pub min_df: usize,
    pub max_df: f64,
    pub top_k: usize,
    /// Skip the refinement overlay and keep the ranked terms as they are.
    pub no_refinement: bool,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            df_source: DfSource::Pool,
            min_df: 5,
            max_df: 0.95,
            top_k: 20,
            no_refinement: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatchConfig {
    /// Inputs voted on at the same time.
    pub concurrency: usize,
    pub resume: bool,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            concurrency: 4,
            resume: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationConfig {
    pub shots: Vec<usize>,
    pub turns: Vec<usize>,
    pub variants: Vec<PromptVariant>,
    pub per_label: usize,
    pub subset_seed: u64,
}

impl Default for AblationConfig {
    fn default() -> Self {
        let spec = promptguard_core::ablation::SweepSpec::default();
        AblationConfig {
            shots: spec.shots,
            turns: spec.turns,
            variants: spec.variants,
            per_label: spec.per_label,
            subset_seed: spec.subset_seed,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    #[default]
    Random,
    Majority,
    Ngram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub kind: BaselineKind,
    pub seed: u64,
    pub ngram: NGramConfig,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            kind: BaselineKind::Random,
            seed: 0,
            ngram: NGramConfig::default(),
        }
    }
}

/// Input and output locations. Each subcommand reads the ones it needs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Overrides the per-file format guess from the extension.
    pub format: Option<DataFormat>,
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub gold: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub keywords: Option<PathBuf>,
    pub refinement: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub table_out: Option<PathBuf>,
    pub keywords_out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub pool: PoolConfig,
    pub extraction: ExtractionConfig,
    pub voting: VotingConfig,
    pub backend: BackendConfig,
    pub batch: BatchConfig,
    pub ablation: AblationConfig,
    pub baseline: BaselineConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_path_buf(),
            source: Box::new(e),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_toml(&text, path)
    }

    /// Overlays the `PROMPTGUARD_*` variables returned by `var`.
    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) {
        let var = |name| var(name).filter(|v| !v.trim().is_empty());
        if let Some(v) = var(ENV_API_BASE) {
            self.backend.endpoint = v;
        }
        if let Some(v) = var(ENV_API_KEY) {
            self.backend.api_key = Some(v);
        }
        if let Some(v) = var(ENV_MODEL) {
            self.backend.model = v;
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        self.backend.validate()?;
        if self.pool.per_category == 0 {
            return invalid("pool.per_category must be at least 1".into());
        }
        if self.voting.initial_turns == 0 {
            return invalid("voting.initial_turns must be at least 1".into());
        }
        if self.voting.shots_per_category == 0 {
            return invalid("voting.shots_per_category must be at least 1".into());
        }
        if self.pool.shortfall == Shortfall::Reject && self.voting.shots_per_category > self.pool.per_category {
            return invalid(format!(
                "voting.shots_per_category ({}) exceeds pool.per_category ({})",
                self.voting.shots_per_category, self.pool.per_category
            ));
        }
        if self.extraction.min_df == 0 {
            return invalid("extraction.min_df must be at least 1".into());
        }
        if !(self.extraction.max_df > 0.0 && self.extraction.max_df <= 1.0) {
            return invalid(format!(
                "extraction.max_df must be in (0, 1], got {}",
                self.extraction.max_df
            ));
        }
        if self.batch.concurrency == 0 {
            return invalid("batch.concurrency must be at least 1".into());
        }
        if self.ablation.per_label == 0 {
            return invalid("ablation.per_label must be at least 1".into());
        }
        Ok(())
    }
}
