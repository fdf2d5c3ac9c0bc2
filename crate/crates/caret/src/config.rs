//! TOML configuration for replay and serve: scheduler limits, packer
//! geometry, token budget, request window size, and the oracle backend
//! fixture. Every key has a default, so the empty document is valid.

use std::collections::BTreeMap;

use serde::Deserialize;

use caret_core::backend::{ModelError, OracleBackend, OracleConfig};
use caret_core::context::{PackerConfig, TokenBudget};
use caret_core::engine::{EngineConfig, DEFAULT_WINDOW_CHARS};
use caret_core::scopes::ScopeMode;
use caret_core::session::FileId;
use caret_core::streak::SchedulerConfig;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    pub scheduler: SchedulerSection,
    pub packer: PackerSection,
    pub budget: BudgetSection,
    pub request: RequestSection,
    pub backend: BackendSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulerSection {
    pub max_in_flight: usize,
    pub cache_capacity: usize,
    pub cache_ttl_ms: u64,
}

impl Default for SchedulerSection {
    fn default() -> Self {
        let base = SchedulerConfig::default();
        SchedulerSection {
            max_in_flight: base.max_in_flight,
            cache_capacity: base.cache_capacity,
            cache_ttl_ms: base.cache_ttl_ms,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PackerSection {
    pub window_lines: usize,
    pub stride_lines: usize,
    pub cursor_lines_above: usize,
    pub cursor_lines_below: usize,
    pub chars_per_token: usize,
    pub scope_mode: ScopeModeName,
}

impl Default for PackerSection {
    fn default() -> Self {
        let base = PackerConfig::default();
        PackerSection {
            window_lines: base.window_lines,
            stride_lines: base.stride_lines,
            cursor_lines_above: base.cursor_lines_above,
            cursor_lines_below: base.cursor_lines_below,
            chars_per_token: base.chars_per_token,
            scope_mode: ScopeModeName::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScopeModeName {
    Auto,
    Brace,
    Indent,
}

impl From<ScopeModeName> for ScopeMode {
    fn from(name: ScopeModeName) -> ScopeMode {
        match name {
            ScopeModeName::Auto => ScopeMode::Auto,
            ScopeModeName::Brace => ScopeMode::Brace,
            ScopeModeName::Indent => ScopeMode::Indent,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetSection {
    pub input_tokens: usize,
    pub output_tokens: usize,
}

impl Default for BudgetSection {
    fn default() -> Self {
        let base = TokenBudget::default();
        BudgetSection { input_tokens: base.input_tokens, output_tokens: base.output_tokens }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RequestSection {
    /// Character budget for each of the prefix and suffix windows captured
    /// at request time.
    pub window_chars: usize,
}

impl Default for RequestSection {
    fn default() -> Self {
        RequestSection { window_chars: DEFAULT_WINDOW_CHARS }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendSection {
    /// Backend selector; the oracle is the only one implemented.
    pub kind: String,
    pub horizon_chars: usize,
    pub latency_ms: u64,
    /// Every n-th completion call fails; absent means never.
    pub fail_every: Option<u64>,
    /// Per-file future content the oracle predicts from.
    pub ground_truth: BTreeMap<String, String>,
    /// Instruction text to replacement content, for transform requests.
    pub transforms: BTreeMap<String, String>,
}

impl Default for BackendSection {
    fn default() -> Self {
        let base = OracleConfig::default();
        BackendSection {
            kind: String::from("oracle"),
            horizon_chars: base.horizon_chars,
            latency_ms: base.latency_ms,
            fail_every: base.fail_every,
            ground_truth: BTreeMap::new(),
            transforms: BTreeMap::new(),
        }
    }
}

#[derive(Debug)]
pub enum ConfigError {
    /// The document is not valid TOML or contains unknown keys.
    Parse(toml::de::Error),
    /// The backend selector names no implemented backend.
    UnknownBackend(String),
    /// The backend settings are rejected at construction.
    Backend(ModelError),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Parse(e) => write!(f, "config: {e}"),
            ConfigError::UnknownBackend(kind) => write!(f, "config: unknown backend {kind:?}"),
            ConfigError::Backend(e) => write!(f, "config: {e}"),
        }
    }
}

impl std::error::Error for ConfigError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            ConfigError::Parse(e) => Some(e),
            ConfigError::UnknownBackend(_) => None,
            ConfigError::Backend(e) => Some(e),
        }
    }
}

impl HarnessConfig {
    pub fn parse(text: &str) -> Result<HarnessConfig, ConfigError> {
        toml::from_str(text).map_err(ConfigError::Parse)
    }

    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            scheduler: SchedulerConfig {
                max_in_flight: self.scheduler.max_in_flight,
                cache_capacity: self.scheduler.cache_capacity,
                cache_ttl_ms: self.scheduler.cache_ttl_ms,
            },
            packer: PackerConfig {
                window_lines: self.packer.window_lines,
                stride_lines: self.packer.stride_lines,
                cursor_lines_above: self.packer.cursor_lines_above,
                cursor_lines_below: self.packer.cursor_lines_below,
                chars_per_token: self.packer.chars_per_token,
                scope_mode: self.packer.scope_mode.into(),
            },
            budget: TokenBudget {
                input_tokens: self.budget.input_tokens,
                output_tokens: self.budget.output_tokens,
            },
            window_chars: self.request.window_chars,
        }
    }

    pub fn backend(&self) -> Result<OracleBackend, ConfigError> {
        if self.backend.kind != "oracle" {
            return Err(ConfigError::UnknownBackend(self.backend.kind.clone()));
        }
        let mut oracle = OracleConfig::default();
        oracle.horizon_chars = self.backend.horizon_chars;
        oracle.latency_ms = self.backend.latency_ms;
        oracle.fail_every = self.backend.fail_every;
        for (file, content) in &self.backend.ground_truth {
            oracle.ground_truth.insert(FileId::from(file.as_str()), content.clone());
        }
        for (instruction, replacement) in &self.backend.transforms {
            oracle.transforms.insert(instruction.clone(), replacement.clone());
        }
        OracleBackend::new(oracle).map_err(ConfigError::Backend)
    }
}
