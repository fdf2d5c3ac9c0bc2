//! Pluggable model interface plus a deterministic oracle implementation.
//!
//! The engine talks to a [`ModelBackend`] for both fill-in-the-middle
//! completions and instruction-driven transforms. The [`OracleBackend`]
//! answers from configured ground-truth content, which makes every
//! end-to-end behavior testable without a live model: it predicts exactly
//! the text the configured "future" file holds after the cursor, abstains
//! with an empty prediction when the buffer has diverged from that future,
//! and fails on a fixed schedule to exercise error paths.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use core::fmt;

use crate::context::{content_lines, CharsPerToken, PromptBundle, TokenBudget};
use crate::edit::{serialize_edit_script, ScriptError};
use crate::session::FileId;
use crate::streak::CompletionRequest;

/// Error surfaced by a model backend.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelError {
    /// The failure schedule elected this call. Models a model that never
    /// answers; the failure becomes observable only after `latency_ms`, so
    /// the call blocks its slot exactly as long as a successful one.
    ScheduledFailure { latency_ms: u64 },
    /// The transform instruction has no scripted answer.
    UnknownInstruction,
    /// Serializing the transform result failed (for example the scripted
    /// after-content equals the input, which has no non-empty script).
    Script(ScriptError),
    /// Backend construction rejected a zero prediction horizon.
    ZeroHorizon,
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::ScheduledFailure { latency_ms } => {
                write!(f, "model failed on schedule after {latency_ms}ms")
            }
            ModelError::UnknownInstruction => write!(f, "no scripted answer for instruction"),
            ModelError::Script(err) => write!(f, "transform serialization failed: {err}"),
            ModelError::ZeroHorizon => write!(f, "prediction horizon must be positive"),
        }
    }
}

impl core::error::Error for ModelError {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            ModelError::Script(err) => Some(err),
            _ => None,
        }
    }
}

/// A completion answer: the text to insert at the cursor plus the simulated
/// latency the caller should wait before delivering it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelCompletion {
    pub text: String,
    pub latency_ms: u64,
}

/// A transform answer: a rendered edit script plus simulated latency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelTransform {
    pub script_text: String,
    pub latency_ms: u64,
}

/// Interface the engine drives for completions and transforms.
///
/// Latency is simulated: implementations never sleep. They return the
/// response immediately together with `latency_ms`, and the caller's clock
/// decides when the response becomes visible. Callers may hold up to their
/// in-flight limit of outstanding responses and deliver them out of order;
/// implementations must not assume completion calls resolve one at a time.
pub trait ModelBackend {
    /// Predicts text to insert at the request's cursor. `prompt` is the
    /// packed context a remote model would consume; deterministic test
    /// backends may ignore it and answer from the request windows alone.
    ///
    /// The prediction respects the output token budget: the configured
    /// estimator prices the returned text at no more than
    /// [`TokenBudget::output_tokens`](crate::context::TokenBudget) tokens.
    fn complete(
        &mut self,
        request: &CompletionRequest,
        prompt: &PromptBundle,
    ) -> Result<ModelCompletion, ModelError>;

    /// Produces a rendered edit script that carries out `instruction`
    /// against `selection` (the content the instruction targets).
    fn transform(
        &mut self,
        selection: &str,
        instruction: &str,
    ) -> Result<ModelTransform, ModelError>;
}

/// Configuration for [`OracleBackend`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleConfig {
    /// The full future content of each file. Completions are read straight
    /// out of this text at the request anchor.
    pub ground_truth: BTreeMap<FileId, String>,
    /// Maximum prediction length in characters. Must be positive; the
    /// output token budget clamps it further.
    pub horizon_chars: usize,
    /// Fixed simulated delay attached to every response.
    pub latency_ms: u64,
    /// Deterministic failure schedule: every Nth completion call returns
    /// [`ModelError::ScheduledFailure`]. `None` never fails.
    pub fail_every: Option<u64>,
    /// Scripted transform answers: instruction text to full after-content.
    pub transforms: BTreeMap<String, String>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            ground_truth: BTreeMap::new(),
            horizon_chars: 256,
            latency_ms: 0,
            fail_every: None,
            transforms: BTreeMap::new(),
        }
    }
}

/// Deterministic test backend that answers from configured ground truth.
#[derive(Debug, Clone)]
pub struct OracleBackend {
    config: OracleConfig,
    estimator: CharsPerToken,
    output_tokens: usize,
    /// Completion calls made so far; drives the failure schedule.
    calls: u64,
}

impl OracleBackend {
    pub fn new(config: OracleConfig) -> Result<OracleBackend, ModelError> {
        if config.horizon_chars == 0 {
            return Err(ModelError::ZeroHorizon);
        }
        Ok(OracleBackend {
            config,
            estimator: CharsPerToken(4),
            output_tokens: TokenBudget::default().output_tokens,
            calls: 0,
        })
    }

    /// Reads the prediction out of the ground truth, or abstains.
    ///
    /// The request aligns with a file's future content when the text before
    /// the cursor matches the future text before the anchor and the text
    /// after the cursor matches the tail of the future content. The
    /// prediction is then exactly the characters between, clamped to the
    /// horizon. Any mismatch (unknown file, anchor past the end, edited
    /// prefix, edited suffix) yields an empty prediction, never an error.
    fn predict(&self, request: &CompletionRequest) -> String {
        let Some(truth) = self.config.ground_truth.get(&request.file_id) else {
            return String::new();
        };
        let Some(anchor_byte) = char_offset_to_byte(truth, request.anchor) else {
            return String::new();
        };
        let (head, tail) = truth.split_at(anchor_byte);
        if !head.ends_with(request.prefix_window.as_str()) {
            return String::new();
        }
        if !tail.ends_with(request.suffix_window.as_str()) {
            return String::new();
        }
        let insertion = &tail[..tail.len() - request.suffix_window.len()];
        clamp_chars(insertion, self.prediction_cap()).to_string()
    }

    /// Longest prediction allowed in characters: the configured horizon,
    /// tightened so the estimator prices the text within the output token
    /// budget.
    fn prediction_cap(&self) -> usize {
        // With a ceiling estimator, `output_tokens * chars_per_token` is the
        // exact longest length still priced within the budget.
        let budget_chars = self.output_tokens * self.estimator.0;
        self.config.horizon_chars.min(budget_chars)
    }
}

impl ModelBackend for OracleBackend {
    fn complete(
        &mut self,
        request: &CompletionRequest,
        _prompt: &PromptBundle,
    ) -> Result<ModelCompletion, ModelError> {
        self.calls += 1;
        if let Some(every) = self.config.fail_every {
            if every > 0 && self.calls % every == 0 {
                return Err(ModelError::ScheduledFailure { latency_ms: self.config.latency_ms });
            }
        }
        Ok(ModelCompletion {
            text: self.predict(request),
            latency_ms: self.config.latency_ms,
        })
    }

    fn transform(
        &mut self,
        selection: &str,
        instruction: &str,
    ) -> Result<ModelTransform, ModelError> {
        let Some(after) = self.config.transforms.get(instruction) else {
            return Err(ModelError::UnknownInstruction);
        };
        let before_lines = content_lines(selection);
        let after_lines = content_lines(after);
        let script =
            serialize_edit_script(&before_lines, &after_lines).map_err(ModelError::Script)?;
        Ok(ModelTransform {
            script_text: script.render(),
            latency_ms: self.config.latency_ms,
        })
    }
}

/// Byte index of the character at char offset `offset`, or the text length
/// when `offset` equals the char count. `None` past the end.
fn char_offset_to_byte(text: &str, offset: usize) -> Option<usize> {
    if offset == 0 {
        return Some(0);
    }
    let mut remaining = offset;
    for (byte, _) in text.char_indices() {
        if remaining == 0 {
            return Some(byte);
        }
        remaining -= 1;
    }
    if remaining == 0 {
        Some(text.len())
    } else {
        None
    }
}

/// The longest prefix of `text` holding at most `max_chars` characters.
fn clamp_chars(text: &str, max_chars: usize) -> &str {
    match char_offset_to_byte(text, max_chars) {
        Some(byte) => &text[..byte],
        None => text,
    }
}
