//! Replay traces: one JSON object per line, each an editor event or
//! client action stamped with a virtual time. Steps are replayed in file
//! order, so their timestamps must never decrease.

use serde::{Deserialize, Serialize};

use caret_core::session::TimestampMs;

/// One trace line. `at` is the virtual time the step occurs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub at: TimestampMs,
    #[serde(flatten)]
    pub action: TraceAction,
}

/// Everything a trace can do: the editor event vocabulary plus the client
/// actions a connected IDE would send.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceAction {
    FileOpen { file: String, content: String },
    FileClose { file: String },
    Insert { file: String, text: String },
    Delete { file: String, count: usize },
    CursorMove { file: String, offset: usize },
    Paste { file: String, text: String, full_file: bool },
    RequestCompletion { id: String, file: String },
    Cancel { id: String },
    Accept { id: String },
    Reject { id: String },
    Transform { file: String, instruction: String },
}

/// A parsed trace, in replay order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReplayTrace {
    pub steps: Vec<TraceStep>,
}

/// Failures while reading a trace file. Line numbers are 1-based and refer
/// to the raw text, counting blank lines.
#[derive(Debug)]
pub enum TraceParseError {
    /// A non-blank line is not a valid trace step.
    Syntax { line: usize, message: String },
    /// A step is stamped earlier than its predecessor.
    TimeRegression { line: usize },
}

impl std::fmt::Display for TraceParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TraceParseError::Syntax { line, message } => {
                write!(f, "trace line {line}: {message}")
            }
            TraceParseError::TimeRegression { line } => {
                write!(f, "trace line {line}: timestamp decreases")
            }
        }
    }
}

impl std::error::Error for TraceParseError {}

/// Parses line-delimited JSON trace text. Blank lines are skipped.
pub fn parse_trace(text: &str) -> Result<ReplayTrace, TraceParseError> {
    let mut steps = Vec::new();
    let mut last_at: Option<TimestampMs> = None;
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let number = index + 1;
        let step: TraceStep = serde_json::from_str(line).map_err(|e| TraceParseError::Syntax {
            line: number,
            message: e.to_string(),
        })?;
        if let Some(last) = last_at {
            if step.at < last {
                return Err(TraceParseError::TimeRegression { line: number });
            }
        }
        last_at = Some(step.at);
        steps.push(step);
    }
    Ok(ReplayTrace { steps })
}

/// Renders a trace back to line-delimited JSON, one step per line.
pub fn render_trace(trace: &ReplayTrace) -> String {
    let mut out = String::new();
    for step in &trace.steps {
        out.push_str(&serde_json::to_string(step).expect("trace steps serialize"));
        out.push('\n');
    }
    out
}
