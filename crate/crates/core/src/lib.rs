//! Middleware engine for serving AI code completions and code transforms.
//!
//! Everything in this crate is deterministic and time-free: operations take
//! millisecond timestamps as arguments and never consult a clock, sleep, or
//! spawn. The companion binary crate supplies IO, wire formats, and the
//! virtual-time replay harness.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod backend;
pub mod context;
pub mod diff;
pub mod edit;
pub mod engine;
pub mod metrics;
pub mod scopes;
pub mod session;
pub mod streak;

pub use backend::{ModelBackend, ModelError, OracleBackend, OracleConfig};
pub use diff::{render_diff, RenderedDiff};
pub use engine::{Action, Engine, EngineConfig, EngineError, Outcome, TransformOutcome};
pub use edit::{apply_edit, parse_edit_script, serialize_edit_script, EditScript, ScriptError};
pub use metrics::{MetricsReport, SessionEventLog};
pub use session::{DocumentState, EditRecord, EditorEvent, EventKind, FileId, Session, Span};
pub use streak::{CompletionRequest, RequestId, Scheduler};
