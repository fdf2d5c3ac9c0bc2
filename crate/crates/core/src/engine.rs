//! Orchestration layer tying the session, scheduler, context packer, and
//! model backend together behind one clock-free interface.
//!
//! The engine owns all per-session state but never waits: operations take
//! the current virtual time and return [`Action`]s telling the caller what
//! to send to the client and when to wake the engine again. Model latency
//! is therefore entirely the caller's concern, which keeps every behavior
//! in this module reproducible from a (trace, config) pair alone.
//!
//! Request lifecycle. Every completion request reaches exactly one terminal
//! outcome: a suggestion, an empty answer, a failure, or a cancellation
//! acknowledgement. Cache hits resolve synchronously; dispatched requests
//! resolve when the caller delivers the model response at its arrival time;
//! queued requests resolve when a response frees a slot or a cached
//! prediction starts covering them; cancelled requests resolve at the
//! cancel itself (an in-flight response still arrives later and is cached,
//! just never delivered).

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::backend::{ModelBackend, ModelError};
use crate::context::{
    build_prompt, content_lines, cursor_context_text, cursor_line, rank_snippets, scan_matches,
    CharsPerToken, PackError, PackerConfig, PromptBundle, TokenBudget,
};
use crate::diff::{render_diff, RenderedDiff};
use crate::edit::{apply_edit, parse_edit_script, ScriptError};
use crate::metrics::{MetricEvent, MetricsReport, ServedFrom, SessionEventLog};
use crate::session::{
    EditorEvent, EventKind, FileId, Session, SessionError, TimestampMs,
};
use crate::streak::{
    CancelEffect, CompletionRequest, RequestId, Scheduler, SchedulerConfig, SchedulerError,
    SubmitDecision,
};

/// Characters captured on each side of the cursor for request windows.
pub const DEFAULT_WINDOW_CHARS: usize = 2048;

/// Tunables for one engine instance.
#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub scheduler: SchedulerConfig,
    pub packer: PackerConfig,
    pub budget: TokenBudget,
    /// Request window size in characters, applied to both sides of the
    /// cursor. Prefix and suffix windows feed both cache adaptation and the
    /// model backend.
    pub window_chars: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            scheduler: SchedulerConfig::default(),
            packer: PackerConfig::default(),
            budget: TokenBudget::default(),
            window_chars: DEFAULT_WINDOW_CHARS,
        }
    }
}

/// Terminal outcome of a completion request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    /// Text to surface at the cursor.
    Suggestion { text: String, served_from: ServedFrom },
    /// The model answered with nothing to suggest.
    Empty,
    /// The model call failed; nothing was suggested.
    Failed,
    /// The request was cancelled before an answer was delivered.
    Cancelled,
}

/// Instructions the engine hands back to its driver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    /// Deliver this terminal outcome to the client.
    Respond { request_id: RequestId, outcome: Outcome },
    /// Call [`Engine::deliver_response`] for this request once virtual time
    /// reaches `at_ms`.
    WakeAt { at_ms: TimestampMs, request_id: RequestId },
}

/// Result of a synchronous transform request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformOutcome {
    /// The edit script exactly as the model rendered it.
    pub script_text: String,
    /// File content after applying the script; already in the session.
    pub new_content: String,
    /// Move-aware rendering of the change for display.
    pub diff: RenderedDiff,
    /// Simulated model latency for the call.
    pub latency_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EngineError {
    Session(SessionError),
    Scheduler(SchedulerError),
    Model(ModelError),
    Script(ScriptError),
    /// The request targets a file that is not open.
    UnknownFile,
    /// No model response is awaiting delivery for this request id.
    NoPendingResponse,
    /// Accept or reject for a suggestion that is not awaiting a decision.
    UnknownSuggestion,
}

impl fmt::Display for EngineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EngineError::Session(err) => write!(f, "session: {err}"),
            EngineError::Scheduler(err) => write!(f, "scheduler: {err}"),
            EngineError::Model(err) => write!(f, "model: {err}"),
            EngineError::Script(err) => write!(f, "script: {err}"),
            EngineError::UnknownFile => f.write_str("file is not open"),
            EngineError::NoPendingResponse => {
                f.write_str("no model response awaiting delivery for this id")
            }
            EngineError::UnknownSuggestion => {
                f.write_str("suggestion is not awaiting an accept or reject")
            }
        }
    }
}

impl core::error::Error for EngineError {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            EngineError::Session(err) => Some(err),
            EngineError::Scheduler(err) => Some(err),
            EngineError::Model(err) => Some(err),
            EngineError::Script(err) => Some(err),
            _ => None,
        }
    }
}

impl From<SessionError> for EngineError {
    fn from(err: SessionError) -> Self {
        EngineError::Session(err)
    }
}

impl From<SchedulerError> for EngineError {
    fn from(err: SchedulerError) -> Self {
        EngineError::Scheduler(err)
    }
}

/// A model response computed at dispatch time, parked until its virtual
/// arrival.
#[derive(Debug, Clone)]
struct AwaitingResponse {
    /// Predicted text, or None when the call failed. Either way the slot
    /// stays blocked until the arrival time.
    response: Option<String>,
    dispatched_at: TimestampMs,
}

/// A delivered suggestion waiting for the client's accept or reject.
#[derive(Debug, Clone)]
struct ShownSuggestion {
    file_id: FileId,
    text: String,
}

/// Bookkeeping for a request that has not reached its terminal outcome.
/// The issue time feeds the latency metric for requests answered from the
/// queue; the file id outlives the scheduler's copy of the request.
#[derive(Debug, Clone)]
struct TrackedRequest {
    issued_at: TimestampMs,
    file_id: FileId,
}

/// One editing session wired end to end.
pub struct Engine {
    config: EngineConfig,
    session: Session,
    scheduler: Scheduler,
    backend: Box<dyn ModelBackend>,
    log: SessionEventLog,
    estimator: CharsPerToken,
    awaiting: BTreeMap<RequestId, AwaitingResponse>,
    shown: BTreeMap<RequestId, ShownSuggestion>,
    tracked: BTreeMap<RequestId, TrackedRequest>,
}

impl Engine {
    pub fn new(config: EngineConfig, backend: Box<dyn ModelBackend>) -> Self {
        let estimator = CharsPerToken(config.packer.chars_per_token);
        Engine {
            scheduler: Scheduler::new(config.scheduler.clone()),
            session: Session::default(),
            log: SessionEventLog::new(),
            estimator,
            awaiting: BTreeMap::new(),
            shown: BTreeMap::new(),
            tracked: BTreeMap::new(),
            config,
            backend,
        }
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    pub fn scheduler(&self) -> &Scheduler {
        &self.scheduler
    }

    pub fn log(&self) -> &SessionEventLog {
        &self.log
    }

    pub fn report(&self) -> MetricsReport {
        self.log.report()
    }

    /// Applies one editor event and records its typing or pasting volume.
    /// Inserts count as typed characters; pastes keep their size and
    /// full-file flag for the paste qualification rule.
    pub fn apply_editor_event(&mut self, event: &EditorEvent) -> Result<(), EngineError> {
        self.session.apply_event(event)?;
        match &event.kind {
            EventKind::Insert { text } => {
                self.log.push(MetricEvent::Typed { chars: text.chars().count() });
            }
            EventKind::Paste { text, full_file } => {
                self.log.push(MetricEvent::Pasted {
                    chars: text.chars().count(),
                    full_file: *full_file,
                });
            }
            _ => {}
        }
        Ok(())
    }

    /// Requests a completion at the file's current cursor. Returns the
    /// actions this request produces right away: a cache hit responds
    /// immediately, a dispatch schedules a wake-up at the response's
    /// arrival time, and a queued request produces nothing yet.
    pub fn request_completion(
        &mut self,
        request_id: RequestId,
        file_id: &FileId,
        now: TimestampMs,
    ) -> Result<Vec<Action>, EngineError> {
        let request = self.completion_request(request_id, file_id, now)?;
        self.scheduler.evict(now);

        let mut actions = Vec::new();
        let id = request.request_id.clone();
        let decision = self.scheduler.submit(now, request.clone())?;
        // Submit rejects duplicate ids before touching any state, so a
        // success means this id is new to the tracking map.
        self.tracked.insert(
            id.clone(),
            TrackedRequest { issued_at: now, file_id: file_id.clone() },
        );
        match decision {
            SubmitDecision::ServedFromCache(text) => {
                // Adaptation only ever serves a non-empty remainder.
                actions.push(self.respond_suggestion(id, file_id.clone(), text, now, ServedFrom::Cache, 0));
            }
            SubmitDecision::Dispatched => {
                self.dispatch(request, now, &mut actions)?;
            }
            SubmitDecision::Enqueued => {}
        }
        Ok(actions)
    }

    /// Delivers the model response for `request_id`; the caller invokes
    /// this at the `WakeAt` time it was given. Resolves the originating
    /// request (unless it was cancelled), answers any queued requests the
    /// refreshed cache now covers, and dispatches the next queued request.
    pub fn deliver_response(
        &mut self,
        request_id: &RequestId,
        now: TimestampMs,
    ) -> Result<Vec<Action>, EngineError> {
        let awaiting = self
            .awaiting
            .remove(request_id)
            .ok_or(EngineError::NoPendingResponse)?;
        let file_id = self.request_file(request_id);
        // A failed call resolves like an empty response inside the
        // scheduler: the slot frees and the cached entry can never adapt.
        let cached_text = awaiting.response.as_deref().unwrap_or("");
        let resolution = self.scheduler.on_model_response(now, request_id, cached_text)?;

        let mut actions = Vec::new();
        if let Some(text) = resolution.origin_delivery {
            let latency = now.saturating_sub(awaiting.dispatched_at);
            match &awaiting.response {
                // Failures are terminal errors, not answers; they produce
                // no latency event.
                None => {
                    self.tracked.remove(request_id);
                    actions.push(Action::Respond {
                        request_id: request_id.clone(),
                        outcome: Outcome::Failed,
                    });
                }
                Some(_) if text.is_empty() => {
                    self.log.push(MetricEvent::RequestLatency {
                        ms: latency,
                        served_from: ServedFrom::Model,
                    });
                    self.tracked.remove(request_id);
                    actions.push(Action::Respond {
                        request_id: request_id.clone(),
                        outcome: Outcome::Empty,
                    });
                }
                Some(_) => {
                    let file_id = file_id.ok_or(EngineError::UnknownFile)?;
                    actions.push(self.respond_suggestion(
                        request_id.clone(),
                        file_id,
                        text,
                        now,
                        ServedFrom::Model,
                        latency,
                    ));
                }
            }
        } else {
            // Cancelled while in flight: the prediction is cached for
            // later adaptation but nothing is delivered.
            self.tracked.remove(request_id);
        }
        self.finish_resolution(resolution.adapted, resolution.dispatch, now, &mut actions)?;
        Ok(actions)
    }

    /// Cancels a request. The first cancel of a queued or in-flight request
    /// acknowledges the cancellation as that request's terminal outcome; a
    /// repeat cancel, or a request already resolved, produces nothing.
    pub fn cancel(
        &mut self,
        request_id: &RequestId,
        _now: TimestampMs,
    ) -> Result<Vec<Action>, EngineError> {
        if self.scheduler.cancel(request_id)? == CancelEffect::NoEffect {
            return Ok(Vec::new());
        }
        self.tracked.remove(request_id);
        Ok(vec![Action::Respond {
            request_id: request_id.clone(),
            outcome: Outcome::Cancelled,
        }])
    }

    /// Accepts a shown suggestion: its text enters the buffer at the
    /// suggestion's file cursor and counts as assistant-written characters,
    /// not typed ones.
    pub fn accept(&mut self, request_id: &RequestId, now: TimestampMs) -> Result<(), EngineError> {
        let shown = self
            .shown
            .remove(request_id)
            .ok_or(EngineError::UnknownSuggestion)?;
        let event = EditorEvent {
            file_id: shown.file_id,
            timestamp: now,
            kind: EventKind::Insert { text: shown.text },
        };
        self.session.apply_event(&event)?;
        self.log.push(MetricEvent::SuggestionAccepted {
            id: request_id.clone(),
            timestamp: now,
        });
        Ok(())
    }

    /// Rejects a shown suggestion. Whether the rejection counts against the
    /// acceptance rate depends on how long it was visible; the metrics
    /// module applies that rule.
    pub fn reject(&mut self, request_id: &RequestId, now: TimestampMs) -> Result<(), EngineError> {
        if self.shown.remove(request_id).is_none() {
            return Err(EngineError::UnknownSuggestion);
        }
        self.log.push(MetricEvent::SuggestionRejected {
            id: request_id.clone(),
            timestamp: now,
        });
        Ok(())
    }

    /// Runs an instruction-driven transform on a whole file: asks the
    /// backend for an edit script, applies it, installs the result as the
    /// file's new content, and returns a move-aware rendering of the
    /// change. Synchronous; the simulated latency is reported, not waited.
    pub fn transform(
        &mut self,
        file_id: &FileId,
        instruction: &str,
        now: TimestampMs,
    ) -> Result<TransformOutcome, EngineError> {
        let doc = self.session.document(file_id).ok_or(EngineError::UnknownFile)?;
        let before = String::from(doc.content());
        let answer = self
            .backend
            .transform(&before, instruction)
            .map_err(EngineError::Model)?;
        let script = parse_edit_script(&answer.script_text).map_err(EngineError::Script)?;
        let before_lines = content_lines(&before);
        let after_lines = apply_edit(&script, &before_lines).map_err(EngineError::Script)?;

        let mut new_content = after_lines.join("\n");
        if before.ends_with('\n') && !new_content.is_empty() {
            new_content.push('\n');
        }
        let after_refs: Vec<&str> = after_lines.iter().map(String::as_str).collect();
        let diff = render_diff(&before_lines, &after_refs);

        let event = EditorEvent {
            file_id: file_id.clone(),
            timestamp: now,
            kind: EventKind::Paste { text: new_content.clone(), full_file: true },
        };
        self.session.apply_event(&event)?;
        Ok(TransformOutcome {
            script_text: answer.script_text,
            new_content,
            diff,
            latency_ms: answer.latency_ms,
        })
    }

    /// Builds the completion request snapshot: cursor anchor plus prefix
    /// and suffix windows clipped to the configured size.
    fn completion_request(
        &self,
        request_id: RequestId,
        file_id: &FileId,
        now: TimestampMs,
    ) -> Result<CompletionRequest, EngineError> {
        let doc = self.session.document(file_id).ok_or(EngineError::UnknownFile)?;
        let cursor = doc.cursor();
        let window = self.config.window_chars;
        let start = cursor.saturating_sub(window);
        let prefix_window: String =
            doc.content().chars().skip(start).take(cursor - start).collect();
        let suffix_window: String = doc.content().chars().skip(cursor).take(window).collect();
        Ok(CompletionRequest {
            request_id,
            file_id: file_id.clone(),
            anchor: cursor,
            prefix_window,
            suffix_window,
            issued_at: now,
        })
    }

    /// Starts the model call for a dispatched request and parks its
    /// outcome until the arrival time. A failed call parks too: the
    /// failure only becomes observable after its latency, so the slot
    /// stays blocked exactly as long as a successful call would.
    fn dispatch(
        &mut self,
        request: CompletionRequest,
        now: TimestampMs,
        actions: &mut Vec<Action>,
    ) -> Result<(), EngineError> {
        let id = request.request_id.clone();
        let call = match self.packed_prompt(&request) {
            Ok(prompt) => self.backend.complete(&request, &prompt),
            // A prompt that cannot be packed never reaches the model;
            // surface it as an immediate failure.
            Err(()) => Err(ModelError::ScheduledFailure { latency_ms: 0 }),
        };
        let (response, latency_ms) = match call {
            Ok(completion) => (Some(completion.text), completion.latency_ms),
            Err(ModelError::ScheduledFailure { latency_ms }) => (None, latency_ms),
            Err(_) => (None, 0),
        };
        self.awaiting
            .insert(id.clone(), AwaitingResponse { response, dispatched_at: now });
        actions.push(Action::WakeAt { at_ms: now + latency_ms, request_id: id });
        Ok(())
    }

    /// Applies the queue effects of a model response: cache-adapted answers
    /// for requests that were waiting, then the dispatch of the new queue
    /// head.
    fn finish_resolution(
        &mut self,
        adapted: Vec<(RequestId, String)>,
        dispatch: Option<CompletionRequest>,
        now: TimestampMs,
        actions: &mut Vec<Action>,
    ) -> Result<(), EngineError> {
        for (id, text) in adapted {
            let tracked = self.tracked.get(&id).ok_or(EngineError::UnknownFile)?;
            let file_id = tracked.file_id.clone();
            let latency = now.saturating_sub(tracked.issued_at);
            let action = self.respond_suggestion(id, file_id, text, now, ServedFrom::Cache, latency);
            actions.push(action);
        }
        if let Some(request) = dispatch {
            self.dispatch(request, now, actions)?;
        }
        Ok(())
    }

    /// Records the latency and shown events for a delivered suggestion and
    /// builds its response action.
    fn respond_suggestion(
        &mut self,
        request_id: RequestId,
        file_id: FileId,
        text: String,
        now: TimestampMs,
        served_from: ServedFrom,
        latency_ms: u64,
    ) -> Action {
        self.log.push(MetricEvent::RequestLatency { ms: latency_ms, served_from });
        self.log.push(MetricEvent::SuggestionShown {
            id: request_id.clone(),
            timestamp: now,
            chars: text.chars().count(),
        });
        self.shown.insert(
            request_id.clone(),
            ShownSuggestion { file_id, text: text.clone() },
        );
        self.tracked.remove(&request_id);
        Action::Respond {
            request_id,
            outcome: Outcome::Suggestion { text, served_from },
        }
    }

    /// File a not-yet-terminal request targets.
    fn request_file(&self, request_id: &RequestId) -> Option<FileId> {
        self.tracked.get(request_id).map(|t| t.file_id.clone())
    }

    /// Packs the prompt for a model call. Any packing failure is treated
    /// like a model failure by the dispatch path.
    fn packed_prompt(&self, request: &CompletionRequest) -> Result<PromptBundle, ()> {
        let doc = self.session.document(&request.file_id).ok_or(())?;
        let context = cursor_context_text(doc, &self.config.packer);
        let line = cursor_line(doc);
        let matches = scan_matches(
            self.session.open_files().map(|d| (d.file_id(), d.content())),
            (&request.file_id, line),
            &context,
            self.config.packer.window_lines,
            self.config.packer.stride_lines,
        );
        let ranked = rank_snippets(&self.session.recent_edits(), matches);
        build_prompt(
            &self.session,
            doc,
            &ranked,
            &self.config.packer,
            self.config.budget,
            &self.estimator,
        )
        .map_err(|_: PackError| ())
    }
}
