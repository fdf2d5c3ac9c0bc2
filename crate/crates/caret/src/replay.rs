//! Virtual-time trace replay: drives one engine session through a trace,
//! delivering simulated model arrivals between steps, and returns the
//! session's metrics report. Replay is deterministic: the report is a pure
//! function of (trace, config).

use caret_core::engine::{Action, Engine, EngineError};
use caret_core::metrics::MetricsReport;
use caret_core::session::{EditorEvent, EventKind, FileId, TimestampMs};
use caret_core::streak::RequestId;

use crate::clock::{TimerQueue, VirtualClock};
use crate::config::{ConfigError, HarnessConfig};
use crate::trace::{ReplayTrace, TraceAction};

/// Failures during replay. Parse failures of the trace and config surface
/// through their own error types before replay begins.
#[derive(Debug)]
pub enum ReplayError {
    /// The config's backend settings are rejected.
    Config(ConfigError),
    /// A step references state the session does not have (unknown file,
    /// unknown request, reused id). Steps are numbered from 1.
    Step { step: usize, source: EngineError },
}

impl std::fmt::Display for ReplayError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReplayError::Config(e) => write!(f, "{e}"),
            ReplayError::Step { step, source } => write!(f, "trace step {step}: {source}"),
        }
    }
}

impl std::error::Error for ReplayError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            ReplayError::Config(e) => Some(e),
            ReplayError::Step { source, .. } => Some(source),
        }
    }
}

impl From<ConfigError> for ReplayError {
    fn from(e: ConfigError) -> Self {
        ReplayError::Config(e)
    }
}

/// Replays a trace against a fresh engine session and reports its metrics.
/// Arrivals due at a step's timestamp are delivered before the step itself;
/// after the last step, every outstanding arrival is drained.
pub fn replay(trace: &ReplayTrace, config: &HarnessConfig) -> Result<MetricsReport, ReplayError> {
    let backend = config.backend()?;
    let mut engine = Engine::new(config.engine_config(), Box::new(backend));
    let mut clock = VirtualClock::new();
    let mut timers = TimerQueue::new();

    for (index, step) in trace.steps.iter().enumerate() {
        deliver_due(&mut engine, &mut timers, step.at);
        clock.advance_to(step.at);
        let number = index + 1;
        let fail = |source| ReplayError::Step { step: number, source };
        match &step.action {
            TraceAction::FileOpen { file, content } => {
                let event = editor_event(file, step.at, EventKind::FileOpen {
                    content: content.clone(),
                });
                engine.apply_editor_event(&event).map_err(fail)?;
            }
            TraceAction::FileClose { file } => {
                let event = editor_event(file, step.at, EventKind::FileClose);
                engine.apply_editor_event(&event).map_err(fail)?;
            }
            TraceAction::Insert { file, text } => {
                let event = editor_event(file, step.at, EventKind::Insert { text: text.clone() });
                engine.apply_editor_event(&event).map_err(fail)?;
            }
            TraceAction::Delete { file, count } => {
                let event = editor_event(file, step.at, EventKind::Delete { count: *count });
                engine.apply_editor_event(&event).map_err(fail)?;
            }
            TraceAction::CursorMove { file, offset } => {
                let event =
                    editor_event(file, step.at, EventKind::CursorMove { offset: *offset });
                engine.apply_editor_event(&event).map_err(fail)?;
            }
            TraceAction::Paste { file, text, full_file } => {
                let event = editor_event(file, step.at, EventKind::Paste {
                    text: text.clone(),
                    full_file: *full_file,
                });
                engine.apply_editor_event(&event).map_err(fail)?;
            }
            TraceAction::RequestCompletion { id, file } => {
                let actions = engine
                    .request_completion(RequestId::from(id.as_str()), &FileId::from(file.as_str()), step.at)
                    .map_err(fail)?;
                schedule(&mut timers, actions);
            }
            TraceAction::Cancel { id } => {
                let actions =
                    engine.cancel(&RequestId::from(id.as_str()), step.at).map_err(fail)?;
                schedule(&mut timers, actions);
            }
            TraceAction::Accept { id } => {
                engine.accept(&RequestId::from(id.as_str()), step.at).map_err(fail)?;
            }
            TraceAction::Reject { id } => {
                engine.reject(&RequestId::from(id.as_str()), step.at).map_err(fail)?;
            }
            TraceAction::Transform { file, instruction } => {
                engine
                    .transform(&FileId::from(file.as_str()), instruction, step.at)
                    .map_err(fail)?;
            }
        }
    }

    // Drain: every dispatched request still resolves, so the report covers
    // the whole trace.
    while let Some(at) = timers.next_deadline() {
        clock.advance_to(at);
        deliver_due(&mut engine, &mut timers, clock.now());
    }
    Ok(engine.report())
}

fn editor_event(file: &str, at: TimestampMs, kind: EventKind) -> EditorEvent {
    EditorEvent { file_id: FileId::from(file), timestamp: at, kind }
}

/// Delivers every arrival due at or before `now`, in deadline order.
/// Deliveries can dispatch queued requests and schedule new arrivals.
fn deliver_due(engine: &mut Engine, timers: &mut TimerQueue, now: TimestampMs) {
    while let Some((at, id)) = timers.pop_due(now) {
        let actions = engine
            .deliver_response(&id, at)
            .expect("every scheduled arrival has a parked response");
        schedule(timers, actions);
    }
}

fn schedule(timers: &mut TimerQueue, actions: Vec<Action>) {
    for action in actions {
        if let Action::WakeAt { at_ms, request_id } = action {
            timers.schedule(at_ms, request_id);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{parse_trace, TraceStep};

    fn config_with_truth(truth: &str) -> HarnessConfig {
        let text = format!(
            "[backend]\nlatency_ms = 200\n[backend.ground_truth]\n\"main.rs\" = {}\n",
            toml_string(truth)
        );
        HarnessConfig::parse(&text).expect("well-formed config")
    }

    fn toml_string(value: &str) -> String {
        format!("{:?}", value)
    }

    fn step(at: TimestampMs, action: TraceAction) -> TraceStep {
        TraceStep { at, action }
    }

    fn s(text: &str) -> String {
        String::from(text)
    }

    #[test]
    fn the_empty_trace_reports_all_zero() {
        let report =
            replay(&ReplayTrace::default(), &HarnessConfig::default()).expect("empty replay");
        assert_eq!(report.requests, 0);
        assert_eq!(report.shown, 0);
        assert_eq!(report.typed_chars, 0);
        assert_eq!(report.fcml, 0.0);
        assert_eq!(report.cache_hit_rate, 0.0);
        assert_eq!(report.latency_p50_ms, 0);
    }

    #[test]
    fn a_request_and_accept_flow_lands_in_the_report() {
        let config = config_with_truth("fn main() {}\n");
        let trace = ReplayTrace {
            steps: vec![
                step(0, TraceAction::FileOpen { file: s("main.rs"), content: s("") }),
                step(0, TraceAction::RequestCompletion { id: s("r1"), file: s("main.rs") }),
                step(300, TraceAction::Accept { id: s("r1") }),
            ],
        };
        let report = replay(&trace, &config).expect("valid trace");
        assert_eq!(report.requests, 1);
        assert_eq!(report.shown, 1);
        assert_eq!(report.accepted, 1);
        assert_eq!(report.accepted_chars, "fn main() {}\n".chars().count());
        assert_eq!(report.latency_p50_ms, 200);
        assert_eq!(report.cache_served, 0);
    }

    #[test]
    fn arrivals_at_a_step_timestamp_land_before_the_step() {
        // The accept at t=200 is only valid if r1's arrival (due exactly
        // at t=200) was delivered first.
        let config = config_with_truth("fn main() {}\n");
        let trace = ReplayTrace {
            steps: vec![
                step(0, TraceAction::FileOpen { file: s("main.rs"), content: s("") }),
                step(0, TraceAction::RequestCompletion { id: s("r1"), file: s("main.rs") }),
                step(200, TraceAction::Accept { id: s("r1") }),
            ],
        };
        let report = replay(&trace, &config).expect("arrival precedes the step");
        assert_eq!(report.accepted, 1);
    }

    #[test]
    fn dangling_requests_resolve_in_the_drain() {
        let config = config_with_truth("fn main() {}\n");
        let trace = ReplayTrace {
            steps: vec![
                step(0, TraceAction::FileOpen { file: s("main.rs"), content: s("") }),
                step(0, TraceAction::RequestCompletion { id: s("r1"), file: s("main.rs") }),
            ],
        };
        let report = replay(&trace, &config).expect("valid trace");
        assert_eq!(report.requests, 1);
        assert_eq!(report.shown, 1);
    }

    #[test]
    fn steps_that_reference_missing_state_name_their_position() {
        let trace = ReplayTrace {
            steps: vec![step(
                0,
                TraceAction::RequestCompletion { id: s("r1"), file: s("ghost.rs") },
            )],
        };
        match replay(&trace, &HarnessConfig::default()) {
            Err(ReplayError::Step { step, .. }) => assert_eq!(step, 1),
            other => panic!("expected a step error, got {other:?}"),
        }
    }

    #[test]
    fn replaying_a_trace_twice_gives_identical_reports() {
        let config = config_with_truth("let total = items.len();\n");
        let text = concat!(
            "{\"at\":0,\"kind\":\"file_open\",\"file\":\"main.rs\",\"content\":\"\"}\n",
            "{\"at\":0,\"kind\":\"request_completion\",\"id\":\"r1\",\"file\":\"main.rs\"}\n",
            "{\"at\":50,\"kind\":\"insert\",\"file\":\"main.rs\",\"text\":\"l\"}\n",
            "{\"at\":50,\"kind\":\"request_completion\",\"id\":\"r2\",\"file\":\"main.rs\"}\n",
            "{\"at\":260,\"kind\":\"accept\",\"id\":\"r2\"}\n",
        );
        let trace = parse_trace(text).expect("well-formed trace");
        let first = replay(&trace, &config).expect("valid trace");
        let second = replay(&trace, &config).expect("valid trace");
        assert_eq!(first, second);
    }
}
