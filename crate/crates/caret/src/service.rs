//! Line-delimited JSON service: one engine session per connection, over a
//! TCP listener or standard streams. Each request line produces one or
//! more response lines; completion terminals may arrive later, but every
//! request reaches exactly one terminal before the connection ends.
//!
//! Virtual mode (the default) takes time from the optional `at` field of
//! each message and drains all pending arrivals at end of input. Wall mode
//! takes time from a monotonic clock and delivers arrivals as their real
//! deadlines pass.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use serde::Deserialize;
use serde_json::{json, Value};

use caret_core::diff::{LineTag, RenderedDiff};
use caret_core::engine::{Action, Engine, EngineError, Outcome, TransformOutcome};
use caret_core::metrics::ServedFrom;
use caret_core::session::{EditorEvent, EventKind, FileId, TimestampMs};
use caret_core::streak::{RequestId, SchedulerError};

use crate::clock::{TimerQueue, VirtualClock};
use crate::config::{ConfigError, HarnessConfig};
use crate::report;

/// Where request timestamps come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeMode {
    /// Message `at` fields drive the clock; deterministic.
    Virtual,
    /// A monotonic clock drives the clock; `at` fields are ignored.
    Wall,
}

/// Service endpoint selection.
#[derive(Debug, Clone)]
pub enum Transport {
    Stdio,
    Listen(String),
}

#[derive(Debug)]
pub enum ServeError {
    Config(ConfigError),
    Bind { addr: String, source: io::Error },
    Io(io::Error),
}

impl std::fmt::Display for ServeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ServeError::Config(e) => write!(f, "{e}"),
            ServeError::Bind { addr, source } => write!(f, "cannot listen on {addr}: {source}"),
            ServeError::Io(e) => write!(f, "i/o: {e}"),
        }
    }
}

impl std::error::Error for ServeError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            ServeError::Config(e) => Some(e),
            ServeError::Bind { source, .. } => Some(source),
            ServeError::Io(e) => Some(e),
        }
    }
}

impl From<ConfigError> for ServeError {
    fn from(e: ConfigError) -> Self {
        ServeError::Config(e)
    }
}

// ------------------------------------------------------------- protocol --

#[derive(Debug, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
enum Request {
    Open {
        file: String,
        content: String,
        #[serde(default)]
        at: Option<TimestampMs>,
    },
    Edit {
        file: String,
        #[serde(flatten)]
        change: EditChange,
        #[serde(default)]
        at: Option<TimestampMs>,
    },
    Complete {
        id: String,
        file: String,
        #[serde(default)]
        at: Option<TimestampMs>,
    },
    Cancel {
        id: String,
        #[serde(default)]
        at: Option<TimestampMs>,
    },
    Accept {
        id: String,
        #[serde(default)]
        at: Option<TimestampMs>,
    },
    Reject {
        id: String,
        #[serde(default)]
        at: Option<TimestampMs>,
    },
    Transform {
        file: String,
        instruction: String,
        #[serde(default)]
        at: Option<TimestampMs>,
    },
    Metrics {
        #[serde(default)]
        at: Option<TimestampMs>,
    },
}

impl Request {
    fn at(&self) -> Option<TimestampMs> {
        match self {
            Request::Open { at, .. }
            | Request::Edit { at, .. }
            | Request::Complete { at, .. }
            | Request::Cancel { at, .. }
            | Request::Accept { at, .. }
            | Request::Reject { at, .. }
            | Request::Transform { at, .. }
            | Request::Metrics { at } => *at,
        }
    }
}

/// Buffer changes carried by the `edit` op.
#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum EditChange {
    Insert { text: String },
    Delete { count: usize },
    CursorMove { offset: usize },
    Paste { text: String, full_file: bool },
    FileClose,
}

fn error_value(kind: &str, message: &str) -> Value {
    json!({ "error": { "kind": kind, "message": message } })
}

fn push_ack(result: Result<(), EngineError>, out: &mut Vec<Value>) {
    match result {
        Ok(()) => out.push(json!({ "ok": true })),
        Err(e) => out.push(engine_error_value(&e)),
    }
}

fn engine_error_value(e: &EngineError) -> Value {
    let kind = match e {
        EngineError::Session(_) => "session",
        EngineError::Scheduler(SchedulerError::DuplicateRequest) => "duplicate_request",
        EngineError::Scheduler(SchedulerError::UnknownRequest) => "unknown_request",
        EngineError::Scheduler(_) => "scheduler",
        EngineError::Model(_) => "model",
        EngineError::Script(_) => "script",
        EngineError::UnknownFile => "unknown_file",
        EngineError::UnknownSuggestion => "unknown_suggestion",
        EngineError::NoPendingResponse => "internal",
    };
    error_value(kind, &e.to_string())
}

fn served_from_name(served_from: ServedFrom) -> &'static str {
    match served_from {
        ServedFrom::Cache => "cache",
        ServedFrom::Model => "model",
    }
}

fn outcome_value(id: &RequestId, outcome: &Outcome) -> Value {
    match outcome {
        Outcome::Suggestion { text, served_from } => json!({
            "id": id.as_str(),
            "event": "suggestion",
            "text": text,
            "served_from": served_from_name(*served_from),
        }),
        Outcome::Empty => json!({ "id": id.as_str(), "event": "empty" }),
        Outcome::Failed => json!({ "id": id.as_str(), "event": "failed" }),
        Outcome::Cancelled => json!({ "id": id.as_str(), "event": "cancelled" }),
    }
}

fn diff_value(diff: &RenderedDiff) -> Value {
    let lines: Vec<Value> = diff
        .decorated_lines
        .iter()
        .map(|line| {
            let highlights: Vec<Value> =
                line.highlights.iter().map(|s| json!([s.start, s.end])).collect();
            let (tag, pair) = match line.tag {
                LineTag::Unchanged => ("unchanged", None),
                LineTag::Added => ("added", None),
                LineTag::Removed => ("removed", None),
                LineTag::Modified => ("modified", None),
                LineTag::MovedFrom { pair } => ("moved_from", Some(pair)),
                LineTag::MovedTo { pair } => ("moved_to", Some(pair)),
            };
            match pair {
                Some(pair) => {
                    json!({ "text": line.text, "tag": tag, "pair": pair, "highlights": highlights })
                }
                None => json!({ "text": line.text, "tag": tag, "highlights": highlights }),
            }
        })
        .collect();
    Value::Array(lines)
}

fn transform_value(file: &str, outcome: &TransformOutcome) -> Value {
    json!({
        "event": "transform",
        "file": file,
        "new_content": outcome.new_content,
        "script": outcome.script_text,
        "latency_ms": outcome.latency_ms,
        "diff": diff_value(&outcome.diff),
    })
}

// ----------------------------------------------------------- connection --

/// One engine session bound to one protocol stream.
pub struct Connection {
    engine: Engine,
    clock: VirtualClock,
    timers: TimerQueue,
}

impl Connection {
    pub fn new(config: &HarnessConfig) -> Result<Connection, ConfigError> {
        let backend = config.backend()?;
        Ok(Connection {
            engine: Engine::new(config.engine_config(), Box::new(backend)),
            clock: VirtualClock::new(),
            timers: TimerQueue::new(),
        })
    }

    /// Handles one raw protocol line, appending every response it produces.
    /// Malformed lines produce an error response; the connection survives.
    /// `now_override` substitutes wall time for the message's `at` field.
    pub fn handle_line(&mut self, line: &str, now_override: Option<TimestampMs>, out: &mut Vec<Value>) {
        let request: Request = match serde_json::from_str(line) {
            Ok(request) => request,
            Err(e) => {
                out.push(error_value("protocol", &e.to_string()));
                return;
            }
        };
        // Time only advances; stale stamps are lifted to the current time.
        let at = now_override.or(request.at()).unwrap_or(self.clock.now()).max(self.clock.now());
        self.deliver_due(at, out);
        self.clock.advance_to(at);

        match request {
            Request::Open { file, content, .. } => {
                let event = EditorEvent {
                    file_id: FileId::from(file.as_str()),
                    timestamp: at,
                    kind: EventKind::FileOpen { content },
                };
                let result = self.engine.apply_editor_event(&event);
                push_ack(result, out);
            }
            Request::Edit { file, change, .. } => {
                let kind = match change {
                    EditChange::Insert { text } => EventKind::Insert { text },
                    EditChange::Delete { count } => EventKind::Delete { count },
                    EditChange::CursorMove { offset } => EventKind::CursorMove { offset },
                    EditChange::Paste { text, full_file } => {
                        EventKind::Paste { text, full_file }
                    }
                    EditChange::FileClose => EventKind::FileClose,
                };
                let event =
                    EditorEvent { file_id: FileId::from(file.as_str()), timestamp: at, kind };
                let result = self.engine.apply_editor_event(&event);
                push_ack(result, out);
            }
            Request::Complete { id, file, .. } => {
                match self.engine.request_completion(
                    RequestId::from(id.as_str()),
                    &FileId::from(file.as_str()),
                    at,
                ) {
                    Ok(actions) => self.absorb(actions, out),
                    Err(e) => out.push(engine_error_value(&e)),
                }
            }
            Request::Cancel { id, .. } => {
                match self.engine.cancel(&RequestId::from(id.as_str()), at) {
                    // No actions: the request already resolved or was
                    // already cancelled; acknowledge the message itself.
                    Ok(actions) if actions.is_empty() => out.push(json!({ "ok": true })),
                    Ok(actions) => self.absorb(actions, out),
                    Err(e) => out.push(engine_error_value(&e)),
                }
            }
            Request::Accept { id, .. } => {
                let result = self.engine.accept(&RequestId::from(id.as_str()), at);
                push_ack(result, out);
            }
            Request::Reject { id, .. } => {
                let result = self.engine.reject(&RequestId::from(id.as_str()), at);
                push_ack(result, out);
            }
            Request::Transform { file, instruction, .. } => {
                match self.engine.transform(&FileId::from(file.as_str()), &instruction, at) {
                    Ok(outcome) => out.push(transform_value(&file, &outcome)),
                    Err(e) => out.push(engine_error_value(&e)),
                }
            }
            Request::Metrics { .. } => {
                out.push(json!({
                    "event": "metrics",
                    "report": report::json_value(&self.engine.report()),
                }));
            }
        }
    }

    /// Delivers every arrival due at or before `now`, in deadline order.
    pub fn deliver_due(&mut self, now: TimestampMs, out: &mut Vec<Value>) {
        while let Some((at, id)) = self.timers.pop_due(now) {
            self.clock.advance_to(at);
            let actions = self
                .engine
                .deliver_response(&id, at)
                .expect("every scheduled arrival has a parked response");
            self.absorb(actions, out);
        }
    }

    /// Drains all pending arrivals regardless of deadline. Runs at end of
    /// input so every request still reaches its terminal response.
    pub fn drain(&mut self, out: &mut Vec<Value>) {
        while let Some(at) = self.timers.next_deadline() {
            self.deliver_due(at, out);
        }
    }

    pub fn next_deadline(&self) -> Option<TimestampMs> {
        self.timers.next_deadline()
    }

    fn absorb(&mut self, actions: Vec<Action>, out: &mut Vec<Value>) {
        for action in actions {
            match action {
                Action::WakeAt { at_ms, request_id } => self.timers.schedule(at_ms, request_id),
                Action::Respond { request_id, outcome } => {
                    out.push(outcome_value(&request_id, &outcome));
                }
            }
        }
    }
}

// ------------------------------------------------------------ transport --

fn write_values(writer: &mut impl Write, values: &[Value]) -> io::Result<()> {
    for value in values {
        let line = serde_json::to_string(value).expect("responses serialize");
        writer.write_all(line.as_bytes())?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

/// Virtual-time connection loop: one line in, responses out, drain at EOF.
pub fn run_virtual(
    connection: &mut Connection,
    reader: impl BufRead,
    writer: &mut impl Write,
) -> io::Result<()> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.clear();
        connection.handle_line(&line, None, &mut out);
        write_values(writer, &out)?;
    }
    out.clear();
    connection.drain(&mut out);
    write_values(writer, &out)
}

/// Wall-clock connection loop: lines arrive over a channel so arrivals can
/// fire while the reader idles. Deadlines already due are delivered before
/// each message and whenever the wait times out.
pub fn run_wall(
    connection: &mut Connection,
    lines: Receiver<io::Result<String>>,
    writer: &mut impl Write,
) -> io::Result<()> {
    let start = Instant::now();
    let mut out = Vec::new();
    loop {
        let now = start.elapsed().as_millis() as TimestampMs;
        out.clear();
        connection.deliver_due(now, &mut out);
        write_values(writer, &out)?;

        let timeout = match connection.next_deadline() {
            Some(deadline) => Duration::from_millis(deadline.saturating_sub(now)),
            None => Duration::from_millis(250),
        };
        match lines.recv_timeout(timeout) {
            Ok(Ok(line)) => {
                if line.trim().is_empty() {
                    continue;
                }
                let now = start.elapsed().as_millis() as TimestampMs;
                out.clear();
                connection.handle_line(&line, Some(now), &mut out);
                write_values(writer, &out)?;
            }
            Ok(Err(e)) => return Err(e),
            Err(RecvTimeoutError::Timeout) => {}
            Err(RecvTimeoutError::Disconnected) => {
                out.clear();
                connection.drain(&mut out);
                return write_values(writer, &out);
            }
        }
    }
}

fn spawn_line_reader(reader: impl BufRead + Send + 'static) -> Receiver<io::Result<String>> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for line in reader.lines() {
            if tx.send(line).is_err() {
                return;
            }
        }
    });
    rx
}

fn spawn_stdin_reader() -> Receiver<io::Result<String>> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let stdin = io::stdin();
        for line in stdin.lock().lines() {
            if tx.send(line).is_err() {
                return;
            }
        }
    });
    rx
}

fn handle_stream(stream: TcpStream, config: &HarnessConfig, mode: TimeMode) -> io::Result<()> {
    let mut connection = match Connection::new(config) {
        Ok(connection) => connection,
        // The listener validated the config; a failure here means it
        // changed underneath us, so drop the connection.
        Err(_) => return Ok(()),
    };
    let reader = BufReader::new(stream.try_clone()?);
    let mut writer = stream;
    match mode {
        TimeMode::Virtual => run_virtual(&mut connection, reader, &mut writer),
        TimeMode::Wall => run_wall(&mut connection, spawn_line_reader(reader), &mut writer),
    }
}

/// Accept loop for an already-bound listener; one thread per connection.
pub fn serve_listener(
    listener: TcpListener,
    config: &HarnessConfig,
    mode: TimeMode,
) -> Result<(), ServeError> {
    config.backend()?;
    for stream in listener.incoming() {
        let Ok(stream) = stream else { continue };
        let config = config.clone();
        thread::spawn(move || {
            let _ = handle_stream(stream, &config, mode);
        });
    }
    Ok(())
}

/// Runs the service until the transport closes (stdio) or forever (TCP).
pub fn serve(config: &HarnessConfig, transport: &Transport, mode: TimeMode) -> Result<(), ServeError> {
    match transport {
        Transport::Stdio => {
            let mut connection = Connection::new(config)?;
            let stdout = io::stdout();
            let mut writer = stdout.lock();
            match mode {
                TimeMode::Virtual => {
                    let stdin = io::stdin();
                    run_virtual(&mut connection, stdin.lock(), &mut writer)
                        .map_err(ServeError::Io)
                }
                TimeMode::Wall => run_wall(&mut connection, spawn_stdin_reader(), &mut writer)
                    .map_err(ServeError::Io),
            }
        }
        Transport::Listen(addr) => {
            let listener = TcpListener::bind(addr).map_err(|source| ServeError::Bind {
                addr: addr.clone(),
                source,
            })?;
            serve_listener(listener, config, mode)
        }
    }
}
