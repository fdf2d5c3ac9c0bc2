//! Replay and service harness around the engine: virtual-time trace
//! replay producing metrics reports, and a line-delimited JSON protocol
//! exposing one engine session per connection.

pub mod clock;
pub mod config;
pub mod replay;
pub mod report;
pub mod service;
pub mod trace;

pub use clock::{TimerQueue, VirtualClock};
pub use config::{ConfigError, HarnessConfig};
pub use replay::{replay, ReplayError};
pub use report::{render_json, render_table};
pub use service::{serve, Connection, ServeError, TimeMode, Transport};
pub use trace::{parse_trace, render_trace, ReplayTrace, TraceAction, TraceParseError, TraceStep};
