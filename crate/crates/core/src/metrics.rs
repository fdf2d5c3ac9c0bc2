//! Productivity metrics computed from session event logs: fraction of code
//! written by the assistant, acceptance rate under a visibility rule,
//! latency percentiles, cache hit rate, and characters per accept.
//!
//! Every metric is a pure function of the log. The combined
//! [`MetricsReport`] is total: a metric whose denominator is zero reports 0
//! and lists its name in `zero_denominators` instead of failing, so replay
//! reports exist even for traces that never trigger a suggestion.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::session::TimestampMs;
use crate::streak::RequestId;

/// A rejection only counts against acceptance rate when the suggestion was
/// visible at least this long; an instant dismissal was never really read.
pub const REJECT_VISIBILITY_THRESHOLD_MS: u64 = 750;

/// Pastes at or above this many characters (and full-file pastes) are
/// excluded from typing totals; bulk imports are not authored code.
pub const QUALIFYING_PASTE_LIMIT: usize = 1000;

/// Where a served completion came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServedFrom {
    Cache,
    Model,
}

/// One observable event in a session, in occurrence order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricEvent {
    Typed {
        chars: usize,
    },
    Pasted {
        chars: usize,
        full_file: bool,
    },
    SuggestionShown {
        id: RequestId,
        timestamp: TimestampMs,
        chars: usize,
    },
    SuggestionAccepted {
        id: RequestId,
        timestamp: TimestampMs,
    },
    SuggestionRejected {
        id: RequestId,
        timestamp: TimestampMs,
    },
    RequestLatency {
        ms: u64,
        served_from: ServedFrom,
    },
}

/// Append-only event log for one session. Accepted and rejected ids must
/// reference a previously shown suggestion; a suggestion resolves at most
/// once. Events violating either rule are ignored by the tally, so a report
/// exists for any log.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SessionEventLog {
    events: Vec<MetricEvent>,
}

impl SessionEventLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, event: MetricEvent) {
        self.events.push(event);
    }

    pub fn events(&self) -> &[MetricEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Computes the full report; see the module docs for totality rules.
    pub fn report(&self) -> MetricsReport {
        MetricsReport::compute(self)
    }
}

/// Failure of a standalone metric with a non-empty precondition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricsError {
    /// The log holds no latency events to take percentiles over.
    EmptyLog,
}

impl core::fmt::Display for MetricsError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MetricsError::EmptyLog => write!(f, "no latency events in the log"),
        }
    }
}

impl core::error::Error for MetricsError {}

/// All metrics and funnel counts computed from one log.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// Accepted characters over accepted + typed + qualifying pasted.
    pub fcml: f64,
    /// Accepted characters over accepted + typed, ignoring pastes.
    pub fcml_no_paste: f64,
    /// Accepts over accepts + rejects visible at least 750 ms.
    pub acceptance_rate: f64,
    pub avg_chars_per_accept: f64,
    pub latency_p50_ms: u64,
    pub latency_p90_ms: u64,
    /// Cache-served requests over all requests with a latency event.
    pub cache_hit_rate: f64,
    pub requests: usize,
    pub cache_served: usize,
    pub shown: usize,
    pub accepted: usize,
    pub rejected: usize,
    /// Rejects that met the visibility threshold.
    pub qualifying_rejects: usize,
    pub typed_chars: usize,
    pub accepted_chars: usize,
    pub pasted_chars: usize,
    /// Pasted characters from pastes under the size limit and not full-file.
    pub qualifying_pasted_chars: usize,
    /// Names of metrics reported as 0 because their denominator was 0.
    pub zero_denominators: Vec<&'static str>,
}

impl MetricsReport {
    pub fn compute(log: &SessionEventLog) -> MetricsReport {
        let tally = Tally::collect(log);
        let mut zero_denominators = Vec::new();

        let fcml = quotient(
            tally.accepted_chars,
            tally.typed_chars + tally.qualifying_pasted_chars + tally.accepted_chars,
            "fcml",
            &mut zero_denominators,
        );
        let fcml_no_paste = quotient(
            tally.accepted_chars,
            tally.typed_chars + tally.accepted_chars,
            "fcml_no_paste",
            &mut zero_denominators,
        );
        let acceptance_rate = quotient(
            tally.accepted,
            tally.accepted + tally.qualifying_rejects,
            "acceptance_rate",
            &mut zero_denominators,
        );
        let avg_chars_per_accept = quotient(
            tally.accepted_chars,
            tally.accepted,
            "avg_chars_per_accept",
            &mut zero_denominators,
        );
        let (latency_p50_ms, latency_p90_ms) = match percentiles(&tally.latencies) {
            Some(pair) => pair,
            None => {
                zero_denominators.push("latency_percentiles");
                (0, 0)
            }
        };
        let cache_hit_rate = quotient(
            tally.cache_served,
            tally.requests,
            "cache_hit_rate",
            &mut zero_denominators,
        );

        MetricsReport {
            fcml,
            fcml_no_paste,
            acceptance_rate,
            avg_chars_per_accept,
            latency_p50_ms,
            latency_p90_ms,
            cache_hit_rate,
            requests: tally.requests,
            cache_served: tally.cache_served,
            shown: tally.shown,
            accepted: tally.accepted,
            rejected: tally.rejected,
            qualifying_rejects: tally.qualifying_rejects,
            typed_chars: tally.typed_chars,
            accepted_chars: tally.accepted_chars,
            pasted_chars: tally.pasted_chars,
            qualifying_pasted_chars: tally.qualifying_pasted_chars,
            zero_denominators,
        }
    }
}

/// Plain division that reports 0 and records the metric name when the
/// denominator is 0, keeping the report total.
fn quotient(
    numerator: usize,
    denominator: usize,
    name: &'static str,
    zero_denominators: &mut Vec<&'static str>,
) -> f64 {
    if denominator == 0 {
        zero_denominators.push(name);
        0.0
    } else {
        numerator as f64 / denominator as f64
    }
}

/// Fraction of code written by the assistant: accepted characters over
/// accepted plus typed plus qualifying pasted characters. 0 when nothing
/// was typed, pasted, or accepted.
pub fn fcml(log: &SessionEventLog) -> f64 {
    let tally = Tally::collect(log);
    let denominator = tally.typed_chars + tally.qualifying_pasted_chars + tally.accepted_chars;
    if denominator == 0 {
        0.0
    } else {
        tally.accepted_chars as f64 / denominator as f64
    }
}

/// [`fcml`] with all pasted characters excluded from the denominator, so it
/// never falls below plain fcml.
pub fn fcml_no_paste(log: &SessionEventLog) -> f64 {
    let tally = Tally::collect(log);
    let denominator = tally.typed_chars + tally.accepted_chars;
    if denominator == 0 {
        0.0
    } else {
        tally.accepted_chars as f64 / denominator as f64
    }
}

/// Accepted suggestions over accepted plus rejects that were visible at
/// least [`REJECT_VISIBILITY_THRESHOLD_MS`]. 0 when nothing resolved.
pub fn acceptance_rate(log: &SessionEventLog) -> f64 {
    let tally = Tally::collect(log);
    let denominator = tally.accepted + tally.qualifying_rejects;
    if denominator == 0 {
        0.0
    } else {
        tally.accepted as f64 / denominator as f64
    }
}

/// Nearest-rank p50 and p90 over all request latencies in the log.
pub fn latency_percentiles(log: &SessionEventLog) -> Result<(u64, u64), MetricsError> {
    let tally = Tally::collect(log);
    percentiles(&tally.latencies).ok_or(MetricsError::EmptyLog)
}

/// Cache-served requests over all requests carrying a latency event.
pub fn cache_hit_rate(log: &SessionEventLog) -> f64 {
    let tally = Tally::collect(log);
    if tally.requests == 0 {
        0.0
    } else {
        tally.cache_served as f64 / tally.requests as f64
    }
}

/// Mean accepted-suggestion length in characters. 0 without accepts.
pub fn avg_chars_per_accept(log: &SessionEventLog) -> f64 {
    let tally = Tally::collect(log);
    if tally.accepted == 0 {
        0.0
    } else {
        tally.accepted_chars as f64 / tally.accepted as f64
    }
}

fn percentiles(latencies: &[u64]) -> Option<(u64, u64)> {
    if latencies.is_empty() {
        return None;
    }
    let mut sorted: Vec<u64> = latencies.to_vec();
    sorted.sort_unstable();
    Some((nearest_rank(&sorted, 50), nearest_rank(&sorted, 90)))
}

/// Nearest-rank percentile over an ascending sample: the value at 1-based
/// rank ceil(p/100 * n), always an actual sample.
fn nearest_rank(sorted: &[u64], percentile: usize) -> u64 {
    let rank = (percentile * sorted.len()).div_ceil(100).max(1);
    sorted[rank - 1]
}

/// Funnel counts accumulated in one pass over the log. Resolution events
/// with an unknown id, and second resolutions of one suggestion, are
/// dropped here so every downstream metric sees a well-formed funnel.
#[derive(Debug, Default)]
struct Tally {
    typed_chars: usize,
    pasted_chars: usize,
    qualifying_pasted_chars: usize,
    accepted_chars: usize,
    shown: usize,
    accepted: usize,
    rejected: usize,
    qualifying_rejects: usize,
    requests: usize,
    cache_served: usize,
    latencies: Vec<u64>,
}

impl Tally {
    fn collect(log: &SessionEventLog) -> Tally {
        let mut tally = Tally::default();
        let mut shown_at: BTreeMap<&RequestId, (TimestampMs, usize)> = BTreeMap::new();
        let mut resolved: BTreeSet<&RequestId> = BTreeSet::new();
        for event in log.events() {
            match event {
                MetricEvent::Typed { chars } => tally.typed_chars += chars,
                MetricEvent::Pasted { chars, full_file } => {
                    tally.pasted_chars += chars;
                    if !full_file && *chars < QUALIFYING_PASTE_LIMIT {
                        tally.qualifying_pasted_chars += chars;
                    }
                }
                MetricEvent::SuggestionShown {
                    id,
                    timestamp,
                    chars,
                } => {
                    tally.shown += 1;
                    shown_at.entry(id).or_insert((*timestamp, *chars));
                }
                MetricEvent::SuggestionAccepted { id, .. } => {
                    let Some(&(_, chars)) = shown_at.get(id) else {
                        continue;
                    };
                    if resolved.insert(id) {
                        tally.accepted += 1;
                        tally.accepted_chars += chars;
                    }
                }
                MetricEvent::SuggestionRejected { id, timestamp } => {
                    let Some(&(shown_ts, _)) = shown_at.get(id) else {
                        continue;
                    };
                    if resolved.insert(id) {
                        tally.rejected += 1;
                        if timestamp.saturating_sub(shown_ts) >= REJECT_VISIBILITY_THRESHOLD_MS {
                            tally.qualifying_rejects += 1;
                        }
                    }
                }
                MetricEvent::RequestLatency { ms, served_from } => {
                    tally.requests += 1;
                    if *served_from == ServedFrom::Cache {
                        tally.cache_served += 1;
                    }
                    tally.latencies.push(*ms);
                }
            }
        }
        tally
    }
}
