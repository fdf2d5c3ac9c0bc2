//! Adaptive completion cache and request scheduler.
//!
//! Both in-flight and finished predictions ("streaks") are reusable: a
//! finished prediction is served minus whatever prefix of it the user has
//! typed since, and a prediction that finishes while requests wait in the
//! queue is adapted to those requests on arrival. At most two model calls
//! are outstanding at any time; further requests queue in FIFO order.
//!
//! The scheduler is a decision-returning state machine: it never calls the
//! model itself. `submit` and `on_model_response` tell the caller which
//! request to dispatch, and the caller feeds the eventual response back in
//! through `on_model_response`. All operations for one session must be
//! applied by a single writer.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::session::{FileId, TimestampMs};

/// Client-chosen identifier for one completion request. Never reused within
/// a session.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RequestId(String);

impl RequestId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for RequestId {
    fn from(s: &str) -> Self {
        RequestId(String::from(s))
    }
}

impl From<String> for RequestId {
    fn from(s: String) -> Self {
        RequestId(s)
    }
}

impl fmt::Display for RequestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A completion request as issued by the client, carrying the document
/// context the scheduler needs to decide reuse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletionRequest {
    pub request_id: RequestId,
    pub file_id: FileId,
    /// Cursor position (character offset) at request time.
    pub anchor: usize,
    /// Document text before the cursor, truncated to the window bound.
    pub prefix_window: String,
    /// Document text after the cursor, truncated to the window bound.
    pub suffix_window: String,
    pub issued_at: TimestampMs,
}

/// A finished prediction anchored at the document position it was made for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreakEntry {
    pub origin: CompletionRequest,
    /// The model's insertion text at the anchor. May be empty; empty entries
    /// are cached but never adapt.
    pub predicted_text: String,
    /// Dispatch time; orders entries for oldest-match selection and eviction.
    pub created_at: TimestampMs,
}

#[derive(Debug, Clone)]
struct InFlight {
    request: CompletionRequest,
    created_at: TimestampMs,
    cancelled: bool,
}

/// Scheduler limits, exposed through the service config file.
#[derive(Debug, Clone)]
pub struct SchedulerConfig {
    pub max_in_flight: usize,
    pub cache_capacity: usize,
    pub cache_ttl_ms: u64,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig { max_in_flight: 2, cache_capacity: 16, cache_ttl_ms: 30_000 }
    }
}

/// What `submit` decided to do with a request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubmitDecision {
    /// Answered immediately by adapting a cached prediction; no model call.
    ServedFromCache(String),
    /// The caller must start a model call for this request now.
    Dispatched,
    /// Both slots are busy; the request waits in the queue.
    Enqueued,
}

/// What a `cancel` call changed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CancelEffect {
    /// Removed from the queue; the model never sees the request.
    Dequeued,
    /// The in-flight call keeps its slot; its response will be cached, not
    /// delivered.
    MarkedInFlight,
    /// Already cancelled or already resolved; nothing changed.
    NoEffect,
}

/// Everything a model response resolves: the origin delivery (unless the
/// request was cancelled), adaptations for requests that were waiting, and
/// the next queued request to dispatch, if any.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ResponseResolution {
    /// Text to deliver for the originating request; None when it was
    /// cancelled while in flight.
    pub origin_delivery: Option<String>,
    /// Queued requests answered by adapting the cache, in queue order.
    pub adapted: Vec<(RequestId, String)>,
    /// Queue head the caller must now dispatch.
    pub dispatch: Option<CompletionRequest>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchedulerError {
    /// The request id was already used in this session.
    DuplicateRequest,
    /// The id was never submitted.
    UnknownRequest,
    /// A response arrived for a request that is not awaiting one.
    ResponseForCompletedEntry,
}

impl fmt::Display for SchedulerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchedulerError::DuplicateRequest => f.write_str("request id already used"),
            SchedulerError::UnknownRequest => f.write_str("request id never submitted"),
            SchedulerError::ResponseForCompletedEntry => {
                f.write_str("response for a request that is not awaiting one")
            }
        }
    }
}

impl core::error::Error for SchedulerError {}

/// Per-session scheduler state: in-flight slots, FIFO queue, and the streak
/// cache of completed predictions.
#[derive(Debug, Clone, Default)]
pub struct Scheduler {
    config: SchedulerConfig,
    in_flight: Vec<InFlight>,
    queue: VecDeque<CompletionRequest>,
    cache: Vec<StreakEntry>,
    seen: BTreeSet<RequestId>,
}

impl Scheduler {
    pub fn new(config: SchedulerConfig) -> Self {
        Scheduler { config, ..Scheduler::default() }
    }

    pub fn in_flight_len(&self) -> usize {
        self.in_flight.len()
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    pub fn cache_len(&self) -> usize {
        self.cache.len()
    }

    /// Looks for the oldest completed streak whose prediction can be served
    /// at this request's cursor: same file, anchored at or before it, with
    /// the text typed since being a strict proper prefix of the prediction
    /// and everything outside that insertion unchanged (checked against the
    /// captured windows). Returns the prediction minus the typed prefix.
    pub fn try_adapt(&self, request: &CompletionRequest) -> Option<String> {
        let mut best: Option<(&StreakEntry, String)> = None;
        for entry in &self.cache {
            let Some(rest) = adapt_entry(entry, request) else { continue };
            let better = match &best {
                None => true,
                Some((b, _)) => entry_order(entry) < entry_order(b),
            };
            if better {
                best = Some((entry, rest));
            }
        }
        best.map(|(_, rest)| rest)
    }

    /// Routes a new request: cache hit, dispatch, or queue. On `Dispatched`
    /// the caller starts the model call for this request.
    pub fn submit(
        &mut self,
        now: TimestampMs,
        request: CompletionRequest,
    ) -> Result<SubmitDecision, SchedulerError> {
        if self.seen.contains(&request.request_id) {
            return Err(SchedulerError::DuplicateRequest);
        }
        self.seen.insert(request.request_id.clone());
        if let Some(text) = self.try_adapt(&request) {
            return Ok(SubmitDecision::ServedFromCache(text));
        }
        if self.in_flight.len() < self.config.max_in_flight {
            self.in_flight.push(InFlight { request, created_at: now, cancelled: false });
            Ok(SubmitDecision::Dispatched)
        } else {
            self.queue.push_back(request);
            Ok(SubmitDecision::Enqueued)
        }
    }

    /// Cancels a request. Queued requests are removed outright and never
    /// reach the model; in-flight requests keep their slot until the
    /// response arrives, which is then cached but not delivered. Anything
    /// already cancelled or already resolved is a no-op, reported as
    /// `NoEffect` so callers acknowledge each cancellation at most once.
    pub fn cancel(&mut self, request_id: &RequestId) -> Result<CancelEffect, SchedulerError> {
        if !self.seen.contains(request_id) {
            return Err(SchedulerError::UnknownRequest);
        }
        if let Some(pos) = self.queue.iter().position(|r| &r.request_id == request_id) {
            self.queue.remove(pos);
            return Ok(CancelEffect::Dequeued);
        }
        if let Some(slot) = self
            .in_flight
            .iter_mut()
            .find(|s| &s.request.request_id == request_id && !s.cancelled)
        {
            slot.cancelled = true;
            return Ok(CancelEffect::MarkedInFlight);
        }
        Ok(CancelEffect::NoEffect)
    }

    /// True when the request sits in the queue or occupies an in-flight slot.
    pub fn is_pending(&self, request_id: &RequestId) -> bool {
        self.queue.iter().any(|r| &r.request_id == request_id)
            || self.in_flight.iter().any(|s| &s.request.request_id == request_id)
    }

    /// Completes an in-flight request: the prediction joins the cache, every
    /// queued request it (or any cached entry) now satisfies is answered,
    /// and the queue head takes the freed slot. `now` stamps the dispatch
    /// time of that freed-slot request.
    pub fn on_model_response(
        &mut self,
        now: TimestampMs,
        request_id: &RequestId,
        predicted_text: &str,
    ) -> Result<ResponseResolution, SchedulerError> {
        let pos = self
            .in_flight
            .iter()
            .position(|s| &s.request.request_id == request_id)
            .ok_or_else(|| {
                if self.seen.contains(request_id) {
                    SchedulerError::ResponseForCompletedEntry
                } else {
                    SchedulerError::UnknownRequest
                }
            })?;
        let slot = self.in_flight.remove(pos);
        self.cache.push(StreakEntry {
            origin: slot.request,
            predicted_text: String::from(predicted_text),
            created_at: slot.created_at,
        });

        let mut resolution = ResponseResolution::default();
        if !slot.cancelled {
            resolution.origin_delivery = Some(String::from(predicted_text));
        }

        let mut remaining = VecDeque::with_capacity(self.queue.len());
        while let Some(waiting) = self.queue.pop_front() {
            match self.try_adapt(&waiting) {
                Some(text) => resolution.adapted.push((waiting.request_id, text)),
                None => remaining.push_back(waiting),
            }
        }
        self.queue = remaining;

        if self.in_flight.len() < self.config.max_in_flight {
            if let Some(next) = self.queue.pop_front() {
                self.in_flight.push(InFlight {
                    request: next.clone(),
                    created_at: now,
                    cancelled: false,
                });
                resolution.dispatch = Some(next);
            }
        }
        Ok(resolution)
    }

    /// Drops completed entries older than the TTL, then the oldest entries
    /// beyond capacity.
    pub fn evict(&mut self, now: TimestampMs) {
        let ttl = self.config.cache_ttl_ms;
        self.cache.retain(|e| now.saturating_sub(e.created_at) <= ttl);
        while self.cache.len() > self.config.cache_capacity {
            let oldest = self
                .cache
                .iter()
                .enumerate()
                .min_by_key(|(_, e)| entry_order(e))
                .map(|(i, _)| i)
                .expect("cache is non-empty");
            self.cache.remove(oldest);
        }
    }
}

/// Total order over cache entries: dispatch time, then request id.
fn entry_order(entry: &StreakEntry) -> (TimestampMs, &RequestId) {
    (entry.created_at, &entry.origin.request_id)
}

/// The adaptation predicate for one entry, returning the remainder text.
///
/// With entry anchor `a` and request anchor `r`, the segment typed since the
/// entry's request is `t = document[a..r)`, recovered from the tail of the
/// request's prefix window. The entry adapts when `t` is a strict proper
/// prefix of the prediction and the document outside `[a..r)` is unchanged,
/// which the windows witness as: the new prefix window equals the old one
/// extended by `t` (re-truncated), and the suffix windows are identical.
fn adapt_entry(entry: &StreakEntry, request: &CompletionRequest) -> Option<String> {
    if entry.origin.file_id != request.file_id || entry.predicted_text.is_empty() {
        return None;
    }
    if request.anchor < entry.origin.anchor {
        return None;
    }
    let typed_len = request.anchor - entry.origin.anchor;
    let req_prefix_len = request.prefix_window.chars().count();
    if typed_len > req_prefix_len {
        // The typed segment extends beyond the visible window; unverifiable.
        return None;
    }
    let typed = tail_chars(&request.prefix_window, typed_len);
    let predicted = entry.predicted_text.as_str();
    if !is_strict_proper_prefix(typed, predicted) {
        return None;
    }
    // Window bound: both windows were captured under the same bound, so the
    // old window extended by the typed text re-truncates to the new window
    // exactly when the prefix outside the insertion is unchanged.
    let mut extended = String::from(entry.origin.prefix_window.as_str());
    extended.push_str(typed);
    if tail_chars(&extended, req_prefix_len) != request.prefix_window {
        return None;
    }
    if entry.origin.suffix_window != request.suffix_window {
        return None;
    }
    Some(String::from(&predicted[typed.len()..]))
}

/// Last `n` characters of `s` as a subslice.
fn tail_chars(s: &str, n: usize) -> &str {
    let len = s.chars().count();
    if n >= len {
        return s;
    }
    let skip = len - n;
    let byte = s
        .char_indices()
        .nth(skip)
        .map(|(b, _)| b)
        .unwrap_or(s.len());
    &s[byte..]
}

fn is_strict_proper_prefix(prefix: &str, text: &str) -> bool {
    prefix.len() < text.len() && text.starts_with(prefix)
}
