//! Virtual time: a monotone clock and a deadline queue for simulated
//! model arrivals. All latency in replay and virtual-mode serving is
//! routed through these, so behavior is a pure function of the inputs.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use caret_core::session::TimestampMs;
use caret_core::streak::RequestId;

/// Current virtual time in milliseconds. Time only advances; a stamp from
/// the past leaves the clock where it is.
#[derive(Debug, Clone, Copy, Default)]
pub struct VirtualClock {
    now: TimestampMs,
}

impl VirtualClock {
    pub fn new() -> Self {
        VirtualClock::default()
    }

    pub fn now(&self) -> TimestampMs {
        self.now
    }

    pub fn advance_to(&mut self, at: TimestampMs) {
        self.now = self.now.max(at);
    }
}

/// Pending arrivals ordered by deadline. Equal deadlines fire in
/// scheduling order, keeping delivery order deterministic.
#[derive(Debug, Default)]
pub struct TimerQueue {
    timers: BinaryHeap<Reverse<(TimestampMs, u64, RequestId)>>,
    next_seq: u64,
}

impl TimerQueue {
    pub fn new() -> Self {
        TimerQueue::default()
    }

    pub fn schedule(&mut self, at: TimestampMs, request_id: RequestId) {
        self.timers.push(Reverse((at, self.next_seq, request_id)));
        self.next_seq += 1;
    }

    /// Removes and returns the earliest arrival due at or before `now`.
    pub fn pop_due(&mut self, now: TimestampMs) -> Option<(TimestampMs, RequestId)> {
        match self.timers.peek() {
            Some(Reverse((at, _, _))) if *at <= now => {
                let Reverse((at, _, id)) = self.timers.pop().expect("peeked entry exists");
                Some((at, id))
            }
            _ => None,
        }
    }

    pub fn next_deadline(&self) -> Option<TimestampMs> {
        self.timers.peek().map(|Reverse((at, _, _))| *at)
    }

    pub fn len(&self) -> usize {
        self.timers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timers.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: &str) -> RequestId {
        RequestId::from(s)
    }

    #[test]
    fn clock_never_rewinds() {
        let mut clock = VirtualClock::new();
        clock.advance_to(100);
        clock.advance_to(40);
        assert_eq!(clock.now(), 100);
        clock.advance_to(150);
        assert_eq!(clock.now(), 150);
    }

    #[test]
    fn timers_fire_by_deadline_then_scheduling_order() {
        let mut timers = TimerQueue::new();
        timers.schedule(200, id("b"));
        timers.schedule(100, id("a"));
        timers.schedule(200, id("c"));
        assert_eq!(timers.next_deadline(), Some(100));
        assert_eq!(timers.pop_due(250), Some((100, id("a"))));
        assert_eq!(timers.pop_due(250), Some((200, id("b"))));
        assert_eq!(timers.pop_due(250), Some((200, id("c"))));
        assert_eq!(timers.pop_due(250), None);
    }

    #[test]
    fn timers_in_the_future_stay_queued() {
        let mut timers = TimerQueue::new();
        timers.schedule(500, id("later"));
        assert_eq!(timers.pop_due(499), None);
        assert_eq!(timers.len(), 1);
        assert_eq!(timers.pop_due(500), Some((500, id("later"))));
        assert!(timers.is_empty());
    }
}
