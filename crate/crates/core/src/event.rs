//! Event queue and simulation clock.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    /// Availability wait over; the node snapshots its model and starts
    /// computing a gradient. Only scheduled when model math is enabled.
    UpdateStart { node: usize },
    /// Gradient applied and version incremented.
    UpdateComplete { node: usize },
    /// `from` pushes its model to a random peer. `generation` lets a
    /// scheme invalidate pending transmissions without touching the heap.
    GossipTransmit { from: usize, generation: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub seq: u64,
    pub kind: EventKind,
}

impl Eq for Event {}

impl Ord for Event {
    // Reversed so the std max-heap pops the smallest (time, seq).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SimClock {
    now: f64,
}

impl SimClock {
    pub fn now(&self) -> f64 {
        self.now
    }
}

#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
    next_seq: u64,
    clock: SimClock,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> f64 {
        self.clock.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Schedules `kind` at absolute time `time` and returns the assigned
    /// sequence number.
    pub fn schedule(&mut self, time: f64, kind: EventKind) -> Result<u64> {
        if !(time >= self.clock.now) {
            return Err(Error::Internal(format!(
                "event {kind:?} scheduled at {time} before now {}",
                self.clock.now
            )));
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Event { time, seq, kind });
        Ok(seq)
    }

    /// Pops the earliest event and advances the clock to it. `None` marks the
    /// end of the simulation.
    pub fn pop_next(&mut self) -> Option<Event> {
        let ev = self.heap.pop()?;
        debug_assert!(ev.time >= self.clock.now);
        self.clock.now = ev.time;
        Some(ev)
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|e| e.time)
    }
}
