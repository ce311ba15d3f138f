use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::TieBreak;
use crate::schemes::Schedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Update,
    PhaseEnd,
    Arrival,
    /// Potential completion from the superposed exponential stream.
    Tick,
    /// Scheduled completion of a job with the given service generation.
    Completion(u64),
    Snapshot,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    rank: u8,
    pub server: u32,
    seq: u64,
    pub kind: EventKind,
}

impl Eq for Event {}

impl Ord for Event {
    // Reversed so that BinaryHeap pops the earliest event.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.rank.cmp(&self.rank))
            .then(other.server.cmp(&self.server))
            .then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Event calendar. Ties on time are broken by kind, then server index, then
/// insertion order.
#[derive(Debug)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
    seq: u64,
    tiebreak: TieBreak,
}

pub(crate) const NO_SERVER: u32 = u32::MAX;

impl EventQueue {
    pub fn new(tiebreak: TieBreak) -> Self {
        Self { heap: BinaryHeap::new(), seq: 0, tiebreak }
    }

    fn rank(&self, kind: EventKind) -> u8 {
        let (update, arrival) = match self.tiebreak {
            TieBreak::UpdatesFirst => (0, 2),
            TieBreak::ArrivalsFirst => (2, 0),
        };
        match kind {
            EventKind::Update => update,
            EventKind::PhaseEnd => 1,
            EventKind::Arrival => arrival,
            EventKind::Tick | EventKind::Completion(_) => 3,
            EventKind::Snapshot => 4,
        }
    }

    pub fn push(&mut self, time: f64, server: u32, kind: EventKind) {
        let rank = self.rank(kind);
        self.seq += 1;
        self.heap.push(Event { time, rank, server, seq: self.seq, kind });
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.heap.pop()
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|e| e.time)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

impl Schedule for EventQueue {
    fn update_at(&mut self, server: usize, time: f64) {
        self.push(time, server as u32, EventKind::Update);
    }

    fn phase_end_at(&mut self, server: usize, time: f64) {
        self.push(time, server as u32, EventKind::PhaseEnd);
    }
}
