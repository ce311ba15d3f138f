use serde::{Deserialize, Serialize};

/// Dispatcher-side label of a server.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Open,
    Closed,
}

/// What the dispatcher remembers about one server.
#[derive(Debug, Clone, PartialEq)]
pub struct DispatcherEntry {
    pub last_report: usize,
    pub sent_since: usize,
    pub label: Label,
    pub last_interaction: f64,
    pub next_update: Option<f64>,
}

impl DispatcherEntry {
    /// Open, empty, as if updated at time 0.
    pub fn fresh() -> Self {
        Self { last_report: 0, sent_since: 0, label: Label::Open, last_interaction: 0.0, next_update: None }
    }

    /// Pessimistic queue length: last report plus jobs sent since.
    pub fn state(&self) -> usize {
        self.last_report + self.sent_since
    }

    pub fn is_open(&self) -> bool {
        self.label == Label::Open
    }
}

/// Server-side truth.
#[derive(Debug, Clone, PartialEq)]
pub struct ServerRecord {
    pub queue: usize,
    /// Queue as seen through the non-idling coupling: only drained while the
    /// server is closed. Equal to `queue` for schemes that idle while open.
    pub virtual_queue: usize,
    pub working: bool,
    pub speed: f64,
}

impl ServerRecord {
    pub fn new(speed: f64) -> Self {
        Self { queue: 0, virtual_queue: 0, working: false, speed }
    }
}
