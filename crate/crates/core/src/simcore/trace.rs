use std::collections::VecDeque;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Arrival,
    Dispatch,
    Block,
    Completion,
    Update,
    PhaseEnd,
}

impl fmt::Display for TraceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Arrival => "arrival",
            Self::Dispatch => "dispatch",
            Self::Block => "block",
            Self::Completion => "completion",
            Self::Update => "update",
            Self::PhaseEnd => "phase_end",
        })
    }
}

/// One trace line: time, kind, server (or `-`) and an integer payload
/// (queue length after the event, or the reported value for updates).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub time: f64,
    pub kind: TraceKind,
    pub server: Option<usize>,
    pub payload: i64,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.server {
            Some(s) => write!(f, "{:.9} {} {} {}", self.time, self.kind, s, self.payload),
            None => write!(f, "{:.9} {} - {}", self.time, self.kind, self.payload),
        }
    }
}

pub(crate) fn format_records(records: &[TraceRecord]) -> String {
    records.iter().map(|r| format!("  {r}\n")).collect()
}

/// Keeps the most recent records for error reports.
#[derive(Debug)]
pub(crate) struct Ring {
    buf: VecDeque<TraceRecord>,
    cap: usize,
}

impl Ring {
    pub fn new(cap: usize) -> Self {
        Self { buf: VecDeque::with_capacity(cap), cap }
    }

    pub fn push(&mut self, r: TraceRecord) {
        if self.buf.len() == self.cap {
            self.buf.pop_front();
        }
        self.buf.push_back(r);
    }

    pub fn snapshot(&self) -> Vec<TraceRecord> {
        self.buf.iter().copied().collect()
    }
}
