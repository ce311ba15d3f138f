//! Seeded discrete-event simulation of a dispatcher in front of `N` servers.
//!
//! A run is strictly sequential and bit-reproducible for a fixed config and
//! seed. Statistics are collected after the warmup; audits cover the whole
//! horizon.

mod config;
mod engine;
mod events;
mod metrics;
mod service;
mod state;
mod stats;
mod trace;

pub use config::{ServiceDist, SimConfig, TieBreak, DEFAULT_HORIZON, DEFAULT_WARMUP};
pub use engine::{run, run_many, run_traced};
pub use events::{Event, EventKind, EventQueue};
pub use metrics::{
    pass_accounting_audit, pass_bound, AuditCounts, Metrics, PassAudit, PassAuditRow, PassCheckpoint,
};
pub use service::{sample_service, ServiceSampler};
pub use state::{DispatcherEntry, Label, ServerRecord};
pub use stats::{chi_square_test, estimate, estimate_ci, ChiSquareTest, CiSummary, Estimate};
pub use trace::{TraceKind, TraceRecord};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(
        "queue limit violated at server {server} (t = {time}, queue = {queue}); recent events:\n{}",
        trace::format_records(.trace)
    )]
    QueueLimit { server: usize, time: f64, queue: usize, trace: Vec<TraceRecord> },
    #[error("need at least 2 runs for a confidence interval, got {0}")]
    TooFewRuns(usize),
    #[error("trace output failed: {0}")]
    Io(String),
}
