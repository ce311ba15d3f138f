use serde::Serialize;

use crate::analytic::{throughput_bound, BoundParams};

/// Violation counters. Every entry is zero in a correct run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AuditCounts {
    /// Admissions that found the queue at `K` or more.
    pub queue_limit: u64,
    /// Jobs sent to a server labeled closed.
    pub closed_dispatch: u64,
    /// Times the dispatcher state fell below the actual queue.
    pub soundness: u64,
    /// Open servers whose dispatcher state differs from the queue, for
    /// schemes that idle while open.
    pub exact_view: u64,
    /// Times the coupled virtual queue fell below the actual queue.
    pub coupling: u64,
    /// Inter-update gaps breaking the scheme's spacing rule.
    pub update_gap: u64,
    /// Servers that sent more updates than the spacing rule allows.
    pub message_budget: u64,
    /// Checkpoints where admissions exceeded the pass-accounting bound.
    pub pass_accounting: u64,
}

impl AuditCounts {
    pub fn total(&self) -> u64 {
        self.queue_limit
            + self.closed_dispatch
            + self.soundness
            + self.exact_view
            + self.coupling
            + self.update_gap
            + self.message_budget
            + self.pass_accounting
    }

    pub fn clean(&self) -> bool {
        self.total() == 0
    }
}

/// Cumulative counts at an audit time, measured from time 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PassCheckpoint {
    pub time: f64,
    pub admitted: u64,
    pub updates: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub servers: usize,
    pub queue_limit: usize,
    /// Length of the statistics window.
    pub window: f64,
    pub arrivals: u64,
    pub admitted: u64,
    pub blocked: u64,
    /// Update exchanges in the window.
    pub updates: u64,
    /// Update exchanges over the whole horizon.
    pub total_updates: u64,
    pub total_admitted: u64,
    /// Time integral of the open-server count over the window.
    pub area_open: f64,
    /// Sum over admitted jobs of the queue found at the chosen server.
    pub jobs_ahead_sum: u64,
    /// Time spent with `n` open servers, `n = 0..=N`.
    pub open_time: Vec<f64>,
    /// Open-server counts at regularly spaced snapshots.
    pub open_snapshots: Vec<u64>,
    /// Reported queue lengths, one histogram per update origin.
    pub reports: Vec<Vec<u64>>,
    pub audits: AuditCounts,
    pub checkpoints: Vec<PassCheckpoint>,
    /// Whether the pass-accounting audit applied (exponential service only).
    pub pass_audited: bool,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

impl Metrics {
    pub fn throughput(&self) -> f64 {
        ratio(self.admitted as f64, self.window * self.servers as f64)
    }

    pub fn blocking(&self) -> f64 {
        ratio(self.blocked as f64, self.arrivals as f64)
    }

    pub fn message_rate(&self) -> f64 {
        ratio(self.updates as f64, self.window * self.servers as f64)
    }

    pub fn messages_per_job(&self) -> f64 {
        ratio(self.updates as f64, self.admitted as f64)
    }

    pub fn jobs_ahead_mean(&self) -> f64 {
        ratio(self.jobs_ahead_sum as f64, self.admitted as f64)
    }

    pub fn mean_open_fraction(&self) -> f64 {
        ratio(self.area_open, self.window * self.servers as f64)
    }

    /// Time-weighted distribution of the open-server count.
    pub fn open_distribution(&self) -> Vec<f64> {
        let total: f64 = self.open_time.iter().sum();
        self.open_time.iter().map(|t| ratio(*t, total)).collect()
    }

    /// Normalized report histogram for one origin.
    pub fn report_distribution(&self, origin: usize) -> Vec<f64> {
        let h = &self.reports[origin];
        let total: u64 = h.iter().sum();
        h.iter().map(|c| ratio(*c as f64, total as f64)).collect()
    }
}

/// `2 K N + lambda*(delta, K) N T0`.
pub fn pass_bound(params: BoundParams, servers: usize, t0: f64) -> f64 {
    let n = servers as f64;
    2.0 * params.k() as f64 * n + throughput_bound(params) * n * t0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PassAuditRow {
    pub time: f64,
    pub admitted: u64,
    pub bound: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassAudit {
    pub rows: Vec<PassAuditRow>,
}

impl PassAudit {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.slack >= 0.0)
    }
}

/// Checks the admission count at every checkpoint against the pass bound.
pub fn pass_accounting_audit(metrics: &Metrics, params: BoundParams) -> PassAudit {
    PassAudit {
        rows: metrics
            .checkpoints
            .iter()
            .map(|c| {
                let bound = pass_bound(params, metrics.servers, c.time);
                PassAuditRow { time: c.time, admitted: c.admitted, bound, slack: bound - c.admitted as f64 }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_at_zero_time_is_the_slack_term() {
        let p = BoundParams::new(1.0, 2).unwrap();
        assert_eq!(pass_bound(p, 100, 0.0), 400.0);
        let b = pass_bound(p, 100, 1e4);
        assert!((b - (400.0 + 0.896_361_76 * 1e6)).abs() < 1.0);
    }

    #[test]
    fn empty_metrics_give_zero_ratios() {
        let m = Metrics {
            servers: 1,
            queue_limit: 1,
            window: 0.0,
            arrivals: 0,
            admitted: 0,
            blocked: 0,
            updates: 0,
            total_updates: 0,
            total_admitted: 0,
            area_open: 0.0,
            jobs_ahead_sum: 0,
            open_time: vec![0.0, 0.0],
            open_snapshots: vec![0, 0],
            reports: vec![vec![0, 0]],
            audits: AuditCounts::default(),
            checkpoints: vec![],
            pass_audited: false,
        };
        assert_eq!(m.throughput(), 0.0);
        assert_eq!(m.blocking(), 0.0);
        assert_eq!(m.open_distribution(), vec![0.0, 0.0]);
    }
}
