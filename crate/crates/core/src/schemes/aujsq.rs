use std::collections::BTreeSet;

use rand::{Rng, RngCore};

use super::{AujsqPhase, Dispatcher, GapRule, Schedule};
use crate::simcore::{DispatcherEntry, Label};

/// Join-the-shortest-queue on dispatcher states, with every server updated
/// on a fixed timer of period `tau`.
#[derive(Debug, Clone)]
pub struct Aujsq {
    tau: f64,
    k: usize,
    phase: AujsqPhase,
    offsets: Vec<f64>,
    /// Number of updates scheduled so far per server.
    ticks: Vec<u64>,
    entries: Vec<DispatcherEntry>,
    /// Servers by dispatcher state, for states below `K`.
    buckets: Vec<BTreeSet<usize>>,
    open: usize,
}

impl Aujsq {
    pub fn new(servers: usize, tau: f64, k: usize, phase: AujsqPhase) -> Self {
        let mut buckets = vec![BTreeSet::new(); k];
        buckets[0].extend(0..servers);
        Self {
            tau,
            k,
            phase,
            offsets: vec![0.0; servers],
            ticks: vec![0; servers],
            entries: vec![DispatcherEntry::fresh(); servers],
            buckets,
            open: servers,
        }
    }

    pub fn offset(&self, n: usize) -> f64 {
        self.offsets[n]
    }

    fn move_state(&mut self, n: usize, from: usize, to: usize) {
        if from < self.k {
            self.buckets[from].remove(&n);
            self.open -= 1;
        }
        if to < self.k {
            self.buckets[to].insert(n);
            self.open += 1;
        }
        self.entries[n].label = if to < self.k { Label::Open } else { Label::Closed };
    }

    fn schedule_next(&mut self, n: usize, sched: &mut dyn Schedule) {
        // Offset plus a whole number of periods, so timers do not drift.
        self.ticks[n] += 1;
        let t = self.offsets[n] + self.ticks[n] as f64 * self.tau;
        self.entries[n].next_update = Some(t);
        sched.update_at(n, t);
    }
}

impl Dispatcher for Aujsq {
    fn init(&mut self, sched: &mut dyn Schedule, rng: &mut dyn RngCore) {
        let servers = self.entries.len();
        for n in 0..servers {
            self.offsets[n] = match self.phase {
                AujsqPhase::Synchronized => 0.0,
                AujsqPhase::Staggered => n as f64 * self.tau / servers as f64,
                AujsqPhase::Random => rng.random::<f64>() * self.tau,
            };
            if self.offsets[n] > 0.0 {
                self.entries[n].next_update = Some(self.offsets[n]);
                sched.update_at(n, self.offsets[n]);
            } else {
                self.schedule_next(n, sched);
            }
        }
    }

    fn select(&mut self, _t: f64, _rng: &mut dyn RngCore) -> Option<usize> {
        self.buckets.iter().find_map(|b| b.first().copied())
    }

    fn on_dispatch(&mut self, n: usize, t: f64, _sched: &mut dyn Schedule) {
        let before = self.entries[n].state();
        self.entries[n].sent_since += 1;
        self.entries[n].last_interaction = t;
        self.move_state(n, before, before + 1);
    }

    fn on_update(&mut self, n: usize, reported: usize, t: f64, sched: &mut dyn Schedule) {
        let before = self.entries[n].state();
        let e = &mut self.entries[n];
        e.last_report = reported;
        e.sent_since = 0;
        e.last_interaction = t;
        self.move_state(n, before, reported);
        self.schedule_next(n, sched);
    }

    fn serves(&self, _n: usize) -> bool {
        true
    }

    fn entry(&self, n: usize) -> &DispatcherEntry {
        &self.entries[n]
    }

    fn open_count(&self) -> usize {
        self.open
    }

    fn gap_rule(&self) -> GapRule {
        GapRule::Exactly(self.tau)
    }

    fn skip_first_gap(&self) -> bool {
        true
    }

    fn pass_delta(&self) -> Option<f64> {
        Some(1.0 / self.tau)
    }

    fn queue_limit(&self) -> usize {
        self.k
    }
}
