use rand::RngCore;

use super::{Dispatcher, GapRule, OpenPool, Schedule, Selection};
use crate::simcore::{DispatcherEntry, Label};

/// Server phases of the K = 2 cool-down scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtensionPhase {
    /// Open and idle, known empty.
    A1,
    /// Closed for `tau1`, working; ends silently.
    B1,
    /// Open and idle, at most one job present.
    A2,
    /// Closed for `tau2`, working; ends with an update.
    B2,
    /// Closed for `tau3`, working; ends with an update.
    B3,
}

#[derive(Debug, Clone)]
pub struct Extension {
    tau1: f64,
    tau2: f64,
    tau3: f64,
    phases: Vec<ExtensionPhase>,
    entries: Vec<DispatcherEntry>,
    pool: OpenPool,
}

/// Histogram slots for updates ending B2 and B3.
pub const FROM_B2: usize = 0;
pub const FROM_B3: usize = 1;

impl Extension {
    pub fn new(servers: usize, tau1: f64, tau2: f64, tau3: f64, selection: Selection) -> Self {
        Self {
            tau1,
            tau2,
            tau3,
            phases: vec![ExtensionPhase::A1; servers],
            entries: vec![DispatcherEntry::fresh(); servers],
            pool: OpenPool::full(selection, servers),
        }
    }

    pub fn phase(&self, n: usize) -> ExtensionPhase {
        self.phases[n]
    }

    fn enter(&mut self, n: usize, phase: ExtensionPhase, t: f64, sched: &mut dyn Schedule) {
        use ExtensionPhase::*;
        self.phases[n] = phase;
        let e = &mut self.entries[n];
        e.next_update = None;
        match phase {
            A1 | A2 => {
                e.label = Label::Open;
                self.pool.insert(n, t);
            }
            B1 => {
                e.label = Label::Closed;
                self.pool.remove(n);
                sched.phase_end_at(n, t + self.tau1);
            }
            B2 | B3 => {
                let end = t + if phase == B2 { self.tau2 } else { self.tau3 };
                e.label = Label::Closed;
                e.next_update = Some(end);
                self.pool.remove(n);
                sched.update_at(n, end);
            }
        }
    }
}

impl Dispatcher for Extension {
    fn select(&mut self, _t: f64, rng: &mut dyn RngCore) -> Option<usize> {
        self.pool.pick(rng)
    }

    fn on_dispatch(&mut self, n: usize, t: f64, sched: &mut dyn Schedule) {
        let e = &mut self.entries[n];
        e.sent_since += 1;
        e.last_interaction = t;
        match self.phases[n] {
            ExtensionPhase::A1 => self.enter(n, ExtensionPhase::B1, t, sched),
            ExtensionPhase::A2 => self.enter(n, ExtensionPhase::B2, t, sched),
            p => unreachable!("dispatch to closed phase {p:?}"),
        }
    }

    fn on_update(&mut self, n: usize, reported: usize, t: f64, sched: &mut dyn Schedule) {
        let e = &mut self.entries[n];
        e.last_report = reported;
        e.sent_since = 0;
        e.last_interaction = t;
        let next = match reported {
            0 => ExtensionPhase::A1,
            1 => ExtensionPhase::B1,
            _ => ExtensionPhase::B3,
        };
        self.enter(n, next, t, sched);
    }

    fn on_phase_end(&mut self, n: usize, t: f64, sched: &mut dyn Schedule) {
        debug_assert_eq!(self.phases[n], ExtensionPhase::B1);
        self.enter(n, ExtensionPhase::A2, t, sched);
    }

    fn serves(&self, n: usize) -> bool {
        !self.entries[n].is_open()
    }

    fn entry(&self, n: usize) -> &DispatcherEntry {
        &self.entries[n]
    }

    fn open_count(&self) -> usize {
        self.pool.len()
    }

    fn update_origin(&self, n: usize) -> usize {
        match self.phases[n] {
            ExtensionPhase::B3 => FROM_B3,
            _ => FROM_B2,
        }
    }

    fn origins(&self) -> usize {
        2
    }

    fn gap_rule(&self) -> GapRule {
        GapRule::AtLeast(self.tau2.min(self.tau3))
    }

    fn pass_delta(&self) -> Option<f64> {
        None
    }

    fn queue_limit(&self) -> usize {
        2
    }
}
