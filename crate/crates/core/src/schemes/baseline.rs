use rand::RngCore;

use super::{Dispatcher, GapRule, OpenPool, ReportSource, Schedule, Selection};
use crate::simcore::{DispatcherEntry, Label};

/// The three members of the baseline family. They share the dispatcher
/// logic and differ in when servers work and what they report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Servers work only while closed and report their queue.
    Baseline,
    /// Servers always work but report the queue they would have had under
    /// the baseline.
    NonIdling,
    /// Servers always work and report their actual queue.
    WorkConserving,
}

/// A server is closed once `K` jobs may be present and is updated `tau`
/// later; an update reporting fewer than `K` jobs reopens it.
#[derive(Debug, Clone)]
pub struct Baseline {
    variant: Variant,
    tau: f64,
    k: usize,
    entries: Vec<DispatcherEntry>,
    pool: OpenPool,
}

impl Baseline {
    pub fn new(variant: Variant, servers: usize, tau: f64, k: usize, selection: Selection) -> Self {
        Self {
            variant,
            tau,
            k,
            entries: vec![DispatcherEntry::fresh(); servers],
            pool: OpenPool::full(selection, servers),
        }
    }

    fn close(&mut self, n: usize, t: f64, sched: &mut dyn Schedule) {
        let e = &mut self.entries[n];
        e.label = Label::Closed;
        e.next_update = Some(t + self.tau);
        self.pool.remove(n);
        sched.update_at(n, t + self.tau);
    }
}

impl Dispatcher for Baseline {
    fn select(&mut self, _t: f64, rng: &mut dyn RngCore) -> Option<usize> {
        self.pool.pick(rng)
    }

    fn on_dispatch(&mut self, n: usize, t: f64, sched: &mut dyn Schedule) {
        let e = &mut self.entries[n];
        e.sent_since += 1;
        e.last_interaction = t;
        if e.state() >= self.k {
            self.close(n, t, sched);
        } else {
            self.pool.insert(n, t);
        }
    }

    fn on_update(&mut self, n: usize, reported: usize, t: f64, sched: &mut dyn Schedule) {
        let e = &mut self.entries[n];
        e.last_report = reported;
        e.sent_since = 0;
        e.last_interaction = t;
        e.next_update = None;
        if reported < self.k {
            e.label = Label::Open;
            self.pool.insert(n, t);
        } else {
            self.close(n, t, sched);
        }
    }

    fn serves(&self, n: usize) -> bool {
        match self.variant {
            Variant::Baseline => !self.entries[n].is_open(),
            Variant::NonIdling | Variant::WorkConserving => true,
        }
    }

    fn entry(&self, n: usize) -> &DispatcherEntry {
        &self.entries[n]
    }

    fn open_count(&self) -> usize {
        self.pool.len()
    }

    fn reports(&self) -> ReportSource {
        match self.variant {
            Variant::NonIdling => ReportSource::Virtual,
            Variant::Baseline | Variant::WorkConserving => ReportSource::Actual,
        }
    }

    fn gap_rule(&self) -> GapRule {
        GapRule::AtLeast(self.tau)
    }

    fn exact_view(&self) -> bool {
        self.variant != Variant::WorkConserving
    }

    fn pass_delta(&self) -> Option<f64> {
        Some(1.0 / self.tau)
    }

    fn queue_limit(&self) -> usize {
        self.k
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[derive(Default)]
    struct Recorder(Vec<(usize, f64)>);

    impl Schedule for Recorder {
        fn update_at(&mut self, server: usize, time: f64) {
            self.0.push((server, time));
        }
        fn phase_end_at(&mut self, _: usize, _: f64) {
            unreachable!()
        }
    }

    #[test]
    fn k1_closes_on_every_dispatch() {
        let mut b = Baseline::new(Variant::Baseline, 2, 0.5, 1, Selection::Random);
        let mut s = Recorder::default();
        b.on_dispatch(1, 2.0, &mut s);
        assert_eq!(s.0, vec![(1, 2.5)]);
        assert!(!b.is_open(1) && b.serves(1) && !b.serves(0));
        assert_eq!(b.open_count(), 1);
    }

    #[test]
    fn all_closed_blocks() {
        let mut b = Baseline::new(Variant::Baseline, 2, 1.0, 1, Selection::Fcfs);
        let mut s = Recorder::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        b.on_dispatch(0, 0.1, &mut s);
        b.on_dispatch(1, 0.2, &mut s);
        assert_eq!(b.select(0.3, &mut rng), None);
    }

    #[test]
    fn report_of_k_keeps_server_closed() {
        let mut b = Baseline::new(Variant::Baseline, 1, 1.0, 2, Selection::Random);
        let mut s = Recorder::default();
        b.on_dispatch(0, 0.0, &mut s);
        assert!(b.is_open(0));
        b.on_dispatch(0, 0.2, &mut s);
        assert!(!b.is_open(0));
        b.on_update(0, 2, 1.2, &mut s);
        assert!(!b.is_open(0));
        assert_eq!(s.0, vec![(0, 1.2), (0, 2.2)]);
        b.on_update(0, 0, 2.2, &mut s);
        assert!(b.is_open(0));
        assert_eq!(b.entry(0).state(), 0);
    }

    #[test]
    fn fcfs_picks_least_recent_interaction() {
        let mut b = Baseline::new(Variant::Baseline, 3, 1.0, 3, Selection::Fcfs);
        let mut s = Recorder::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(b.select(0.0, &mut rng), Some(0));
        b.on_dispatch(0, 0.5, &mut s);
        assert_eq!(b.select(0.6, &mut rng), Some(1));
        b.on_dispatch(1, 0.6, &mut s);
        b.on_dispatch(2, 0.7, &mut s);
        assert_eq!(b.select(0.8, &mut rng), Some(0));
    }
}
