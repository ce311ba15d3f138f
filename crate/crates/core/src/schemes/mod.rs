//! Dispatcher policies. Each policy is a state machine over the dispatcher's
//! per-server memory, driven by the simulation engine.

mod aujsq;
mod baseline;
mod extension;
mod overlay;
mod pool;

pub use aujsq::Aujsq;
pub use baseline::{Baseline, Variant};
pub use extension::{Extension, ExtensionPhase};
pub use overlay::{analytic_overlay, AnalyticOverlay};
pub use pool::OpenPool;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::simcore::DispatcherEntry;

/// Which open server receives an arrival.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Uniform over open servers.
    #[default]
    Random,
    /// Open server with the oldest interaction, ties to the smallest index.
    Fcfs,
}

/// Offsets of the periodic update timers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AujsqPhase {
    Synchronized,
    /// Server `n` is offset by `n tau / N`.
    #[default]
    Staggered,
    /// Independent uniform offsets on `[0, tau)`.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyConfig {
    Baseline {
        tau: f64,
        k: usize,
        #[serde(default)]
        selection: Selection,
    },
    NonIdling {
        tau: f64,
        k: usize,
        #[serde(default)]
        selection: Selection,
    },
    WorkConserving {
        tau: f64,
        k: usize,
        #[serde(default)]
        selection: Selection,
    },
    Aujsq {
        tau: f64,
        k: usize,
        #[serde(default)]
        phase: AujsqPhase,
    },
    Extension {
        tau1: f64,
        tau2: f64,
        tau3: f64,
        #[serde(default)]
        selection: Selection,
    },
}

impl PolicyConfig {
    pub fn baseline(tau: f64, k: usize) -> Self {
        Self::Baseline { tau, k, selection: Selection::Random }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Baseline { .. } => "baseline",
            Self::NonIdling { .. } => "non_idling",
            Self::WorkConserving { .. } => "work_conserving",
            Self::Aujsq { .. } => "aujsq",
            Self::Extension { .. } => "extension",
        }
    }

    pub fn k(&self) -> usize {
        match *self {
            Self::Baseline { k, .. }
            | Self::NonIdling { k, .. }
            | Self::WorkConserving { k, .. }
            | Self::Aujsq { k, .. } => k,
            Self::Extension { .. } => 2,
        }
    }

    /// Update interval, where the scheme has a single one.
    pub fn tau(&self) -> Option<f64> {
        match *self {
            Self::Baseline { tau, .. }
            | Self::NonIdling { tau, .. }
            | Self::WorkConserving { tau, .. }
            | Self::Aujsq { tau, .. } => Some(tau),
            Self::Extension { .. } => None,
        }
    }

    /// Same policy with a different update interval (ignored for the
    /// extension).
    pub fn with_tau(&self, new_tau: f64) -> Self {
        let mut c = self.clone();
        match &mut c {
            Self::Baseline { tau, .. }
            | Self::NonIdling { tau, .. }
            | Self::WorkConserving { tau, .. }
            | Self::Aujsq { tau, .. } => *tau = new_tau,
            Self::Extension { .. } => {}
        }
        c
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(format!("{name} must be positive, got {v}"))
            }
        };
        match *self {
            Self::Baseline { tau, k, .. }
            | Self::NonIdling { tau, k, .. }
            | Self::WorkConserving { tau, k, .. }
            | Self::Aujsq { tau, k, .. } => {
                positive("tau", tau)?;
                if k == 0 {
                    return Err("queue limit K must be at least 1".into());
                }
                Ok(())
            }
            Self::Extension { tau1, tau2, tau3, .. } => {
                if !(tau1 >= 0.0 && tau1.is_finite()) {
                    return Err(format!("tau1 must be nonnegative, got {tau1}"));
                }
                positive("tau2", tau2)?;
                positive("tau3", tau3)
            }
        }
    }

    pub fn build(&self, servers: usize) -> Result<Box<dyn Dispatcher>, String> {
        self.validate()?;
        Ok(match *self {
            Self::Baseline { tau, k, selection } => {
                Box::new(Baseline::new(Variant::Baseline, servers, tau, k, selection))
            }
            Self::NonIdling { tau, k, selection } => {
                Box::new(Baseline::new(Variant::NonIdling, servers, tau, k, selection))
            }
            Self::WorkConserving { tau, k, selection } => {
                Box::new(Baseline::new(Variant::WorkConserving, servers, tau, k, selection))
            }
            Self::Aujsq { tau, k, phase } => Box::new(Aujsq::new(servers, tau, k, phase)),
            Self::Extension { tau1, tau2, tau3, selection } => {
                Box::new(Extension::new(servers, tau1, tau2, tau3, selection))
            }
        })
    }
}

/// Where update reports come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportSource {
    /// The server's actual queue.
    Actual,
    /// The coupled queue that only drains while the server is closed.
    Virtual,
}

/// Required spacing of consecutive updates at one server.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GapRule {
    AtLeast(f64),
    Exactly(f64),
}

impl GapRule {
    pub fn spacing(&self) -> f64 {
        match *self {
            Self::AtLeast(g) | Self::Exactly(g) => g,
        }
    }

    pub fn allows(&self, gap: f64, now: f64) -> bool {
        let tol = 1e-9 * now.max(1.0);
        match *self {
            Self::AtLeast(g) => gap >= g - tol,
            Self::Exactly(g) => (gap - g).abs() <= tol,
        }
    }
}

/// Event scheduling handle given to policies.
pub trait Schedule {
    fn update_at(&mut self, server: usize, time: f64);
    fn phase_end_at(&mut self, server: usize, time: f64);
}

/// A dispatcher policy.
pub trait Dispatcher: Send {
    /// Called once at time 0, before any event.
    fn init(&mut self, _sched: &mut dyn Schedule, _rng: &mut dyn RngCore) {}

    /// Picks a server for an arrival at `t`, or `None` to block it.
    fn select(&mut self, t: f64, rng: &mut dyn RngCore) -> Option<usize>;

    fn on_dispatch(&mut self, server: usize, t: f64, sched: &mut dyn Schedule);

    fn on_update(&mut self, server: usize, reported: usize, t: f64, sched: &mut dyn Schedule);

    /// End of a silent (message-free) phase.
    fn on_phase_end(&mut self, _server: usize, _t: f64, _sched: &mut dyn Schedule) {}

    /// Whether the server currently works on its queue.
    fn serves(&self, server: usize) -> bool;

    fn entry(&self, server: usize) -> &DispatcherEntry;

    fn is_open(&self, server: usize) -> bool {
        self.entry(server).is_open()
    }

    fn open_count(&self) -> usize;

    fn reports(&self) -> ReportSource {
        ReportSource::Actual
    }

    /// Histogram slot for the update about to fire at `server`.
    fn update_origin(&self, _server: usize) -> usize {
        0
    }

    fn origins(&self) -> usize {
        1
    }

    fn gap_rule(&self) -> GapRule;

    /// Whether the first update of each server is exempt from the gap rule.
    fn skip_first_gap(&self) -> bool {
        false
    }

    /// Whether the dispatcher state of an open server equals the reported
    /// queue at all times.
    fn exact_view(&self) -> bool {
        false
    }

    /// Message rate for the pass-accounting bound; `None` means use the
    /// realized rate.
    fn pass_delta(&self) -> Option<f64>;

    fn queue_limit(&self) -> usize;
}
