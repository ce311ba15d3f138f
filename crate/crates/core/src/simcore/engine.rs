use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::events::NO_SERVER;
use super::service::exponential;
use super::trace::Ring;
use super::{
    AuditCounts, EventKind, EventQueue, Metrics, PassCheckpoint, ServerRecord, ServiceDist, ServiceSampler,
    SimConfig, SimError, TraceKind, TraceRecord,
};
use crate::analytic::{throughput_bound, BoundParams};
use crate::schemes::{Dispatcher, ReportSource};

const ARRIVAL_STREAM: u64 = 0;
const SELECTION_STREAM: u64 = 1;
const SERVICE_STREAM: u64 = 2;
const PHASE_STREAM: u64 = 3;
const RING_CAPACITY: usize = 64;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Runs one simulation.
pub fn run(config: &SimConfig) -> Result<Metrics, SimError> {
    Engine::new(config, None)?.run()
}

/// Runs the same configuration under each seed, in parallel. Results are
/// returned in seed order.
pub fn run_many(config: &SimConfig, seeds: &[u64]) -> Result<Vec<Metrics>, SimError> {
    seeds.par_iter().map(|&seed| run(&config.clone().with_seed(seed))).collect()
}

/// Runs one simulation and writes every dispatcher-relevant event to `out`,
/// one line per event.
pub fn run_traced(config: &SimConfig, out: &mut dyn Write) -> Result<Metrics, SimError> {
    Engine::new(config, Some(out))?.run()
}

#[derive(Debug, Clone, Default)]
struct Job {
    running: bool,
    end: f64,
    remaining: Option<f64>,
    generation: u64,
}

enum Service {
    /// Superposed exponential potential-completion stream over all servers.
    Ticks { total_rate: f64, cumulative: Option<Vec<f64>> },
    /// Explicit per-job completions.
    Jobs { sampler: ServiceSampler, jobs: Vec<Job> },
}

struct Engine<'c, 'w> {
    cfg: &'c SimConfig,
    k: usize,
    servers: Vec<ServerRecord>,
    policy: Box<dyn Dispatcher>,
    source: ReportSource,
    events: EventQueue,
    rng_arrival: ChaCha8Rng,
    rng_select: ChaCha8Rng,
    rng_service: ChaCha8Rng,
    service: Service,
    m: Metrics,
    warm: f64,
    open: usize,
    clock: f64,
    last_update: Vec<Option<f64>>,
    update_counts: Vec<u64>,
    checkpoint_times: [f64; 3],
    next_checkpoint: usize,
    ring: Ring,
    sink: Option<&'w mut dyn Write>,
}

impl<'c, 'w> Engine<'c, 'w> {
    fn new(cfg: &'c SimConfig, sink: Option<&'w mut dyn Write>) -> Result<Self, SimError> {
        cfg.validate()?;
        let policy = cfg.policy.build(cfg.servers).map_err(SimError::Config)?;
        Self::with_policy(cfg, policy, sink)
    }

    fn with_policy(
        cfg: &'c SimConfig,
        policy: Box<dyn Dispatcher>,
        sink: Option<&'w mut dyn Write>,
    ) -> Result<Self, SimError> {
        let n = cfg.servers;
        let k = policy.queue_limit();
        let speeds = match &cfg.service {
            ServiceDist::Speeds { speeds } => speeds.clone(),
            _ => vec![1.0; n],
        };
        let service = match &cfg.service {
            ServiceDist::Exponential => Service::Ticks { total_rate: n as f64, cumulative: None },
            ServiceDist::Speeds { speeds } => Service::Ticks {
                total_rate: speeds.iter().sum(),
                cumulative: Some(
                    speeds
                        .iter()
                        .scan(0.0, |acc, s| {
                            *acc += s;
                            Some(*acc)
                        })
                        .collect(),
                ),
            },
            ServiceDist::Gamma { .. } => {
                Service::Jobs { sampler: ServiceSampler::new(&cfg.service)?, jobs: vec![Job::default(); n] }
            }
        };
        let h = cfg.horizon;
        let m = Metrics {
            servers: n,
            queue_limit: k,
            window: h - cfg.warmup_time(),
            arrivals: 0,
            admitted: 0,
            blocked: 0,
            updates: 0,
            total_updates: 0,
            total_admitted: 0,
            area_open: 0.0,
            jobs_ahead_sum: 0,
            open_time: vec![0.0; n + 1],
            open_snapshots: vec![0; n + 1],
            reports: vec![vec![0; k + 1]; policy.origins()],
            audits: AuditCounts::default(),
            checkpoints: Vec::with_capacity(3),
            pass_audited: false,
        };
        Ok(Self {
            cfg,
            k,
            servers: speeds.into_iter().map(ServerRecord::new).collect(),
            source: policy.reports(),
            policy,
            events: EventQueue::new(cfg.tiebreak),
            rng_arrival: stream(cfg.seed, ARRIVAL_STREAM),
            rng_select: stream(cfg.seed, SELECTION_STREAM),
            rng_service: stream(cfg.seed, SERVICE_STREAM),
            service,
            m,
            warm: cfg.warmup_time(),
            open: 0,
            clock: 0.0,
            last_update: vec![None; n],
            update_counts: vec![0; n],
            checkpoint_times: [h / 10.0, h / 2.0, h],
            next_checkpoint: 0,
            ring: Ring::new(RING_CAPACITY),
            sink,
        })
    }

    fn run(mut self) -> Result<Metrics, SimError> {
        let horizon = self.cfg.horizon;
        let mut rng_phase = stream(self.cfg.seed, PHASE_STREAM);
        self.policy.init(&mut self.events, &mut rng_phase);
        self.open = self.policy.open_count();
        self.schedule_arrival(0.0);
        if let Service::Ticks { total_rate, .. } = self.service {
            let t = exponential(&mut self.rng_service, total_rate);
            self.events.push(t, NO_SERVER, EventKind::Tick);
        }
        if let Some(dt) = self.cfg.snapshot_interval {
            self.events.push(self.warm + dt, NO_SERVER, EventKind::Snapshot);
        }

        while let Some(ev) = self.events.pop() {
            if ev.time > horizon {
                break;
            }
            self.advance(ev.time);
            let t = ev.time;
            let s = ev.server as usize;
            match ev.kind {
                EventKind::Arrival => self.on_arrival(t)?,
                EventKind::Tick => self.on_tick(t)?,
                EventKind::Completion(generation) => self.on_completion(s, generation, t)?,
                EventKind::Update => self.on_update(s, t)?,
                EventKind::PhaseEnd => {
                    self.policy.on_phase_end(s, t, &mut self.events);
                    let q = self.servers[s].queue;
                    self.record(t, TraceKind::PhaseEnd, Some(s), q as i64)?;
                    self.after_change(s, t);
                }
                EventKind::Snapshot => {
                    self.m.open_snapshots[self.open] += 1;
                    let dt = self.cfg.snapshot_interval.unwrap_or(f64::INFINITY);
                    self.events.push(t + dt, NO_SERVER, EventKind::Snapshot);
                }
            }
        }
        self.advance(horizon);
        while self.next_checkpoint < self.checkpoint_times.len() {
            self.take_checkpoint();
        }
        self.final_audits();
        if let Some(out) = self.sink.as_mut() {
            out.flush().map_err(|e| SimError::Io(e.to_string()))?;
        }
        Ok(self.m)
    }

    fn schedule_arrival(&mut self, now: f64) {
        let rate = self.cfg.lambda * self.cfg.servers as f64;
        let t = now + exponential(&mut self.rng_arrival, rate);
        self.events.push(t, NO_SERVER, EventKind::Arrival);
    }

    fn take_checkpoint(&mut self) {
        self.m.checkpoints.push(PassCheckpoint {
            time: self.checkpoint_times[self.next_checkpoint],
            admitted: self.m.total_admitted,
            updates: self.m.total_updates,
        });
        self.next_checkpoint += 1;
    }

    /// Moves the clock to `t`, accumulating open-time statistics.
    fn advance(&mut self, t: f64) {
        while self.next_checkpoint < self.checkpoint_times.len()
            && self.checkpoint_times[self.next_checkpoint] < t
        {
            self.take_checkpoint();
        }
        let from = self.clock.max(self.warm);
        if t > from {
            let dt = t - from;
            self.m.open_time[self.open] += dt;
            self.m.area_open += dt * self.open as f64;
        }
        self.clock = t;
    }

    fn record(
        &mut self,
        time: f64,
        kind: TraceKind,
        server: Option<usize>,
        payload: i64,
    ) -> Result<(), SimError> {
        let r = TraceRecord { time, kind, server, payload };
        self.ring.push(r);
        if let Some(out) = self.sink.as_mut() {
            writeln!(out, "{r}").map_err(|e| SimError::Io(e.to_string()))?;
        }
        Ok(())
    }

    fn on_arrival(&mut self, t: f64) -> Result<(), SimError> {
        self.schedule_arrival(t);
        let in_window = t >= self.warm;
        if in_window {
            self.m.arrivals += 1;
        }
        let Some(s) = self.policy.select(t, &mut self.rng_select) else {
            if in_window {
                self.m.blocked += 1;
            }
            return self.record(t, TraceKind::Block, None, 0);
        };
        if !self.policy.is_open(s) {
            self.m.audits.closed_dispatch += 1;
        }
        let q = self.servers[s].queue;
        if q >= self.k {
            self.m.audits.queue_limit += 1;
            self.record(t, TraceKind::Dispatch, Some(s), q as i64 + 1)?;
            return Err(SimError::QueueLimit { server: s, time: t, queue: q, trace: self.ring.snapshot() });
        }
        if in_window {
            self.m.admitted += 1;
            self.m.jobs_ahead_sum += q as u64;
        }
        self.m.total_admitted += 1;
        let rec = &mut self.servers[s];
        rec.queue += 1;
        rec.virtual_queue += 1;
        self.policy.on_dispatch(s, t, &mut self.events);
        self.record(t, TraceKind::Dispatch, Some(s), (q + 1) as i64)?;
        self.after_change(s, t);
        Ok(())
    }

    fn on_tick(&mut self, t: f64) -> Result<(), SimError> {
        let Service::Ticks { total_rate, ref cumulative } = self.service else {
            unreachable!("ticks only run for exponential service")
        };
        let s = match cumulative {
            None => self.rng_service.random_range(0..self.servers.len()),
            Some(c) => {
                let u = self.rng_service.random::<f64>() * total_rate;
                c.partition_point(|&x| x <= u).min(c.len() - 1)
            }
        };
        let next = t + exponential(&mut self.rng_service, total_rate);
        self.events.push(next, NO_SERVER, EventKind::Tick);

        let serving = self.policy.serves(s);
        let closed = !self.policy.is_open(s);
        let rec = &mut self.servers[s];
        let completed = serving && rec.queue > 0;
        if completed {
            rec.queue -= 1;
        }
        if closed && rec.virtual_queue > 0 {
            rec.virtual_queue -= 1;
        }
        if self.source == ReportSource::Virtual && rec.virtual_queue < rec.queue {
            self.m.audits.coupling += 1;
        }
        rec.working = serving && rec.queue > 0;
        if completed {
            let q = rec.queue;
            self.record(t, TraceKind::Completion, Some(s), q as i64)?;
        }
        Ok(())
    }

    fn on_completion(&mut self, s: usize, generation: u64, t: f64) -> Result<(), SimError> {
        let Service::Jobs { ref mut jobs, .. } = self.service else {
            unreachable!("completions only run for explicit service")
        };
        let job = &mut jobs[s];
        if !job.running || job.generation != generation {
            return Ok(());
        }
        job.running = false;
        job.remaining = None;
        let closed = !self.policy.is_open(s);
        let rec = &mut self.servers[s];
        rec.queue -= 1;
        if closed && rec.virtual_queue > 0 {
            rec.virtual_queue -= 1;
        }
        let q = rec.queue;
        self.record(t, TraceKind::Completion, Some(s), q as i64)?;
        self.after_change(s, t);
        Ok(())
    }

    fn on_update(&mut self, s: usize, t: f64) -> Result<(), SimError> {
        let rule = self.policy.gap_rule();
        let first = self.last_update[s].is_none();
        if !(first && self.policy.skip_first_gap()) {
            let prev = self.last_update[s].unwrap_or(0.0);
            if !rule.allows(t - prev, t) {
                self.m.audits.update_gap += 1;
            }
        }
        self.last_update[s] = Some(t);
        self.update_counts[s] += 1;

        let reported = self.reported(s);
        let origin = self.policy.update_origin(s);
        self.m.total_updates += 1;
        if t >= self.warm {
            self.m.updates += 1;
            self.m.reports[origin][reported.min(self.k)] += 1;
        }
        self.policy.on_update(s, reported, t, &mut self.events);
        self.record(t, TraceKind::Update, Some(s), reported as i64)?;
        self.after_change(s, t);
        Ok(())
    }

    fn reported(&self, s: usize) -> usize {
        match self.source {
            ReportSource::Actual => self.servers[s].queue,
            ReportSource::Virtual => self.servers[s].virtual_queue,
        }
    }

    /// Bookkeeping after the dispatcher or the server at `s` changed.
    fn after_change(&mut self, s: usize, t: f64) {
        self.open = self.policy.open_count();
        let entry = self.policy.entry(s);
        let q = self.servers[s].queue;
        if entry.state() < q {
            self.m.audits.soundness += 1;
        }
        if self.policy.exact_view() && entry.is_open() && entry.state() != self.reported(s) {
            self.m.audits.exact_view += 1;
        }
        if self.source == ReportSource::Virtual && self.servers[s].virtual_queue < q {
            self.m.audits.coupling += 1;
        }
        let serving = self.policy.serves(s);
        self.servers[s].working = serving && q > 0;
        self.sync_job(s, t, serving && q > 0);
    }

    /// Starts, resumes or pauses the job in service at `s`.
    fn sync_job(&mut self, s: usize, t: f64, want: bool) {
        let Service::Jobs { ref sampler, ref mut jobs } = self.service else {
            return;
        };
        let job = &mut jobs[s];
        if want && !job.running {
            let work = match job.remaining.take() {
                Some(w) => w,
                None => sampler.sample(&mut self.rng_service) / self.servers[s].speed,
            };
            job.running = true;
            job.end = t + work;
            job.generation += 1;
            self.events.push(job.end, s as u32, EventKind::Completion(job.generation));
        } else if !want && job.running {
            job.remaining = Some((job.end - t).max(0.0));
            job.running = false;
            job.generation += 1;
        }
    }

    fn final_audits(&mut self) {
        let horizon = self.cfg.horizon;
        let spacing = self.policy.gap_rule().spacing();
        let allowed = (horizon / spacing + 1e-9).floor() as u64 + 1;
        self.m.audits.message_budget = self.update_counts.iter().filter(|&&c| c > allowed).count() as u64;

        // The pass bound assumes exponential service requirements; gamma
        // services can legitimately exceed it.
        self.m.pass_audited = self.cfg.service.is_exponential();
        if !self.m.pass_audited {
            return;
        }
        let n = self.cfg.servers as f64;
        let mu_bar = self.cfg.service.mean_speed(self.cfg.servers);
        let k = self.k;
        for c in &self.m.checkpoints {
            let delta = self.policy.pass_delta().unwrap_or(c.updates as f64 / (n * c.time));
            let bound = 2.0 * (k as f64) * n
                + match BoundParams::with_speed(delta, k, mu_bar) {
                    Ok(p) => throughput_bound(p) * n * c.time,
                    Err(_) => 0.0,
                };
            if c.admitted as f64 > bound {
                self.m.audits.pass_accounting += 1;
            }
        }
    }
}
