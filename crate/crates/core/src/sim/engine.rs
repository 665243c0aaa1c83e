use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;

use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::harness::{ConfigError, ExperimentConfig};
use crate::metrics::finalize_session;
use crate::model::{Job, ServiceClass, SessionRecord, SessionState};
use crate::policy::{
    current_state_decide, threshold_decide, window_boundary_reconfigure, AdmissionKind,
    AllocationVector, ClassView, Decision, QueueStateView, SessionProgress, Threshold,
    ThresholdVector,
};
use crate::queueing::TrafficEstimate;

use super::profiler::{profiler_close_window, raw_estimates, WindowStats};
use super::rng::{stream, Purpose, RNG_ALGORITHM};
use super::traffic::{draw_interarrival, exp_draw, TrafficSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    SessionArrival { class: usize, epoch: u64 },
    JobArrival { session: u64 },
    JobCompletion { server: usize },
    MigrationDone { server: usize },
    WindowBoundary,
    LoadSwap,
    SampleTick,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::SessionArrival { .. } => "session_arrival",
            EventKind::JobArrival { .. } => "job_arrival",
            EventKind::JobCompletion { .. } => "job_completion",
            EventKind::MigrationDone { .. } => "migration_done",
            EventKind::WindowBoundary => "window_boundary",
            EventKind::LoadSwap => "load_swap",
            EventKind::SampleTick => "sample_tick",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Event {
    pub time: f64,
    pub seq: u64,
    pub kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Reversed so that `BinaryHeap` pops the earliest (time, seq) first.
impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub time: f64,
    pub kind: &'static str,
    pub class: Option<usize>,
    pub session_id: Option<u64>,
    pub queue_length: usize,
    pub busy_servers: usize,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<u64>| v.map_or_else(|| "-".to_string(), |v| v.to_string());
        write!(
            f,
            "{:.6}\t{}\t{}\t{}\t{}\t{}",
            self.time,
            self.kind,
            opt(self.class.map(|c| c as u64 + 1)),
            opt(self.session_id),
            self.queue_length,
            self.busy_servers
        )
    }
}

pub const TRACE_HEADER: &str = "time\tkind\tclass\tsession_id\tqueue_length\tbusy_servers";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompletedSession {
    pub session_id: u64,
    pub class: usize,
    pub arrival_time: f64,
    pub completion_time: f64,
    pub mean_wait: f64,
    pub net_revenue: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rejection {
    pub time: f64,
    pub class: usize,
    pub session_id: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowRecord {
    pub start: f64,
    pub end: f64,
    pub raw: Vec<TrafficEstimate>,
    pub published: Vec<TrafficEstimate>,
    pub allocation: Vec<u32>,
    pub thresholds: Vec<Threshold>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueueSnapshot {
    pub time: f64,
    pub queue_lengths: Vec<usize>,
    pub active_sessions: Vec<usize>,
    pub allocation: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Check non-idling, FIFO, conservation and session integrity at every event.
    pub check_invariants: bool,
    pub trace: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            check_invariants: true,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub seed: u64,
    pub rng_algorithm: &'static str,
    pub duration: f64,
    pub classes: Vec<ServiceClass>,
    /// Every session, in arrival order; the index is the session id.
    pub sessions: Vec<SessionRecord>,
    pub completions: Vec<CompletedSession>,
    pub rejections: Vec<Rejection>,
    pub job_arrivals: Vec<u64>,
    pub jobs_completed: Vec<u64>,
    pub windows: Vec<WindowRecord>,
    pub snapshots: Vec<QueueSnapshot>,
    pub invariant_violations: Vec<String>,
    pub events_processed: u64,
    #[serde(skip)]
    pub trace: Vec<TraceRecord>,
}

impl RunResult {
    pub fn in_flight(&self) -> impl Iterator<Item = &SessionRecord> {
        self.sessions
            .iter()
            .filter(|s| s.state == SessionState::Active)
    }
}

pub fn run_simulation(config: &ExperimentConfig, seed: u64) -> Result<RunResult, ConfigError> {
    run_simulation_with(config, seed, RunOptions::default())
}

pub fn run_simulation_with(
    config: &ExperimentConfig,
    seed: u64,
    options: RunOptions,
) -> Result<RunResult, ConfigError> {
    config.validate()?;
    let mut sim = Simulator::new(config, seed, options);
    sim.run();
    Ok(sim.finish())
}

/// The nominal traffic parameters, as an estimate.
pub fn nominal_estimates(classes: &[ServiceClass], traffic: &[TrafficSpec]) -> Vec<TrafficEstimate> {
    classes
        .iter()
        .zip(traffic)
        .enumerate()
        .map(|(i, (c, t))| TrafficEstimate {
            class: i,
            lambda_hat: t.delta * f64::from(c.k),
            b_hat: t.service_mean,
            ca2_hat: t.job_interarrival.scv(),
            cs2_hat: 1.0,
            delta_hat: t.delta,
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct QueuedJob {
    job: Job,
    seq: u64,
}

#[derive(Debug, Clone)]
struct Server {
    pool: usize,
    job: Option<QueuedJob>,
    destination: Option<usize>,
    migrating: bool,
}

impl Server {
    fn available(&self) -> bool {
        self.job.is_none() && !self.migrating
    }
}

#[derive(Debug, Clone, Default)]
struct Pool {
    queue: VecDeque<QueuedJob>,
    next_seq: u64,
    last_started: Option<u64>,
}

struct ClassRng {
    sessions: ChaCha8Rng,
    jobs: ChaCha8Rng,
    service: ChaCha8Rng,
}

struct Simulator<'a> {
    cfg: &'a ExperimentConfig,
    options: RunOptions,
    seed: u64,
    classes: Vec<ServiceClass>,
    traffic: Vec<TrafficSpec>,
    rngs: Vec<ClassRng>,

    now: f64,
    seq: u64,
    heap: BinaryHeap<Event>,
    arrival_epoch: Vec<u64>,

    pools: Vec<Pool>,
    servers: Vec<Server>,
    allocation: AllocationVector,
    thresholds: ThresholdVector,
    estimates: Vec<TrafficEstimate>,

    window: WindowStats,
    window_events: u32,
    last_job_arrival: Vec<Option<f64>>,

    sessions: Vec<SessionRecord>,
    jobs_emitted: Vec<u32>,
    active: Vec<Vec<u64>>,

    completions: Vec<CompletedSession>,
    rejections: Vec<Rejection>,
    job_arrivals: Vec<u64>,
    jobs_completed: Vec<u64>,
    windows: Vec<WindowRecord>,
    snapshots: Vec<QueueSnapshot>,
    violations: Vec<String>,
    events: u64,
    trace: Vec<TraceRecord>,
}

const MAX_VIOLATIONS: usize = 100;

impl<'a> Simulator<'a> {
    fn new(cfg: &'a ExperimentConfig, seed: u64, options: RunOptions) -> Self {
        let classes = cfg.service_classes();
        let traffic = cfg.traffic();
        let m = classes.len();
        let rngs = (0..m)
            .map(|i| ClassRng {
                sessions: stream(seed, i, Purpose::SessionArrivals),
                jobs: stream(seed, i, Purpose::JobInterarrivals),
                service: stream(seed, i, Purpose::ServiceTimes),
            })
            .collect();
        let estimates = nominal_estimates(&classes, &traffic);
        let (allocation, thresholds) = window_boundary_reconfigure(
            &estimates,
            &classes,
            cfg.cluster.servers,
            &cfg.policy,
        );
        let mut servers = Vec::with_capacity(cfg.cluster.servers as usize);
        for (pool, &n) in allocation.as_slice().iter().enumerate() {
            for _ in 0..n {
                servers.push(Server {
                    pool,
                    job: None,
                    destination: None,
                    migrating: false,
                });
            }
        }
        Self {
            cfg,
            options,
            seed,
            rngs,
            now: 0.0,
            seq: 0,
            heap: BinaryHeap::new(),
            arrival_epoch: vec![0; m],
            pools: vec![Pool::default(); m],
            servers,
            allocation,
            thresholds,
            estimates,
            window: WindowStats::new(m, 0.0),
            window_events: 0,
            last_job_arrival: vec![None; m],
            sessions: Vec::new(),
            jobs_emitted: Vec::new(),
            active: vec![Vec::new(); m],
            completions: Vec::new(),
            rejections: Vec::new(),
            job_arrivals: vec![0; m],
            jobs_completed: vec![0; m],
            windows: Vec::new(),
            snapshots: Vec::new(),
            violations: Vec::new(),
            events: 0,
            trace: Vec::new(),
            classes,
            traffic,
        }
    }

    fn schedule(&mut self, time: f64, kind: EventKind) {
        self.seq += 1;
        self.heap.push(Event {
            time,
            seq: self.seq,
            kind,
        });
    }

    fn schedule_session_arrival(&mut self, class: usize) {
        let delta = self.traffic[class].delta;
        if delta > 0.0 {
            let gap = exp_draw(1.0 / delta, &mut self.rngs[class].sessions);
            let epoch = self.arrival_epoch[class];
            self.schedule(self.now + gap, EventKind::SessionArrival { class, epoch });
        }
    }

    fn run(&mut self) {
        let duration = self.cfg.run.duration;
        for class in 0..self.classes.len() {
            self.schedule_session_arrival(class);
        }
        if let Some(swap) = self.cfg.swap {
            self.schedule(swap.period, EventKind::LoadSwap);
        }
        self.schedule(self.cfg.run.sample_period, EventKind::SampleTick);

        while let Some(ev) = self.heap.pop() {
            if ev.time > duration {
                break;
            }
            debug_assert!(ev.time >= self.now);
            self.now = ev.time;
            self.events += 1;
            match ev.kind {
                EventKind::SessionArrival { class, epoch } => {
                    if epoch == self.arrival_epoch[class] {
                        self.on_session_arrival(class);
                    }
                }
                EventKind::JobArrival { session } => self.on_job_arrival(session),
                EventKind::JobCompletion { server } => self.on_job_completion(server),
                EventKind::MigrationDone { server } => self.on_migration_done(server),
                EventKind::LoadSwap => self.apply_load_swap(),
                EventKind::SampleTick => self.on_sample_tick(),
                EventKind::WindowBoundary => {}
            }
            if self.options.check_invariants {
                self.check_invariants();
            }
        }
    }

    fn record(&mut self, kind: EventKind, class: Option<usize>, session: Option<u64>) {
        if !self.options.trace {
            return;
        }
        let (queue_length, busy_servers) = match class {
            Some(c) => (
                self.pools[c].queue.len(),
                self.servers
                    .iter()
                    .filter(|s| s.pool == c && s.job.is_some())
                    .count(),
            ),
            None => (
                self.pools.iter().map(|p| p.queue.len()).sum(),
                self.servers.iter().filter(|s| s.job.is_some()).count(),
            ),
        };
        self.trace.push(TraceRecord {
            time: self.now,
            kind: kind.name(),
            class,
            session_id: session,
            queue_length,
            busy_servers,
        });
    }

    fn view(&self) -> QueueStateView {
        QueueStateView {
            classes: (0..self.classes.len())
                .map(|c| ClassView {
                    sessions: self.active[c]
                        .iter()
                        .map(|&id| {
                            let s = &self.sessions[id as usize];
                            SessionProgress {
                                jobs_completed: s.jobs_completed,
                                cumulative_wait: s.cumulative_wait,
                            }
                        })
                        .collect(),
                    queue_length: self.pools[c].queue.len(),
                    servers: self.allocation.get(c),
                })
                .collect(),
        }
    }

    fn on_session_arrival(&mut self, class: usize) {
        self.schedule_session_arrival(class);
        self.window.classes[class].session_arrivals += 1;

        let decision = match self.cfg.policy.admission {
            AdmissionKind::AdmitAll => Decision::accept(),
            AdmissionKind::Threshold | AdmissionKind::OracleThreshold => {
                threshold_decide(self.active[class].len(), self.thresholds.limits[class])
            }
            AdmissionKind::CurrentState => {
                current_state_decide(&self.view(), class, &self.estimates, &self.classes)
            }
        };

        let id = self.sessions.len() as u64;
        let mut record = SessionRecord::new(id, class, self.now);
        match decision {
            Decision::Accept { transfer } => {
                if let Some(t) = transfer {
                    self.allocation.transfer(t.from, t.to);
                    self.rebalance();
                }
                self.sessions.push(record);
                self.jobs_emitted.push(0);
                self.active[class].push(id);
                let gap = draw_interarrival(
                    &self.traffic[class].job_interarrival,
                    &mut self.rngs[class].jobs,
                );
                self.schedule(self.now + gap, EventKind::JobArrival { session: id });
            }
            Decision::Reject => {
                record.state = SessionState::Rejected;
                self.sessions.push(record);
                self.jobs_emitted.push(0);
                self.rejections.push(Rejection {
                    time: self.now,
                    class,
                    session_id: id,
                });
            }
        }
        self.record(
            EventKind::SessionArrival { class, epoch: 0 },
            Some(class),
            Some(id),
        );
        self.count_session_event();
    }

    fn on_job_arrival(&mut self, session: u64) {
        let idx = session as usize;
        let class = self.sessions[idx].class;
        self.jobs_emitted[idx] += 1;
        self.job_arrivals[class] += 1;

        let stats = &mut self.window.classes[class];
        stats.job_arrivals += 1;
        if let Some(last) = self.last_job_arrival[class] {
            stats.interarrivals.push(self.now - last);
        }
        self.last_job_arrival[class] = Some(self.now);

        if self.jobs_emitted[idx] < self.classes[class].k {
            let gap = draw_interarrival(
                &self.traffic[class].job_interarrival,
                &mut self.rngs[class].jobs,
            );
            self.schedule(self.now + gap, EventKind::JobArrival { session });
        }

        let demand = exp_draw(self.traffic[class].service_mean, &mut self.rngs[class].service)
            + self.cfg.cluster.job_overhead;
        let pool = &mut self.pools[class];
        let queued = QueuedJob {
            job: Job {
                session_id: session,
                class,
                arrival_time: self.now,
                service_demand: demand,
                wait: 0.0,
            },
            seq: pool.next_seq,
        };
        pool.next_seq += 1;
        pool.queue.push_back(queued);
        if let Some(server) = self
            .servers
            .iter()
            .position(|s| s.pool == class && s.available())
        {
            self.start_next(server);
        }
        self.record(EventKind::JobArrival { session }, Some(class), Some(session));
    }

    /// Hands the head of the server's pool queue to an available server.
    fn start_next(&mut self, server: usize) {
        let pool_idx = self.servers[server].pool;
        let pool = &mut self.pools[pool_idx];
        let Some(mut next) = pool.queue.pop_front() else {
            return;
        };
        if self.options.check_invariants {
            if let Some(last) = pool.last_started {
                if next.seq <= last {
                    self.violations.push(format!(
                        "t={}: FIFO violated in pool {}: started job {} after {}",
                        self.now, pool_idx, next.seq, last
                    ));
                }
            }
        }
        pool.last_started = Some(next.seq);
        next.job.wait = self.now - next.job.arrival_time;
        let done = self.now + next.job.service_demand;
        self.servers[server].job = Some(next);
        self.schedule(done, EventKind::JobCompletion { server });
    }

    fn on_job_completion(&mut self, server: usize) {
        let Some(done) = self.servers[server].job.take() else {
            self.violation(format!("completion on idle server {server}"));
            return;
        };
        let job = done.job;
        let class = job.class;
        self.jobs_completed[class] += 1;
        self.window.classes[class]
            .service
            .push(job.service_demand);

        let k = self.classes[class].k;
        let idx = job.session_id as usize;
        let finished = {
            let s = &mut self.sessions[idx];
            s.cumulative_wait += job.wait;
            s.jobs_completed += 1;
            s.jobs_completed
        };
        if finished > k {
            self.violation(format!(
                "session {} completed {} jobs, more than k = {}",
                job.session_id, finished, k
            ));
        }
        if finished == k {
            self.finish_session(job.session_id);
        }

        match self.servers[server].destination {
            Some(dest) => self.move_server(server, dest),
            None => self.start_next(server),
        }
        self.record(
            EventKind::JobCompletion { server },
            Some(class),
            Some(job.session_id),
        );
        if finished == k {
            self.count_session_event();
        }
    }

    fn finish_session(&mut self, id: u64) {
        let s = &mut self.sessions[id as usize];
        s.state = SessionState::Completed;
        let class = &self.classes[s.class];
        let mean_wait = s.cumulative_wait / f64::from(class.k);
        let net = finalize_session(s, class);
        self.completions.push(CompletedSession {
            session_id: id,
            class: s.class,
            arrival_time: s.arrival_time,
            completion_time: self.now,
            mean_wait,
            net_revenue: net,
        });
        let active = &mut self.active[s.class];
        if let Some(pos) = active.iter().position(|&a| a == id) {
            active.remove(pos);
        }
    }

    fn move_server(&mut self, server: usize, dest: usize) {
        let delay = self.cfg.cluster.switch_delay;
        let s = &mut self.servers[server];
        s.destination = None;
        s.pool = dest;
        if delay > 0.0 {
            s.migrating = true;
            self.schedule(self.now + delay, EventKind::MigrationDone { server });
        } else {
            self.start_next(server);
        }
    }

    fn on_migration_done(&mut self, server: usize) {
        self.servers[server].migrating = false;
        match self.servers[server].destination {
            Some(dest) => self.move_server(server, dest),
            None => self.start_next(server),
        }
        let pool = self.servers[server].pool;
        self.record(EventKind::MigrationDone { server }, Some(pool), None);
    }

    /// Brings pool memberships in line with the allocation vector. Available
    /// servers move at once; busy ones move when their current job completes.
    fn rebalance(&mut self) {
        for s in &mut self.servers {
            if !s.migrating {
                s.destination = None;
            }
        }
        let m = self.classes.len();
        let mut count = vec![0u32; m];
        for s in &self.servers {
            count[s.destination.unwrap_or(s.pool)] += 1;
        }
        for dest in 0..m {
            while count[dest] < self.allocation.get(dest) {
                let Some(from) = (0..m).find(|&p| count[p] > self.allocation.get(p)) else {
                    break;
                };
                let pick = |pred: &dyn Fn(&Server) -> bool| {
                    self.servers
                        .iter()
                        .position(|s| s.destination.unwrap_or(s.pool) == from && pred(s))
                };
                let server = pick(&|s| s.available())
                    .or_else(|| pick(&|s| s.job.is_some() && s.destination.is_none()))
                    .or_else(|| pick(&|s| s.migrating && s.destination.is_none()))
                    .expect("surplus pool has a server");
                count[from] -= 1;
                count[dest] += 1;
                if self.servers[server].available() {
                    self.move_server(server, dest);
                } else {
                    self.servers[server].destination = Some(dest);
                }
            }
        }
    }

    fn count_session_event(&mut self) {
        self.window_events += 1;
        if self.window_events >= self.cfg.policy.window_events {
            self.close_window();
        }
    }

    fn close_window(&mut self) {
        self.window.end = self.now;
        let raw = if self.window.is_empty() {
            self.estimates.clone()
        } else {
            raw_estimates(&self.window, &self.estimates)
        };
        self.estimates =
            profiler_close_window(&self.window, &self.estimates, self.cfg.policy.ewma_beta);
        if self.cfg.policy.admission != AdmissionKind::OracleThreshold {
            let (allocation, thresholds) = window_boundary_reconfigure(
                &self.estimates,
                &self.classes,
                self.cfg.cluster.servers,
                &self.cfg.policy,
            );
            self.allocation = allocation;
            self.thresholds = thresholds;
            self.rebalance();
        }
        self.windows.push(WindowRecord {
            start: self.window.start,
            end: self.window.end,
            raw,
            published: self.estimates.clone(),
            allocation: self.allocation.as_slice().to_vec(),
            thresholds: self.thresholds.limits.clone(),
        });
        self.record(EventKind::WindowBoundary, None, None);
        self.window = WindowStats::new(self.classes.len(), self.now);
        self.window_events = 0;
    }

    fn apply_load_swap(&mut self) {
        let Some(swap) = self.cfg.swap else { return };
        let (a, b) = swap.classes;
        let da = self.traffic[a].delta;
        self.traffic[a].delta = self.traffic[b].delta;
        self.traffic[b].delta = da;
        // Pending arrivals were drawn at the old rates; redraw them.
        for c in [a, b] {
            self.arrival_epoch[c] += 1;
            self.schedule_session_arrival(c);
        }
        self.schedule(self.now + swap.period, EventKind::LoadSwap);
        if self.cfg.policy.admission == AdmissionKind::OracleThreshold {
            let truth = nominal_estimates(&self.classes, &self.traffic);
            let (allocation, thresholds) = window_boundary_reconfigure(
                &truth,
                &self.classes,
                self.cfg.cluster.servers,
                &self.cfg.policy,
            );
            self.allocation = allocation;
            self.thresholds = thresholds;
            self.rebalance();
        }
        self.record(EventKind::LoadSwap, None, None);
    }

    fn on_sample_tick(&mut self) {
        self.snapshots.push(QueueSnapshot {
            time: self.now,
            queue_lengths: self.pools.iter().map(|p| p.queue.len()).collect(),
            active_sessions: self.active.iter().map(Vec::len).collect(),
            allocation: self.allocation.as_slice().to_vec(),
        });
        self.schedule(self.now + self.cfg.run.sample_period, EventKind::SampleTick);
        self.record(EventKind::SampleTick, None, None);
    }

    fn violation(&mut self, msg: String) {
        if self.violations.len() < MAX_VIOLATIONS {
            self.violations.push(msg);
        }
    }

    fn check_invariants(&mut self) {
        let m = self.classes.len();
        for p in 0..m {
            if !self.pools[p].queue.is_empty()
                && self
                    .servers
                    .iter()
                    .any(|s| s.pool == p && s.available() && s.destination.is_none())
            {
                self.violation(format!(
                    "t={}: pool {} idles with {} queued jobs",
                    self.now,
                    p,
                    self.pools[p].queue.len()
                ));
            }
        }
        let mut in_service = vec![0u64; m];
        for s in &self.servers {
            if let Some(j) = &s.job {
                in_service[j.job.class] += 1;
            }
        }
        for c in 0..m {
            let queued = self.pools[c].queue.len() as u64;
            if self.job_arrivals[c] != self.jobs_completed[c] + queued + in_service[c] {
                self.violation(format!(
                    "t={}: class {} conservation: {} emitted != {} done + {} queued + {} in service",
                    self.now, c, self.job_arrivals[c], self.jobs_completed[c], queued, in_service[c]
                ));
            }
        }
        if self.allocation.total() != self.cfg.cluster.servers {
            self.violation(format!(
                "t={}: allocation sums to {}",
                self.now,
                self.allocation.total()
            ));
        }
    }

    fn finish(mut self) -> RunResult {
        if self.options.check_invariants {
            for (i, s) in self.sessions.iter().enumerate() {
                let k = self.classes[s.class].k;
                let ok = match s.state {
                    SessionState::Completed => s.jobs_completed == k && self.jobs_emitted[i] == k,
                    SessionState::Active => s.jobs_completed < k && self.jobs_emitted[i] <= k,
                    SessionState::Rejected => s.jobs_completed == 0 && self.jobs_emitted[i] == 0,
                };
                if !ok && self.violations.len() < MAX_VIOLATIONS {
                    self.violations.push(format!(
                        "session {i} ({:?}) integrity: {} completed, {} emitted, k = {k}",
                        s.state, s.jobs_completed, self.jobs_emitted[i]
                    ));
                }
            }
        }
        RunResult {
            seed: self.seed,
            rng_algorithm: RNG_ALGORITHM,
            duration: self.cfg.run.duration,
            classes: self.classes,
            sessions: self.sessions,
            completions: self.completions,
            rejections: self.rejections,
            job_arrivals: self.job_arrivals,
            jobs_completed: self.jobs_completed,
            windows: self.windows,
            snapshots: self.snapshots,
            invariant_violations: self.violations,
            events_processed: self.events,
            trace: self.trace,
        }
    }
}
