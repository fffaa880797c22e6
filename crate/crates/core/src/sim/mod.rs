//! Discrete-time simulator producing stamped traces.
//!
//! One round is one microsecond of real time. Each round has three phases:
//!
//! 1. Every message whose delivery time has come is received, one `recv`
//!    event per message.
//! 2. Each process sends with probability `alpha * 1e-6` to a uniformly
//!    chosen other process.
//! 3. Each process ticks its physical clock by 1 µs unless it stalls
//!    (probability `stall_prob`) or the tick would push it more than
//!    `epsilon_time` ahead of the slowest clock at the start of the round.
//!
//! Alongside the replay clock each event carries a vector clock and the
//! largest physical time in its causal past, which serve as ground truth for
//! tests and analyses.

mod fixtures;
mod metrics;
mod trace_io;

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::{self, ClockConfig, ClockError, ProcessId, Timestamp};
use crate::codec::{CodecError, CodecLayout};

pub use fixtures::{figure2_trace, FIGURE2_LABELS};
pub use metrics::{compute_metrics, MetricsAccumulator, RunMetrics};
pub use trace_io::{read_trace, read_trace_from, write_trace, write_trace_to, SCHEMA_VERSION};

pub const DEFAULT_STALL_PROB: f64 = 0.1;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Clock(#[from] ClockError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("trace has no events")]
    EmptyTrace,
    #[error("trace schema error: {0}")]
    Schema(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Simulation parameters. Times are in microseconds, `alpha` in messages per
/// second per process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub clock: ClockConfig,
    pub alpha: f64,
    pub delta: u64,
    #[serde(default)]
    pub jitter: u64,
    pub duration: u64,
    pub seed: u64,
    #[serde(default = "default_stall_prob")]
    pub stall_prob: f64,
}

fn default_stall_prob() -> f64 {
    DEFAULT_STALL_PROB
}

impl SimConfig {
    pub fn new(clock: ClockConfig, alpha: f64, delta: u64, duration: u64, seed: u64) -> Self {
        SimConfig {
            clock,
            alpha,
            delta,
            jitter: 0,
            duration,
            seed,
            stall_prob: DEFAULT_STALL_PROB,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(SimError::Config(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if self.alpha * 1e-6 > 1.0 {
            return Err(SimError::Config(format!(
                "alpha {} exceeds one message per microsecond",
                self.alpha
            )));
        }
        if self.delta < 1 {
            return Err(SimError::Config("delta must be >= 1 us".into()));
        }
        if self.duration == 0 {
            return Err(SimError::Config("duration must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.stall_prob) {
            return Err(SimError::Config(format!(
                "stall_prob must be in [0, 1), got {}",
                self.stall_prob
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Local,
    Send,
    Recv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub event_id: u64,
    pub proc: ProcessId,
    pub kind: EventKind,
    /// Local physical time, µs.
    pub pt: u64,
    /// Global simulation time, µs.
    pub real_time: u64,
    pub msg_id: Option<u64>,
    pub repcl: Timestamp,
    pub oracle_vc: Vec<u64>,
    /// Largest physical time anywhere in this event's causal past, µs.
    pub oracle_mpt: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl EventRecord {
    /// Ground-truth happened-before from the vector clocks.
    pub fn happened_before(&self, other: &EventRecord) -> bool {
        self.event_id != other.event_id
            && self.oracle_vc[self.proc] <= other.oracle_vc[self.proc]
    }

    pub fn concurrent_with(&self, other: &EventRecord) -> bool {
        !self.happened_before(other) && !other.happened_before(self)
    }

    /// The label if one is set, otherwise the event id.
    pub fn display_name(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| self.event_id.to_string())
    }
}

/// A simulated run: its configuration, events in real-time order, summary
/// metrics and the codec layout used for the word form.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub config: SimConfig,
    pub layout: CodecLayout,
    pub metrics: RunMetrics,
    pub events: Vec<EventRecord>,
}

impl Trace {
    pub fn clock(&self) -> &ClockConfig {
        &self.config.clock
    }

    /// Index of the event with the given id. Ids are dense in traces produced
    /// here, but files may come from elsewhere.
    pub fn position(&self, event_id: u64) -> Option<usize> {
        let i = event_id as usize;
        if self.events.get(i).is_some_and(|e| e.event_id == event_id) {
            return Some(i);
        }
        self.events.iter().position(|e| e.event_id == event_id)
    }

    /// Resolves an event by label or by numeric id.
    pub fn lookup(&self, name: &str) -> Option<usize> {
        if let Some(i) = self
            .events
            .iter()
            .position(|e| e.label.as_deref() == Some(name))
        {
            return Some(i);
        }
        name.parse().ok().and_then(|id| self.position(id))
    }

    /// The events whose real time is below `real_time`. Any such prefix is
    /// closed under happened-before.
    pub fn truncate_real_time(&self, real_time: u64) -> Trace {
        let events: Vec<_> = self
            .events
            .iter()
            .filter(|e| e.real_time < real_time)
            .cloned()
            .collect();
        let mut metrics = compute_metrics(&events, &self.layout).unwrap_or_default();
        metrics.max_observed_skew = self.metrics.max_observed_skew;
        Trace {
            config: self.config.clone(),
            layout: self.layout,
            metrics,
            events,
        }
    }
}

struct InFlight {
    dest: ProcessId,
    ts: Timestamp,
    vc: Vec<u64>,
    mpt: u64,
}

struct Proc {
    pt: u64,
    ts: Timestamp,
    vc: Vec<u64>,
    mpt: u64,
    next_send: u64,
    next_stall: u64,
}

/// Round of the next success of a per-round Bernoulli trial, given that the
/// current round is `now` and has already been decided.
fn next_hit(geo: &Option<Geometric>, rng: &mut ChaCha8Rng, now: u64) -> u64 {
    match geo {
        Some(g) => now.saturating_add(1).saturating_add(g.sample(rng)),
        None => u64::MAX,
    }
}

fn geometric(p: f64) -> Result<Option<Geometric>, SimError> {
    if p <= 0.0 {
        return Ok(None);
    }
    Geometric::new(p)
        .map(Some)
        .map_err(|e| SimError::Config(format!("probability {p}: {e}")))
}

/// One event as the simulator produces it, borrowed from simulator state.
#[derive(Debug, Clone, Copy)]
pub struct EventView<'a> {
    pub event_id: u64,
    pub proc: ProcessId,
    pub kind: EventKind,
    pub pt: u64,
    pub real_time: u64,
    pub msg_id: Option<u64>,
    pub repcl: &'a Timestamp,
    pub oracle_vc: &'a [u64],
    pub oracle_mpt: u64,
}

impl EventView<'_> {
    pub fn to_record(&self) -> EventRecord {
        EventRecord {
            event_id: self.event_id,
            proc: self.proc,
            kind: self.kind,
            pt: self.pt,
            real_time: self.real_time,
            msg_id: self.msg_id,
            repcl: self.repcl.clone(),
            oracle_vc: self.oracle_vc.to_vec(),
            oracle_mpt: self.oracle_mpt,
            label: None,
        }
    }
}

/// Whole-run facts only the simulator can see.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimOutcome {
    pub events: u64,
    pub max_observed_skew: u64,
}

/// Runs the simulation, handing each event to `sink` as it happens.
/// Deterministic for a fixed configuration.
pub fn simulate<F>(config: &SimConfig, mut sink: F) -> Result<SimOutcome, SimError>
where
    F: FnMut(EventView<'_>),
{
    config.validate()?;
    let cfg = config.clock;
    let n = cfg.n();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let send_geo = if n > 1 {
        geometric(config.alpha * 1e-6)?
    } else {
        None
    };
    let stall_geo = geometric(config.stall_prob)?;

    let mut procs: Vec<Proc> = (0..n)
        .map(|p| Proc {
            pt: 0,
            ts: Timestamp::initial(p),
            vc: vec![0; n],
            mpt: 0,
            next_send: u64::MAX,
            next_stall: u64::MAX,
        })
        .collect();
    // The first trial of each stream is in round 0.
    for p in procs.iter_mut() {
        p.next_send = send_geo.map_or(u64::MAX, |g| g.sample(&mut rng));
        p.next_stall = stall_geo.map_or(u64::MAX, |g| g.sample(&mut rng));
    }

    let mut pending: BinaryHeap<Reverse<(u64, u64)>> = BinaryHeap::new();
    let mut in_flight: HashMap<u64, InFlight> = HashMap::new();
    let mut next_event = 0u64;
    let mut next_msg = 0u64;
    let mut max_skew = 0u64;

    for now in 0..config.duration {
        // Phase 1: deliveries, in (due time, message id) order.
        while let Some(&Reverse((due, msg_id))) = pending.peek() {
            if due > now {
                break;
            }
            pending.pop();
            let m = in_flight.remove(&msg_id).expect("pending message is in flight");
            let p = &mut procs[m.dest];
            let epoch = clock::derive_epoch(p.pt, &cfg);
            p.ts = clock::receive(&p.ts, &m.ts, epoch, &cfg);
            for (a, b) in p.vc.iter_mut().zip(&m.vc) {
                *a = (*a).max(*b);
            }
            p.vc[m.dest] += 1;
            p.mpt = p.mpt.max(m.mpt).max(p.pt);
            sink(EventView {
                event_id: next_event,
                proc: m.dest,
                kind: EventKind::Recv,
                pt: p.pt,
                real_time: now,
                msg_id: Some(msg_id),
                repcl: &p.ts,
                oracle_vc: &p.vc,
                oracle_mpt: p.mpt,
            });
            next_event += 1;
        }

        // Phase 2: sends.
        #[allow(clippy::needless_range_loop)]
        for src in 0..n {
            if procs[src].next_send != now {
                continue;
            }
            procs[src].next_send = next_hit(&send_geo, &mut rng, now);
            let mut dest = rng.random_range(0..n - 1);
            if dest >= src {
                dest += 1;
            }
            let jitter = if config.jitter > 0 {
                rng.random_range(0..=config.jitter)
            } else {
                0
            };
            let p = &mut procs[src];
            let epoch = clock::derive_epoch(p.pt, &cfg);
            p.ts = clock::advance(&p.ts, epoch, &cfg);
            p.vc[src] += 1;
            p.mpt = p.mpt.max(p.pt);
            let msg_id = next_msg;
            next_msg += 1;
            sink(EventView {
                event_id: next_event,
                proc: src,
                kind: EventKind::Send,
                pt: p.pt,
                real_time: now,
                msg_id: Some(msg_id),
                repcl: &p.ts,
                oracle_vc: &p.vc,
                oracle_mpt: p.mpt,
            });
            next_event += 1;
            pending.push(Reverse((now + config.delta + jitter, msg_id)));
            in_flight.insert(
                msg_id,
                InFlight {
                    dest,
                    ts: p.ts.clone(),
                    vc: p.vc.clone(),
                    mpt: p.mpt,
                },
            );
        }

        // Phase 3: clock ticks, bounded by the slowest clock.
        let min_pt = procs.iter().map(|p| p.pt).min().unwrap_or(0);
        let limit = min_pt + cfg.epsilon_time();
        let (mut lo, mut hi) = (u64::MAX, 0);
        for p in procs.iter_mut() {
            let stalled = p.next_stall == now;
            if stalled {
                p.next_stall = next_hit(&stall_geo, &mut rng, now);
            }
            if !stalled && p.pt < limit {
                p.pt += 1;
            }
            lo = lo.min(p.pt);
            hi = hi.max(p.pt);
        }
        max_skew = max_skew.max(hi - lo);
    }
    Ok(SimOutcome {
        events: next_event,
        max_observed_skew: max_skew,
    })
}

/// Runs the simulation and keeps every event.
pub fn run(config: &SimConfig) -> Result<Trace, SimError> {
    let mut events = Vec::new();
    let outcome = simulate(config, |e| events.push(e.to_record()))?;
    let max_counter = events
        .iter()
        .flat_map(|e| e.repcl.counters().map(|(_, c)| c))
        .max()
        .unwrap_or(0);
    let layout = CodecLayout::for_clock(&config.clock).widen_counters(max_counter);
    let mut metrics = compute_metrics(&events, &layout).unwrap_or_default();
    metrics.max_observed_skew = outcome.max_observed_skew;
    Ok(Trace {
        config: config.clone(),
        layout,
        metrics,
        events,
    })
}

/// Runs the simulation keeping only running totals. Gives the same metrics
/// as [`run`] without holding the trace in memory.
pub fn run_metrics(config: &SimConfig) -> Result<RunMetrics, SimError> {
    let mut acc = MetricsAccumulator::new(config.clock.n());
    let outcome = simulate(config, |e| acc.add(e.repcl))?;
    let layout = CodecLayout::for_clock(&config.clock).widen_counters(acc.max_counter());
    let mut m = acc.finish(&layout);
    m.max_observed_skew = outcome.max_observed_skew;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n: usize, alpha: f64, duration: u64, seed: u64) -> SimConfig {
        SimConfig::new(ClockConfig::new(n, 100, 4).unwrap(), alpha, 8, duration, seed)
    }

    #[test]
    fn single_process_has_no_traffic() {
        let t = run(&small(1, 0.0, 1000, 1)).unwrap();
        assert!(t.events.is_empty());
        assert_eq!(t.metrics.max_observed_skew, 0);
        let t = run(&small(1, 5000.0, 1000, 1)).unwrap();
        assert!(t.events.is_empty());
    }

    #[test]
    fn same_seed_same_trace() {
        let a = run(&small(4, 2000.0, 20_000, 9)).unwrap();
        let b = run(&small(4, 2000.0, 20_000, 9)).unwrap();
        assert_eq!(a, b);
        let c = run(&small(4, 2000.0, 20_000, 10)).unwrap();
        assert_ne!(a.events, c.events);
    }

    #[test]
    fn skew_and_delay_bounds_hold() {
        let cfg = small(6, 3000.0, 50_000, 3);
        let t = run(&cfg).unwrap();
        assert!(t.events.len() > 500);
        assert!(t.metrics.max_observed_skew <= 100);
        // Bounded by the limit, and in practice reaches it.
        assert!(t.metrics.max_observed_skew >= 50);
        let mut sent = std::collections::HashMap::new();
        for e in &t.events {
            match e.kind {
                EventKind::Send => {
                    sent.insert(e.msg_id.unwrap(), e.real_time);
                }
                EventKind::Recv => {
                    let s = sent[&e.msg_id.unwrap()];
                    assert!(e.real_time >= s + cfg.delta);
                }
                EventKind::Local => unreachable!(),
            }
        }
        for w in t.events.windows(2) {
            assert!(w[0].real_time <= w[1].real_time);
            assert!(w[0].event_id < w[1].event_id);
        }
    }

    #[test]
    fn streaming_metrics_match_materialized() {
        let c = small(5, 3000.0, 30_000, 4);
        let t = run(&c).unwrap();
        assert_eq!(run_metrics(&c).unwrap(), t.metrics);
        assert!(t.metrics.tau_mean >= 1.0 && t.metrics.tau_mean <= 5.0);
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut c = small(2, 10.0, 100, 0);
        c.delta = 0;
        assert!(matches!(run(&c), Err(SimError::Config(_))));
        let mut c = small(2, -1.0, 100, 0);
        assert!(matches!(run(&c), Err(SimError::Config(_))));
        c.alpha = 1.0;
        c.duration = 0;
        assert!(matches!(run(&c), Err(SimError::Config(_))));
        c.duration = 10;
        c.stall_prob = 1.0;
        assert!(matches!(run(&c), Err(SimError::Config(_))));
    }

    #[test]
    fn jitter_delays_stay_in_range() {
        let mut c = small(3, 4000.0, 20_000, 5);
        c.jitter = 20;
        let t = run(&c).unwrap();
        let mut sent = std::collections::HashMap::new();
        for e in &t.events {
            if e.kind == EventKind::Send {
                sent.insert(e.msg_id.unwrap(), e.real_time);
            } else {
                let d = e.real_time - sent[&e.msg_id.unwrap()];
                assert!((8..=28).contains(&d), "delay {d}");
            }
        }
    }
}
