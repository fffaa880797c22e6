use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::clock::{advance, compare, derive_epoch, receive, ClockConfig, Ordering, Timestamp};
use crate::sim::{EventKind, Trace};

/// Re-runs the clock rules over a trace's events under another
/// configuration. Events are processed in trace order, which is a valid
/// execution order: every receive follows its send.
pub fn restamp(trace: &Trace, cfg: &ClockConfig) -> Result<Vec<Timestamp>, AnalysisError> {
    let mut state: Vec<Timestamp> = (0..cfg.n()).map(Timestamp::initial).collect();
    let mut sent: HashMap<u64, Timestamp> = HashMap::new();
    let mut out = Vec::with_capacity(trace.events.len());
    for e in &trace.events {
        let epoch = derive_epoch(e.pt, cfg);
        let ts = match e.kind {
            EventKind::Local | EventKind::Send => advance(&state[e.proc], epoch, cfg),
            EventKind::Recv => {
                let msg = e
                    .msg_id
                    .and_then(|m| sent.get(&m))
                    .ok_or_else(|| {
                        AnalysisError::Spec(format!(
                            "event {} receives a message with no earlier send",
                            e.event_id
                        ))
                    })?;
                receive(&state[e.proc], msg, epoch, cfg)
            }
        };
        if e.kind == EventKind::Send {
            if let Some(m) = e.msg_id {
                sent.insert(m, ts.clone());
            }
        }
        state[e.proc] = ts.clone();
        out.push(ts);
    }
    Ok(out)
}

/// Pair counts over every unordered pair of events.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairAudit {
    pub hb_pairs: u64,
    /// Causally related pairs the declared stamps fail to order correctly.
    pub requirement1_violations: u64,
    /// Pairs whose causal-past physical times differ by more than `E + I`.
    pub far_pairs: u64,
    pub requirement2_violations: u64,
    pub concurrent_pairs: u64,
    /// Concurrent pairs ordered by the original stamps.
    pub baseline_ordered: u64,
    /// Concurrent pairs ordered by the declared stamps.
    pub declared_ordered: u64,
    /// Concurrent pairs ordered by the declared stamps but not the original.
    pub forced_pairs: u64,
}

impl PairAudit {
    fn merge(self, o: PairAudit) -> PairAudit {
        PairAudit {
            hb_pairs: self.hb_pairs + o.hb_pairs,
            requirement1_violations: self.requirement1_violations + o.requirement1_violations,
            far_pairs: self.far_pairs + o.far_pairs,
            requirement2_violations: self.requirement2_violations + o.requirement2_violations,
            concurrent_pairs: self.concurrent_pairs + o.concurrent_pairs,
            baseline_ordered: self.baseline_ordered + o.baseline_ordered,
            declared_ordered: self.declared_ordered + o.declared_ordered,
            forced_pairs: self.forced_pairs + o.forced_pairs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialReplayReport {
    pub actual_epsilon_us: u64,
    pub declared_epsilon_us: u64,
    pub interval_us: u64,
    pub events: usize,
    #[serde(flatten)]
    pub pairs: PairAudit,
    /// `forced_pairs / concurrent_pairs`.
    pub forced_fraction: f64,
}

impl PartialReplayReport {
    /// Causality and far-apart ordering both survive the smaller bound.
    pub fn requirements_hold(&self) -> bool {
        self.pairs.requirement1_violations == 0 && self.pairs.requirement2_violations == 0
    }
}

/// Restamps `trace` with a skew bound of `declared_epsilon_us` (keeping `n`
/// and `I`) and audits every pair of events against ground truth.
pub fn partial_replay_report(
    trace: &Trace,
    declared_epsilon_us: u64,
) -> Result<PartialReplayReport, AnalysisError> {
    let actual = *trace.clock();
    if declared_epsilon_us > actual.epsilon_time() {
        return Err(AnalysisError::InvalidSkew(format!(
            "declared {declared_epsilon_us} us exceeds the trace's bound of {} us",
            actual.epsilon_time()
        )));
    }
    let declared = actual
        .with_epsilon_time(declared_epsilon_us)
        .map_err(|e| AnalysisError::InvalidSkew(e.to_string()))?;
    let stamps = restamp(trace, &declared)?;
    let ev = &trace.events;
    let far = actual.eps1();

    let pairs = (0..ev.len())
        .into_par_iter()
        .map(|i| {
            let mut a = PairAudit::default();
            for j in i + 1..ev.len() {
                let (e, f) = (&ev[i], &ev[j]);
                let now = compare(&stamps[i], &stamps[j], &declared);
                if e.happened_before(f) || f.happened_before(e) {
                    a.hb_pairs += 1;
                    let want = if e.happened_before(f) {
                        Ordering::Before
                    } else {
                        Ordering::After
                    };
                    a.requirement1_violations += u64::from(now != want);
                } else {
                    a.concurrent_pairs += 1;
                    let before = compare(&e.repcl, &f.repcl, &actual);
                    let was = before != Ordering::Concurrent;
                    let is = now != Ordering::Concurrent;
                    a.baseline_ordered += u64::from(was);
                    a.declared_ordered += u64::from(is);
                    a.forced_pairs += u64::from(is && !was);
                }
                let (lo, hi) = (e.oracle_mpt.min(f.oracle_mpt), e.oracle_mpt.max(f.oracle_mpt));
                if hi - lo > far {
                    a.far_pairs += 1;
                    let want = if e.oracle_mpt < f.oracle_mpt {
                        Ordering::Before
                    } else {
                        Ordering::After
                    };
                    a.requirement2_violations += u64::from(now != want);
                }
            }
            a
        })
        .reduce(PairAudit::default, PairAudit::merge);

    let forced_fraction = if pairs.concurrent_pairs == 0 {
        0.0
    } else {
        pairs.forced_pairs as f64 / pairs.concurrent_pairs as f64
    };
    Ok(PartialReplayReport {
        actual_epsilon_us: actual.epsilon_time(),
        declared_epsilon_us,
        interval_us: actual.interval(),
        events: ev.len(),
        pairs,
        forced_fraction,
    })
}
