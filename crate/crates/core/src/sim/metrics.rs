use serde::{Deserialize, Serialize};

use super::{EventRecord, SimError};
use crate::clock::Timestamp;
use crate::codec::CodecLayout;

/// Per-run size statistics.
///
/// `tau_mean` counts stored offsets per event including the owner's own
/// entry; `sigma_mean` counts non-zero counters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub events: usize,
    pub tau_mean: f64,
    pub sigma_mean: f64,
    pub counter_event_fraction: f64,
    /// Largest spread of physical clocks seen during the run, µs. Only the
    /// simulator can observe this; [`compute_metrics`] leaves it at 0.
    pub max_observed_skew: u64,
    pub mean_clock_words: f64,
}

pub fn compute_metrics(
    events: &[EventRecord],
    layout: &CodecLayout,
) -> Result<RunMetrics, SimError> {
    if events.is_empty() {
        return Err(SimError::EmptyTrace);
    }
    let mut acc = MetricsAccumulator::new(layout.n);
    for e in events {
        acc.add(&e.repcl);
    }
    Ok(acc.finish(layout))
}

/// Running totals for [`RunMetrics`]. Word counts depend on the final layout,
/// so stored-offset counts are kept as a histogram until [`finish`].
///
/// [`finish`]: MetricsAccumulator::finish
#[derive(Debug, Clone)]
pub struct MetricsAccumulator {
    events: usize,
    // stored[x]: events with x stored offsets.
    stored: Vec<usize>,
    sigma: usize,
    with_counter: usize,
    max_counter: u64,
}

impl MetricsAccumulator {
    pub fn new(n: usize) -> Self {
        MetricsAccumulator {
            events: 0,
            stored: vec![0; n + 1],
            sigma: 0,
            with_counter: 0,
            max_counter: 0,
        }
    }

    pub fn add(&mut self, ts: &Timestamp) {
        let x = ts.stored_count();
        if x >= self.stored.len() {
            self.stored.resize(x + 1, 0);
        }
        self.stored[x] += 1;
        let s = ts.nonzero_counters();
        self.events += 1;
        self.sigma += s;
        self.with_counter += usize::from(s > 0);
        if let Some(c) = ts.counters().map(|(_, c)| c).max() {
            self.max_counter = self.max_counter.max(c);
        }
    }

    pub fn max_counter(&self) -> u64 {
        self.max_counter
    }

    /// Averages so far; all zero if nothing was added.
    pub fn finish(&self, layout: &CodecLayout) -> RunMetrics {
        if self.events == 0 {
            return RunMetrics::default();
        }
        let len = self.events as f64;
        let (tau, words) = self
            .stored
            .iter()
            .enumerate()
            .fold((0usize, 0usize), |(t, w), (x, &c)| {
                (t + x * c, w + layout.words_for(x) * c)
            });
        RunMetrics {
            events: self.events,
            tau_mean: tau as f64 / len,
            sigma_mean: self.sigma as f64 / len,
            counter_event_fraction: self.with_counter as f64 / len,
            max_observed_skew: 0,
            mean_clock_words: words as f64 / len,
        }
    }
}
