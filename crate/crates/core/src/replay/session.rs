use std::collections::BTreeSet;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ReplayError;
use crate::clock::{compare, Ordering};
use crate::sim::Trace;

/// A replay in progress.
///
/// Events are addressed by their trace id. The frontline is maintained
/// incrementally: removing an event can only add members, and every new
/// member is a `Before`-successor of the removed event.
#[derive(Debug, Clone)]
pub struct ReplaySession {
    trace: Arc<Trace>,
    seed: u64,
    rng: ChaCha8Rng,
    // (mx, trace index) of events not yet replayed.
    remaining: BTreeSet<(u64, usize)>,
    frontline: BTreeSet<usize>,
    prefix: Vec<usize>,
    initial_frontline: BTreeSet<usize>,
}

impl ReplaySession {
    pub fn new(trace: Arc<Trace>, seed: u64) -> Self {
        let remaining: BTreeSet<(u64, usize)> = trace
            .events
            .iter()
            .enumerate()
            .map(|(i, e)| (e.repcl.mx(), i))
            .collect();
        let mut s = ReplaySession {
            trace,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            remaining,
            frontline: BTreeSet::new(),
            prefix: Vec::new(),
            initial_frontline: BTreeSet::new(),
        };
        s.frontline = s.full_frontline();
        s.initial_frontline = s.frontline.clone();
        s
    }

    pub fn trace(&self) -> &Arc<Trace> {
        &self.trace
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_complete(&self) -> bool {
        self.remaining.is_empty()
    }

    pub fn remaining_count(&self) -> usize {
        self.remaining.len()
    }

    /// Frontline as trace indices, ascending.
    pub fn frontline_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.frontline.iter().copied()
    }

    pub fn frontline(&self) -> Vec<u64> {
        self.frontline
            .iter()
            .map(|&i| self.trace.events[i].event_id)
            .collect()
    }

    pub fn prefix(&self) -> Vec<u64> {
        self.prefix
            .iter()
            .map(|&i| self.trace.events[i].event_id)
            .collect()
    }

    pub fn prefix_indices(&self) -> &[usize] {
        &self.prefix
    }

    /// Replays `event_id` next. Fails unless it is in the frontline.
    pub fn step(&mut self, event_id: u64) -> Result<(), ReplayError> {
        match self.trace.position(event_id) {
            Some(i) if self.frontline.contains(&i) => {
                self.take(i);
                Ok(())
            }
            _ => Err(ReplayError::NotInFrontline {
                event_id,
                frontline: self.frontline(),
            }),
        }
    }

    /// Replays a uniformly drawn frontline event. Returns its id, or `None`
    /// once every event has been replayed.
    pub fn auto_step(&mut self) -> Option<u64> {
        if self.frontline.is_empty() {
            return None;
        }
        let k = self.rng.random_range(0..self.frontline.len());
        let i = *self.frontline.iter().nth(k).expect("k < len");
        self.take(i);
        Some(self.trace.events[i].event_id)
    }

    /// Up to `count` random steps; returns the ids replayed.
    pub fn auto_steps(&mut self, count: usize) -> Vec<u64> {
        (0..count).map_while(|_| self.auto_step()).collect()
    }

    /// Back to the initial state, with the random stream restarted.
    pub fn reset(&mut self) {
        self.rng = ChaCha8Rng::seed_from_u64(self.seed);
        self.remaining = self
            .trace
            .events
            .iter()
            .enumerate()
            .map(|(i, e)| (e.repcl.mx(), i))
            .collect();
        self.frontline = self.initial_frontline.clone();
        self.prefix.clear();
    }

    fn take(&mut self, i: usize) {
        let events = &self.trace.events;
        let cfg = self.trace.clock();
        let removed = &events[i].repcl;
        self.remaining.remove(&(removed.mx(), i));
        self.frontline.remove(&i);
        self.prefix.push(i);

        let Some(&(lo, _)) = self.remaining.first() else {
            return;
        };
        let eps = cfg.epsilon();
        let new: Vec<usize> = self
            .remaining
            .range(..=(lo.saturating_add(eps), usize::MAX))
            .map(|&(_, g)| g)
            .filter(|g| !self.frontline.contains(g))
            .filter(|&g| compare(removed, &events[g].repcl, cfg) == Ordering::Before)
            .filter(|&g| !self.has_predecessor(g))
            .collect();
        self.frontline.extend(new);
    }

    fn has_predecessor(&self, g: usize) -> bool {
        let events = &self.trace.events;
        let cfg = self.trace.clock();
        let target = &events[g].repcl;
        let hi = target.mx().saturating_add(cfg.epsilon());
        self.remaining
            .range(..=(hi, usize::MAX))
            .any(|&(_, f)| f != g && compare(&events[f].repcl, target, cfg) == Ordering::Before)
    }

    fn full_frontline(&self) -> BTreeSet<usize> {
        let Some(&(lo, _)) = self.remaining.first() else {
            return BTreeSet::new();
        };
        let hi = lo.saturating_add(self.trace.clock().epsilon());
        self.remaining
            .range(..=(hi, usize::MAX))
            .map(|&(_, c)| c)
            .filter(|&c| !self.has_predecessor(c))
            .collect()
    }
}

/// One random admissible replay: auto-steps a fresh session to completion.
pub fn replay_random(trace: Arc<Trace>, seed: u64) -> Vec<u64> {
    let mut s = ReplaySession::new(trace, seed);
    while s.auto_step().is_some() {}
    s.prefix()
}
