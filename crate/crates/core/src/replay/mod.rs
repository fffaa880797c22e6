//! Replay of a stamped trace in any order the timestamps admit.
//!
//! The *frontline* of a set of events is the subset with no `Before`
//! predecessor inside the set. Replaying repeatedly picks a frontline event,
//! emits it and removes it. Picking uniformly at random yields one admissible
//! order; exploring every pick yields all of them.

mod enumerate;
mod session;
mod validate;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::clock::{compare, ClockConfig, Ordering, Timestamp};
use crate::sim::Trace;

pub use enumerate::{enumerate_replays, MAX_ENUMERATE_EVENTS};
pub use session::{replay_random, ReplaySession};
pub use validate::{validate_order, Validation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReplayError {
    #[error("event {event_id} is not in the frontline {frontline:?}")]
    NotInFrontline { event_id: u64, frontline: Vec<u64> },
    #[error("ordering is not a permutation of the trace: {0}")]
    NotAPermutation(String),
    #[error("{events} events exceed the enumeration limit of {limit}")]
    TooLarge { events: usize, limit: usize },
    #[error("unknown event {0:?}")]
    UnknownEvent(String),
}

/// The `Before`-minimal elements of `items`, returned as ids in input order.
///
/// An event more than `epsilon` epochs above the lowest `mx` has that
/// lowest event as a predecessor, and a predecessor of a candidate lies at
/// most `epsilon` epochs above it, so only a `2 * epsilon` band of `mx`
/// values is ever compared.
pub fn frontline(items: &[(u64, Timestamp)], cfg: &ClockConfig) -> Vec<u64> {
    let mut by_mx: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, (_, ts)) in items.iter().enumerate() {
        by_mx.entry(ts.mx()).or_default().push(i);
    }
    let Some(&lo) = by_mx.keys().next() else {
        return Vec::new();
    };
    let eps = cfg.epsilon();
    let window: Vec<usize> = by_mx
        .range(..=lo.saturating_add(2 * eps))
        .flat_map(|(_, v)| v.iter().copied())
        .collect();
    let mut out: Vec<usize> = window
        .iter()
        .copied()
        .filter(|&c| items[c].1.mx() <= lo.saturating_add(eps))
        .filter(|&c| {
            !window
                .iter()
                .any(|&f| compare(&items[f].1, &items[c].1, cfg) == Ordering::Before)
        })
        .collect();
    out.sort_unstable();
    out.into_iter().map(|i| items[i].0).collect()
}

/// Renders a replay as text: a `#` header naming the trace and seed, then one
/// event id per line.
pub fn format_order(trace_name: &str, seed: u64, order: &[u64]) -> String {
    let mut s = format!("# trace={trace_name} seed={seed} events={}\n", order.len());
    for id in order {
        s.push_str(&id.to_string());
        s.push('\n');
    }
    s
}

/// Parses an ordering file. Tokens are event ids or labels separated by
/// whitespace; lines starting with `#` are ignored.
pub fn parse_order(text: &str, trace: &Trace) -> Result<Vec<u64>, ReplayError> {
    text.lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(str::split_whitespace)
        .map(|tok| {
            trace
                .lookup(tok)
                .map(|i| trace.events[i].event_id)
                .ok_or_else(|| ReplayError::UnknownEvent(tok.to_string()))
        })
        .collect()
}
