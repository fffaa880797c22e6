use std::collections::BTreeSet;

use super::ReplayError;
use crate::clock::{compare, Ordering};
use crate::sim::Trace;

/// Default guard: the number of orders grows factorially.
pub const MAX_ENUMERATE_EVENTS: usize = 12;

/// Every order in which the trace may be replayed, i.e. every linear
/// extension of `Before` over its events. Refuses traces longer than `limit`
/// (pass [`MAX_ENUMERATE_EVENTS`] unless the caller knows better); the hard
/// ceiling is 64 events.
pub fn enumerate_replays(trace: &Trace, limit: usize) -> Result<BTreeSet<Vec<u64>>, ReplayError> {
    let m = trace.events.len();
    if m > limit.min(64) {
        return Err(ReplayError::TooLarge {
            events: m,
            limit: limit.min(64),
        });
    }
    let cfg = trace.clock();
    // preds[j]: bit i set iff event i must be replayed before event j.
    let preds: Vec<u64> = (0..m)
        .map(|j| {
            (0..m)
                .filter(|&i| {
                    compare(&trace.events[i].repcl, &trace.events[j].repcl, cfg) == Ordering::Before
                })
                .fold(0u64, |acc, i| acc | (1 << i))
        })
        .collect();

    let mut out = BTreeSet::new();
    let mut stack = Vec::with_capacity(m);
    extend(&preds, 0, &mut stack, &mut out, trace);
    Ok(out)
}

fn extend(
    preds: &[u64],
    placed: u64,
    stack: &mut Vec<usize>,
    out: &mut BTreeSet<Vec<u64>>,
    trace: &Trace,
) {
    if stack.len() == preds.len() {
        out.insert(stack.iter().map(|&i| trace.events[i].event_id).collect());
        return;
    }
    for (j, &p) in preds.iter().enumerate() {
        if placed & (1 << j) == 0 && p & !placed == 0 {
            stack.push(j);
            extend(preds, placed | (1 << j), stack, out, trace);
            stack.pop();
        }
    }
}
