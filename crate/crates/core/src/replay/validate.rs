use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use super::ReplayError;
use crate::clock::{compare, Ordering};
use crate::sim::Trace;

/// Result of checking an ordering against the trace's timestamps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Validation {
    pub valid: bool,
    /// `(must_be_first, appeared_first)`: the first pair found where an event
    /// was placed after one that it must precede.
    pub violation: Option<(u64, u64)>,
}

/// Checks that no event is placed after an event it is `Before`.
///
/// Reports the violation with the smallest later position, and for that
/// position the smallest earlier one.
pub fn validate_order(order: &[u64], trace: &Trace) -> Result<Validation, ReplayError> {
    if order.len() != trace.events.len() {
        return Err(ReplayError::NotAPermutation(format!(
            "{} entries for {} events",
            order.len(),
            trace.events.len()
        )));
    }
    let mut seen = HashSet::with_capacity(order.len());
    let mut idx = Vec::with_capacity(order.len());
    for &id in order {
        let i = trace
            .position(id)
            .ok_or_else(|| ReplayError::NotAPermutation(format!("unknown event {id}")))?;
        if !seen.insert(i) {
            return Err(ReplayError::NotAPermutation(format!("event {id} repeated")));
        }
        idx.push(i);
    }

    let cfg = trace.clock();
    let eps = cfg.epsilon();
    // Placed events by mx. An event can only be Before events whose mx is at
    // least its own mx minus epsilon.
    let mut placed: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (pos, &j) in idx.iter().enumerate() {
        let later = &trace.events[j].repcl;
        let first_bad = placed
            .range(later.mx().saturating_sub(eps)..)
            .flat_map(|(_, v)| v.iter().copied())
            .filter(|&p| compare(later, &trace.events[idx[p]].repcl, cfg) == Ordering::Before)
            .min();
        if let Some(p) = first_bad {
            return Ok(Validation {
                valid: false,
                violation: Some((order[pos], order[p])),
            });
        }
        placed.entry(later.mx()).or_default().push(pos);
    }
    Ok(Validation {
        valid: true,
        violation: None,
    })
}
