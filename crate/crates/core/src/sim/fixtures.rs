//! The four-event worked example: three processes, `I = 1`.
//!
//! ```text
//! P0  A(pt 50) --send-->
//! P1              B(pt 48, recv A)        D(pt 52, recv C)
//! P2  C(pt 40) --send------------------------>
//! ```
//!
//! With a skew bound of 5 epochs the only admissible replay is C A B D; with
//! 20 epochs C may also be replayed after A or after B.

use super::{compute_metrics, EventKind, EventRecord, SimConfig, SimError, Trace};
use crate::clock::{advance, receive, ClockConfig, Timestamp};
use crate::codec::CodecLayout;

pub const FIGURE2_LABELS: [&str; 4] = ["A", "B", "C", "D"];

/// Builds the example by running the clock rules, for skew bound `epsilon`
/// (in epochs; with `I = 1` that is also microseconds).
pub fn figure2_trace(epsilon: u64) -> Result<Trace, SimError> {
    let cfg = ClockConfig::new(3, epsilon, 1)?;
    let a = advance(&Timestamp::initial(0), 50, &cfg);
    let c = advance(&Timestamp::initial(2), 40, &cfg);
    let b = receive(&Timestamp::initial(1), &a, 48, &cfg);
    let d = receive(&b, &c, 52, &cfg);

    let ev = |id: u64, proc, kind, pt, real_time, msg, repcl, vc: [u64; 3], mpt| EventRecord {
        event_id: id,
        proc,
        kind,
        pt,
        real_time,
        msg_id: Some(msg),
        repcl,
        oracle_vc: vc.to_vec(),
        oracle_mpt: mpt,
        label: Some(FIGURE2_LABELS[id as usize].to_string()),
    };
    let events = vec![
        ev(0, 0, EventKind::Send, 50, 10, 0, a, [1, 0, 0], 50),
        ev(1, 1, EventKind::Recv, 48, 12, 0, b, [1, 1, 0], 50),
        ev(2, 2, EventKind::Send, 40, 12, 1, c, [0, 0, 1], 40),
        ev(3, 1, EventKind::Recv, 52, 14, 1, d, [1, 2, 1], 52),
    ];
    let layout = CodecLayout::for_clock(&cfg);
    let metrics = compute_metrics(&events, &layout)?;
    Ok(Trace {
        config: SimConfig::new(cfg, 0.0, 2, 15, 0),
        layout,
        metrics,
        events,
    })
}
