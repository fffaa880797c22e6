//! Replay clocks for distributed traces.
//!
//! * [`clock`]: the timestamp type and its update and comparison rules.
//! * [`codec`]: the word-packed binary form of a timestamp.
//! * [`sim`]: a discrete-time simulator that produces stamped traces with
//!   vector-clock ground truth.
//! * [`replay`]: frontline replay, exhaustive enumeration and steppable
//!   sessions.
//! * [`analysis`]: parameter sweeps, feasibility regions and partial replay.
//! * [`service`]: the HTTP session API used by the trace explorer.

pub mod analysis;
pub mod cli;
pub mod clock;
pub mod codec;
pub mod replay;
pub mod service;
pub mod sim;

pub use clock::{ClockConfig, Ordering, Timestamp};
