//! Replay clock timestamps.
//!
//! A timestamp is the triple `<mx, offsets, counters>`:
//!
//! * `mx` is the highest epoch the owning process knows about, either from its
//!   own physical clock or from messages it received.
//! * `offsets[k]` records that the owner knows process `k` reached epoch
//!   `mx - offsets[k]`. Offsets are capped at `epsilon` (the skew bound in
//!   epochs); a capped offset carries no information beyond what clock
//!   synchronization already guarantees, so it is not stored.
//! * `counters[k]` break ties between events that share the same knowledge.
//!
//! Storage is sparse: only processes the owner heard from recently occupy an
//! entry. The owner's own entry is always present.
//!
//! All operations are pure and return fresh timestamps.

use std::cmp;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Process identifier, `0..n`.
pub type ProcessId = usize;

/// Epoch number: local physical time divided by the interval length.
pub type Epoch = u64;

/// Hard limit on the number of processes; one presence bit per process has
/// to fit a 64-bit word.
pub const MAX_PROCESSES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClockError {
    #[error("process count must be in 1..={MAX_PROCESSES}, got {0}")]
    ProcessCount(usize),
    #[error("interval must satisfy 0 < interval <= epsilon_time (interval={interval}, epsilon_time={epsilon_time})")]
    IntervalRange { epsilon_time: u64, interval: u64 },
    #[error("interval {interval} does not divide epsilon_time {epsilon_time}")]
    IntervalDivision { epsilon_time: u64, interval: u64 },
    #[error("shift is forward-only: newmx {newmx} < mx {mx}")]
    BackwardShift { mx: Epoch, newmx: Epoch },
    #[error("merge requires equal mx, got {0} and {1}")]
    EpochMismatch(Epoch, Epoch),
    #[error("process id {proc} out of range for n={n}")]
    ProcessOutOfRange { proc: ProcessId, n: usize },
    #[error("offset {offset} for process {proc} out of range (epsilon={epsilon})")]
    OffsetRange { proc: ProcessId, offset: u64, epsilon: u64 },
    #[error("counter stored for process {0} without an offset entry")]
    OrphanCounter(ProcessId),
    #[error("duplicate entry for process {0}")]
    DuplicateEntry(ProcessId),
    #[error("owner {0} has no offset entry")]
    MissingOwner(ProcessId),
}

/// System parameters shared by every timestamp of one computation.
///
/// `epsilon_time` is the clock skew bound in microseconds, `interval` the epoch
/// length in microseconds. Their ratio `epsilon` is the skew bound counted in
/// epochs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ClockConfigWire", into = "ClockConfigWire")]
pub struct ClockConfig {
    n: usize,
    epsilon_time: u64,
    interval: u64,
    epsilon: u64,
}

#[derive(Serialize, Deserialize)]
struct ClockConfigWire {
    n: usize,
    epsilon_us: u64,
    interval_us: u64,
}

impl TryFrom<ClockConfigWire> for ClockConfig {
    type Error = ClockError;

    fn try_from(w: ClockConfigWire) -> Result<Self, Self::Error> {
        ClockConfig::new(w.n, w.epsilon_us, w.interval_us)
    }
}

impl From<ClockConfig> for ClockConfigWire {
    fn from(c: ClockConfig) -> Self {
        ClockConfigWire {
            n: c.n,
            epsilon_us: c.epsilon_time,
            interval_us: c.interval,
        }
    }
}

impl ClockConfig {
    pub fn new(n: usize, epsilon_time: u64, interval: u64) -> Result<Self, ClockError> {
        if n == 0 || n > MAX_PROCESSES {
            return Err(ClockError::ProcessCount(n));
        }
        if interval == 0 || interval > epsilon_time {
            return Err(ClockError::IntervalRange {
                epsilon_time,
                interval,
            });
        }
        if !epsilon_time.is_multiple_of(interval) {
            return Err(ClockError::IntervalDivision {
                epsilon_time,
                interval,
            });
        }
        Ok(ClockConfig {
            n,
            epsilon_time,
            interval,
            epsilon: epsilon_time / interval,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Skew bound in microseconds.
    pub fn epsilon_time(&self) -> u64 {
        self.epsilon_time
    }

    /// Epoch length in microseconds.
    pub fn interval(&self) -> u64 {
        self.interval
    }

    /// Skew bound in epochs.
    pub fn epsilon(&self) -> u64 {
        self.epsilon
    }

    /// Physical-time gap beyond which events are always ordered (`E + I`).
    pub fn eps1(&self) -> u64 {
        self.epsilon_time + self.interval
    }

    /// Physical-time gap within which concurrent events stay unordered (`E - I`).
    pub fn eps2(&self) -> u64 {
        self.epsilon_time - self.interval
    }

    /// Same process count and interval, different skew bound.
    pub fn with_epsilon_time(&self, epsilon_time: u64) -> Result<Self, ClockError> {
        ClockConfig::new(self.n, epsilon_time, self.interval)
    }
}

/// `floor(pt / interval)`.
pub fn derive_epoch(pt: u64, cfg: &ClockConfig) -> Epoch {
    pt / cfg.interval
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Entry {
    proc: u32,
    offset: u32,
    counter: u64,
}

/// A replay clock timestamp. See the module docs for the field semantics.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "TimestampWire", into = "TimestampWire")]
pub struct Timestamp {
    mx: Epoch,
    owner: u32,
    // Sorted by `proc`, no duplicates. `counter == 0` means "no counter".
    entries: Vec<Entry>,
}

/// Structural JSON form: sparse maps keyed by process id.
#[derive(Serialize, Deserialize)]
struct TimestampWire {
    mx: Epoch,
    owner: ProcessId,
    offsets: BTreeMap<ProcessId, u64>,
    counters: BTreeMap<ProcessId, u64>,
}

impl TryFrom<TimestampWire> for Timestamp {
    type Error = ClockError;

    fn try_from(w: TimestampWire) -> Result<Self, Self::Error> {
        let offsets: Vec<_> = w.offsets.into_iter().collect();
        let counters: Vec<_> = w.counters.into_iter().collect();
        Timestamp::from_parts(w.owner, w.mx, &offsets, &counters)
    }
}

impl From<Timestamp> for TimestampWire {
    fn from(t: Timestamp) -> Self {
        TimestampWire {
            mx: t.mx,
            owner: t.owner(),
            offsets: t.offsets().collect(),
            counters: t.counters().collect(),
        }
    }
}

/// Outcome of comparing two timestamps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    Before,
    After,
    Concurrent,
}

impl Ordering {
    pub fn reverse(self) -> Ordering {
        match self {
            Ordering::Before => Ordering::After,
            Ordering::After => Ordering::Before,
            Ordering::Concurrent => Ordering::Concurrent,
        }
    }
}

impl Timestamp {
    /// The state of a process before its first event: `<0, {owner: 0}, {}>`.
    pub fn initial(owner: ProcessId) -> Self {
        Timestamp {
            mx: 0,
            owner: owner as u32,
            entries: vec![Entry {
                proc: owner as u32,
                offset: 0,
                counter: 0,
            }],
        }
    }

    /// Builds a timestamp from explicit offset and counter lists.
    ///
    /// Zero counters are dropped. Ranges are checked by [`Timestamp::validate`],
    /// not here, because they depend on the clock configuration.
    pub fn from_parts(
        owner: ProcessId,
        mx: Epoch,
        offsets: &[(ProcessId, u64)],
        counters: &[(ProcessId, u64)],
    ) -> Result<Self, ClockError> {
        let mut entries: Vec<Entry> = Vec::with_capacity(offsets.len());
        for &(proc, offset) in offsets {
            if proc >= MAX_PROCESSES {
                return Err(ClockError::ProcessOutOfRange {
                    proc,
                    n: MAX_PROCESSES,
                });
            }
            let offset = u32::try_from(offset).map_err(|_| ClockError::OffsetRange {
                proc,
                offset,
                epsilon: u64::from(u32::MAX),
            })?;
            entries.push(Entry {
                proc: proc as u32,
                offset,
                counter: 0,
            });
        }
        entries.sort_by_key(|e| e.proc);
        for w in entries.windows(2) {
            if w[0].proc == w[1].proc {
                return Err(ClockError::DuplicateEntry(w[0].proc as usize));
            }
        }
        for &(proc, counter) in counters {
            if counter == 0 {
                continue;
            }
            match entries.binary_search_by_key(&(proc as u32), |e| e.proc) {
                Ok(i) => {
                    if entries[i].counter != 0 {
                        return Err(ClockError::DuplicateEntry(proc));
                    }
                    entries[i].counter = counter;
                }
                Err(_) => return Err(ClockError::OrphanCounter(proc)),
            }
        }
        Ok(Timestamp {
            mx,
            owner: owner as u32,
            entries,
        })
    }

    /// Checks the representation invariants against a configuration.
    pub fn validate(&self, cfg: &ClockConfig) -> Result<(), ClockError> {
        let eps = cfg.epsilon();
        if self.owner() >= cfg.n() {
            return Err(ClockError::ProcessOutOfRange {
                proc: self.owner(),
                n: cfg.n(),
            });
        }
        if self.stored_offset(self.owner()).is_none() {
            return Err(ClockError::MissingOwner(self.owner()));
        }
        for e in &self.entries {
            let proc = e.proc as usize;
            if proc >= cfg.n() {
                return Err(ClockError::ProcessOutOfRange { proc, n: cfg.n() });
            }
            let offset = u64::from(e.offset);
            // The owner keeps its entry even at the cap; everyone else is
            // evicted on reaching it.
            let limit_ok = if proc == self.owner() {
                offset <= eps
            } else {
                offset < eps
            };
            if !limit_ok {
                return Err(ClockError::OffsetRange {
                    proc,
                    offset,
                    epsilon: eps,
                });
            }
        }
        Ok(())
    }

    pub fn mx(&self) -> Epoch {
        self.mx
    }

    pub fn owner(&self) -> ProcessId {
        self.owner as usize
    }

    /// Offset stored for `proc`, if any.
    pub fn stored_offset(&self, proc: ProcessId) -> Option<u64> {
        self.find(proc).map(|e| u64::from(e.offset))
    }

    /// Offset for `proc`, reading an absent entry as `epsilon`.
    pub fn offset(&self, proc: ProcessId, cfg: &ClockConfig) -> u64 {
        self.stored_offset(proc).unwrap_or(cfg.epsilon())
    }

    /// Counter for `proc`; absent reads as 0.
    pub fn counter(&self, proc: ProcessId) -> u64 {
        self.find(proc).map_or(0, |e| e.counter)
    }

    /// The epoch of `proc` this timestamp knows about: `mx - offset(proc)`.
    /// Negative values occur early in a run, before `mx` exceeds `epsilon`.
    pub fn knowledge(&self, proc: ProcessId, cfg: &ClockConfig) -> i64 {
        self.mx as i64 - self.offset(proc, cfg) as i64
    }

    /// Number of stored offsets (the `tau` contribution of this timestamp).
    pub fn stored_count(&self) -> usize {
        self.entries.len()
    }

    /// Number of stored non-zero counters (the `sigma` contribution).
    pub fn nonzero_counters(&self) -> usize {
        self.entries.iter().filter(|e| e.counter != 0).count()
    }

    /// Presence bitmap: bit `k` is set iff an offset for `k` is stored.
    pub fn presence(&self) -> u64 {
        self.entries.iter().fold(0u64, |m, e| m | (1u64 << e.proc))
    }

    /// Stored `(process, offset)` pairs in ascending process order.
    pub fn offsets(&self) -> impl Iterator<Item = (ProcessId, u64)> + '_ {
        self.entries
            .iter()
            .map(|e| (e.proc as usize, u64::from(e.offset)))
    }

    /// Non-zero `(process, counter)` pairs in ascending process order.
    pub fn counters(&self) -> impl Iterator<Item = (ProcessId, u64)> + '_ {
        self.entries
            .iter()
            .filter(|e| e.counter != 0)
            .map(|e| (e.proc as usize, e.counter))
    }

    fn find(&self, proc: ProcessId) -> Option<&Entry> {
        let proc = u32::try_from(proc).ok()?;
        self.entries
            .binary_search_by_key(&proc, |e| e.proc)
            .ok()
            .map(|i| &self.entries[i])
    }

    fn find_mut(&mut self, proc: ProcessId) -> Option<&mut Entry> {
        let proc = proc as u32;
        self.entries
            .binary_search_by_key(&proc, |e| e.proc)
            .ok()
            .map(move |i| &mut self.entries[i])
    }

    /// Sets the owner's offset, keeping the entry stored even when it equals
    /// `epsilon` so the owner's counter always has a slot.
    fn set_owner_offset(&mut self, offset: u64) {
        let owner = self.owner;
        match self.entries.binary_search_by_key(&owner, |e| e.proc) {
            Ok(i) => self.entries[i].offset = offset as u32,
            Err(i) => self.entries.insert(
                i,
                Entry {
                    proc: owner,
                    offset: offset as u32,
                    counter: 0,
                },
            ),
        }
    }

    fn clear_counters(&mut self) {
        for e in &mut self.entries {
            e.counter = 0;
        }
    }

    fn bump_owner_counter(&mut self) {
        let owner = self.owner();
        let e = self
            .find_mut(owner)
            .expect("owner entry is always stored after an update");
        e.counter += 1;
    }

    /// Copies counters from `src` onto matching entries of `self`.
    fn adopt_counters(&mut self, src: &Timestamp) {
        for e in &mut self.entries {
            e.counter = src.counter(e.proc as usize);
        }
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}, {{", self.mx)?;
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}:{}", e.proc, e.offset)?;
        }
        write!(f, "}}, {{")?;
        let mut first = true;
        for e in self.entries.iter().filter(|e| e.counter != 0) {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            write!(f, "{}:{}", e.proc, e.counter)?;
        }
        write!(f, "}}>")
    }
}

/// Moves `ts` forward to epoch `newmx`, preserving what it knows about every
/// process: each offset grows by `newmx - mx` and is evicted once it reaches
/// `epsilon`. Counters are carried unchanged.
pub fn shift(ts: &Timestamp, newmx: Epoch, cfg: &ClockConfig) -> Result<Timestamp, ClockError> {
    if newmx < ts.mx {
        return Err(ClockError::BackwardShift { mx: ts.mx, newmx });
    }
    let d = newmx - ts.mx;
    let eps = cfg.epsilon();
    let entries = ts
        .entries
        .iter()
        .filter_map(|e| {
            let off = u64::from(e.offset).saturating_add(d);
            (off < eps).then_some(Entry {
                offset: off as u32,
                ..*e
            })
        })
        .collect();
    Ok(Timestamp {
        mx: newmx,
        owner: ts.owner,
        entries,
    })
}

/// Element-wise minimum of the offsets of two timestamps at the same `mx`.
/// The result belongs to `t1`'s owner and carries no counters.
pub fn merge_same_epoch(
    t1: &Timestamp,
    t2: &Timestamp,
    cfg: &ClockConfig,
) -> Result<Timestamp, ClockError> {
    if t1.mx != t2.mx {
        return Err(ClockError::EpochMismatch(t1.mx, t2.mx));
    }
    let eps = cfg.epsilon();
    let mut entries = Vec::with_capacity(t1.entries.len() + t2.entries.len());
    let (mut i, mut j) = (0, 0);
    let (a, b) = (&t1.entries, &t2.entries);
    while i < a.len() || j < b.len() {
        let (proc, offset) = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) if x.proc == y.proc => {
                i += 1;
                j += 1;
                (x.proc, cmp::min(x.offset, y.offset))
            }
            (Some(x), Some(y)) if x.proc < y.proc => {
                i += 1;
                (x.proc, x.offset)
            }
            (Some(_), Some(y)) => {
                j += 1;
                (y.proc, y.offset)
            }
            (Some(x), None) => {
                i += 1;
                (x.proc, x.offset)
            }
            (None, Some(y)) => {
                j += 1;
                (y.proc, y.offset)
            }
            (None, None) => unreachable!(),
        };
        if u64::from(offset) < eps {
            entries.push(Entry {
                proc,
                offset,
                counter: 0,
            });
        }
    }
    Ok(Timestamp {
        mx: t1.mx,
        owner: t1.owner,
        entries,
    })
}

/// True iff both timestamps have the same `mx` and the same offset for every
/// process (absent entries compare as `epsilon`).
pub fn equal_offset(t1: &Timestamp, t2: &Timestamp, cfg: &ClockConfig) -> bool {
    if t1.mx != t2.mx {
        return false;
    }
    let eps = cfg.epsilon() as u32;
    let mut ok = true;
    for_each_union(&t1.entries, &t2.entries, |x, y| {
        let ox = x.map_or(eps, |e| e.offset);
        let oy = y.map_or(eps, |e| e.offset);
        ok &= ox == oy;
    });
    ok
}

/// Timestamp of a local or send event on `ts`'s owner at epoch `epoch_now`.
pub fn advance(ts: &Timestamp, epoch_now: Epoch, cfg: &ClockConfig) -> Timestamp {
    let newmx = cmp::max(ts.mx, epoch_now);
    let own_offset = cmp::min(newmx - epoch_now, cfg.epsilon());
    if ts.mx == newmx && ts.offset(ts.owner(), cfg) == own_offset {
        let mut next = ts.clone();
        next.set_owner_offset(own_offset);
        next.bump_owner_counter();
        return next;
    }
    let mut next = shift(ts, newmx, cfg).expect("newmx >= mx by construction");
    next.set_owner_offset(own_offset);
    next.clear_counters();
    next
}

/// Timestamp of the event at which `ts_j`'s owner receives a message stamped
/// `ts_m`, at local epoch `epoch_now`.
pub fn receive(
    ts_j: &Timestamp,
    ts_m: &Timestamp,
    epoch_now: Epoch,
    cfg: &ClockConfig,
) -> Timestamp {
    let newmx = ts_j.mx.max(ts_m.mx).max(epoch_now);
    let a = shift(ts_j, newmx, cfg).expect("newmx >= mx");
    let b = shift(ts_m, newmx, cfg).expect("newmx >= mx");
    let mut c = merge_same_epoch(&a, &b, cfg).expect("both shifted to newmx");
    // A process always knows its own epoch exactly.
    let own = cmp::min(c.offset(c.owner(), cfg), newmx - epoch_now);
    c.set_owner_offset(own);

    let same_as_local = equal_offset(ts_j, &c, cfg);
    let same_as_msg = equal_offset(ts_m, &c, cfg);
    match (same_as_local, same_as_msg) {
        (true, true) => {
            for e in &mut c.entries {
                let p = e.proc as usize;
                e.counter = ts_j.counter(p).max(ts_m.counter(p));
            }
            c.bump_owner_counter();
        }
        (true, false) => {
            c.adopt_counters(ts_j);
            c.bump_owner_counter();
        }
        (false, true) => {
            c.adopt_counters(ts_m);
            c.bump_owner_counter();
        }
        (false, false) => {}
    }
    c
}

/// Partial order on timestamps.
///
/// `e` is before `f` when `f.mx` is more than `epsilon` epochs ahead; or when
/// the two are within `epsilon` and `f`'s knowledge vector strictly dominates
/// `e`'s; or when the knowledge vectors are equal and `f`'s counters strictly
/// dominate `e`'s. Anything else is concurrent, including identical stamps.
///
/// Runs in time proportional to the number of stored entries.
pub fn compare(e: &Timestamp, f: &Timestamp, cfg: &ClockConfig) -> Ordering {
    let eps = cfg.epsilon();
    if f.mx > e.mx.saturating_add(eps) {
        return Ordering::Before;
    }
    if e.mx > f.mx.saturating_add(eps) {
        return Ordering::After;
    }

    let (emx, fmx) = (e.mx as i64, f.mx as i64);
    let eps_i = eps as i64;
    let mut e_le_f = true;
    let mut f_le_e = true;
    let mut differs = false;
    let mut union = 0usize;
    for_each_union(&e.entries, &f.entries, |x, y| {
        union += 1;
        let ke = emx - x.map_or(eps_i, |v| i64::from(v.offset));
        let kf = fmx - y.map_or(eps_i, |v| i64::from(v.offset));
        e_le_f &= ke <= kf;
        f_le_e &= kf <= ke;
        differs |= ke != kf;
    });
    if union < cfg.n() {
        // Processes absent from both: knowledge is mx - epsilon on each side.
        let (ke, kf) = (emx - eps_i, fmx - eps_i);
        e_le_f &= ke <= kf;
        f_le_e &= kf <= ke;
        differs |= ke != kf;
    }
    if differs {
        return match (e_le_f, f_le_e) {
            (true, false) => Ordering::Before,
            (false, true) => Ordering::After,
            _ => Ordering::Concurrent,
        };
    }

    let mut e_le_f = true;
    let mut f_le_e = true;
    let mut differs = false;
    for_each_union(&e.entries, &f.entries, |x, y| {
        let ce = x.map_or(0, |v| v.counter);
        let cf = y.map_or(0, |v| v.counter);
        e_le_f &= ce <= cf;
        f_le_e &= cf <= ce;
        differs |= ce != cf;
    });
    match (differs, e_le_f, f_le_e) {
        (true, true, false) => Ordering::Before,
        (true, false, true) => Ordering::After,
        _ => Ordering::Concurrent,
    }
}

/// Visits the union of two sorted entry lists, pairing entries for the same
/// process.
fn for_each_union(a: &[Entry], b: &[Entry], mut f: impl FnMut(Option<&Entry>, Option<&Entry>)) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let (x, y) = (&a[i], &b[j]);
        match x.proc.cmp(&y.proc) {
            cmp::Ordering::Equal => {
                f(Some(x), Some(y));
                i += 1;
                j += 1;
            }
            cmp::Ordering::Less => {
                f(Some(x), None);
                i += 1;
            }
            cmp::Ordering::Greater => {
                f(None, Some(y));
                j += 1;
            }
        }
    }
    for x in &a[i..] {
        f(Some(x), None);
    }
    for y in &b[j..] {
        f(None, Some(y));
    }
}
