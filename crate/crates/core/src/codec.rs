//! Fixed-layout binary encoding of timestamps as 64-bit words.
//!
//! Layout, for a timestamp with `x` stored offsets:
//!
//! ```text
//! word 0      mx
//! word 1      presence bitmap, bit k set iff process k has an offset
//! words 2..   x offsets, offset_bits each, ascending process order
//! then        x counters, counter_bits each, same order
//! ```
//!
//! Each packed region is a little-endian bitstream: value `i` occupies bits
//! `i*w .. (i+1)*w` of the region, counting from bit 0 of its first word.
//! Values may straddle word boundaries. Unused trailing bits are zero.
//!
//! The owner is not part of the encoding; decoders supply it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::{ClockConfig, ProcessId, Timestamp, MAX_PROCESSES};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("field width must be in 1..=64 bits, got {0}")]
    Width(u32),
    #[error("offset_bits={offset_bits} cannot hold epsilon={epsilon}")]
    LayoutTooNarrow { offset_bits: u32, epsilon: u64 },
    #[error("offset {value} of process {proc} does not fit in {bits} bits")]
    OffsetOverflow { proc: ProcessId, value: u64, bits: u32 },
    #[error("counter {value} of process {proc} does not fit in {bits} bits")]
    CounterOverflow { proc: ProcessId, value: u64, bits: u32 },
    #[error("process count must be in 1..={MAX_PROCESSES}, got {0}")]
    ProcessCount(usize),
    #[error("malformed encoding: {0}")]
    Malformed(String),
    #[error("decoded timestamp is invalid: {0}")]
    Invalid(#[from] crate::clock::ClockError),
}

pub const DEFAULT_OFFSET_BITS: u32 = 4;
pub const DEFAULT_COUNTER_BITS: u32 = 8;

/// Bit widths of the packed fields, plus the process count that bounds the
/// bitmap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodecLayout {
    pub n: usize,
    pub offset_bits: u32,
    pub counter_bits: u32,
}

impl CodecLayout {
    pub fn new(n: usize, offset_bits: u32, counter_bits: u32) -> Result<Self, CodecError> {
        if n == 0 || n > MAX_PROCESSES {
            return Err(CodecError::ProcessCount(n));
        }
        for w in [offset_bits, counter_bits] {
            if w == 0 || w > 64 {
                return Err(CodecError::Width(w));
            }
        }
        Ok(CodecLayout {
            n,
            offset_bits,
            counter_bits,
        })
    }

    /// 4-bit offsets and 8-bit counters.
    pub fn default_for(n: usize) -> Self {
        CodecLayout {
            n: n.clamp(1, MAX_PROCESSES),
            offset_bits: DEFAULT_OFFSET_BITS,
            counter_bits: DEFAULT_COUNTER_BITS,
        }
    }

    /// The default widths, with `offset_bits` widened if `epsilon` needs more.
    pub fn for_clock(cfg: &ClockConfig) -> Self {
        CodecLayout {
            n: cfg.n(),
            offset_bits: DEFAULT_OFFSET_BITS.max(bits_for(cfg.epsilon())),
            counter_bits: DEFAULT_COUNTER_BITS,
        }
    }

    /// Returns a copy whose counter field can hold `max_counter`.
    pub fn widen_counters(self, max_counter: u64) -> Self {
        CodecLayout {
            counter_bits: self.counter_bits.max(bits_for(max_counter)),
            ..self
        }
    }

    /// Every stored offset (including an owner offset at the cap) must fit.
    pub fn check_fits(&self, cfg: &ClockConfig) -> Result<(), CodecError> {
        if mask(self.offset_bits) < cfg.epsilon() {
            return Err(CodecError::LayoutTooNarrow {
                offset_bits: self.offset_bits,
                epsilon: cfg.epsilon(),
            });
        }
        Ok(())
    }

    /// Words needed for a timestamp with `stored` offsets.
    pub fn words_for(&self, stored: usize) -> usize {
        let x = stored as u64;
        2 + (x * u64::from(self.offset_bits)).div_ceil(64) as usize
            + (x * u64::from(self.counter_bits)).div_ceil(64) as usize
    }
}

/// `2 + ceil(x*offset_bits/64) + ceil(x*counter_bits/64)` for `x` stored
/// offsets. Always equals `encode(ts, layout)?.len()`.
pub fn size_in_words(ts: &Timestamp, layout: &CodecLayout) -> usize {
    layout.words_for(ts.stored_count())
}

/// Number of bits needed to represent `v` (at least 1).
fn bits_for(v: u64) -> u32 {
    (64 - v.leading_zeros()).max(1)
}

fn mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

struct BitWriter {
    words: Vec<u64>,
    bit: u64,
}

impl BitWriter {
    fn new(values: usize, width: u32) -> Self {
        let n = (values as u64 * u64::from(width)).div_ceil(64) as usize;
        BitWriter {
            words: vec![0; n],
            bit: 0,
        }
    }

    fn push(&mut self, v: u64, width: u32) {
        let w = (self.bit / 64) as usize;
        let s = (self.bit % 64) as u32;
        self.words[w] |= v << s;
        if s + width > 64 {
            self.words[w + 1] |= v >> (64 - s);
        }
        self.bit += u64::from(width);
    }
}

fn read_bits(words: &[u64], index: usize, width: u32) -> u64 {
    let bit = index as u64 * u64::from(width);
    let w = (bit / 64) as usize;
    let s = (bit % 64) as u32;
    let mut v = words[w] >> s;
    if s + width > 64 {
        v |= words[w + 1] << (64 - s);
    }
    v & mask(width)
}

/// Bits of `words` past the first `used` bits are all zero.
fn padding_clear(words: &[u64], used: u64) -> bool {
    let full = (used / 64) as usize;
    let rem = (used % 64) as u32;
    let mut rest = words.iter().skip(full);
    if rem != 0 {
        match rest.next() {
            Some(w) if w >> rem != 0 => return false,
            _ => {}
        }
    }
    rest.all(|&w| w == 0)
}

/// Encodes `ts` into `layout.words_for(ts.stored_count())` words.
pub fn encode(ts: &Timestamp, layout: &CodecLayout) -> Result<Vec<u64>, CodecError> {
    let x = ts.stored_count();
    let mut out = Vec::with_capacity(layout.words_for(x));
    out.push(ts.mx());
    out.push(ts.presence());

    let ob = layout.offset_bits;
    let mut offs = BitWriter::new(x, ob);
    for (proc, value) in ts.offsets() {
        if value > mask(ob) {
            return Err(CodecError::OffsetOverflow {
                proc,
                value,
                bits: ob,
            });
        }
        offs.push(value, ob);
    }
    out.extend(offs.words);

    let cb = layout.counter_bits;
    let mut ctrs = BitWriter::new(x, cb);
    for (proc, _) in ts.offsets() {
        let value = ts.counter(proc);
        if value > mask(cb) {
            return Err(CodecError::CounterOverflow {
                proc,
                value,
                bits: cb,
            });
        }
        ctrs.push(value, cb);
    }
    out.extend(ctrs.words);
    Ok(out)
}

/// Inverse of [`encode`]. Rejects wrong lengths and non-zero padding.
pub fn decode(
    enc: &[u64],
    layout: &CodecLayout,
    owner: ProcessId,
) -> Result<Timestamp, CodecError> {
    if enc.len() < 2 {
        return Err(CodecError::Malformed(format!(
            "{} words, need at least 2",
            enc.len()
        )));
    }
    let mx = enc[0];
    let bitmap = enc[1];
    if layout.n < 64 && bitmap >> layout.n != 0 {
        return Err(CodecError::Malformed(format!(
            "bitmap {bitmap:#x} names a process >= n={}",
            layout.n
        )));
    }
    let x = bitmap.count_ones() as usize;
    let expected = layout.words_for(x);
    if enc.len() != expected {
        return Err(CodecError::Malformed(format!(
            "{} words, expected {expected}",
            enc.len()
        )));
    }
    let (ob, cb) = (layout.offset_bits, layout.counter_bits);
    let off_words = (x as u64 * u64::from(ob)).div_ceil(64) as usize;
    let offs = &enc[2..2 + off_words];
    let ctrs = &enc[2 + off_words..];
    if !padding_clear(offs, x as u64 * u64::from(ob))
        || !padding_clear(ctrs, x as u64 * u64::from(cb))
    {
        return Err(CodecError::Malformed("non-zero padding bits".into()));
    }

    let procs: Vec<ProcessId> = (0..layout.n)
        .filter(|k| bitmap & (1u64 << k) != 0)
        .collect();
    let offsets: Vec<(ProcessId, u64)> = procs
        .iter()
        .enumerate()
        .map(|(i, &p)| (p, read_bits(offs, i, ob)))
        .collect();
    let counters: Vec<(ProcessId, u64)> = procs
        .iter()
        .enumerate()
        .map(|(i, &p)| (p, read_bits(ctrs, i, cb)))
        .collect();
    Ok(Timestamp::from_parts(owner, mx, &offsets, &counters)?)
}

/// Lowercase, zero-padded, 16 hex digits per word.
pub fn to_hex(words: &[u64]) -> Vec<String> {
    words.iter().map(|w| format!("{w:016x}")).collect()
}

pub fn from_hex(words: &[String]) -> Result<Vec<u64>, std::num::ParseIntError> {
    words.iter().map(|s| u64::from_str_radix(s, 16)).collect()
}
