//! JSON-lines trace files.
//!
//! Line 1 is a header with the schema version, simulation config, codec
//! layout, metrics and event count. Every further line is one event. Each
//! event carries its timestamp twice: as sparse maps and as the codec's hex
//! words; readers check that the two agree.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EventKind, EventRecord, RunMetrics, SimConfig, SimError, Trace};
use crate::clock::{ProcessId, Timestamp};
use crate::codec::{self, CodecLayout};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    schema_version: u32,
    sim_config: SimConfig,
    layout: CodecLayout,
    metrics: RunMetrics,
    event_count: usize,
}

#[derive(Serialize, Deserialize)]
struct EventLine {
    event_id: u64,
    proc: ProcessId,
    kind: EventKind,
    pt: u64,
    real_time: u64,
    msg_id: Option<u64>,
    repcl: Timestamp,
    repcl_words: Vec<String>,
    oracle_vc: Vec<u64>,
    oracle_mpt: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

pub fn write_trace_to<W: Write>(trace: &Trace, out: W) -> Result<(), SimError> {
    let mut out = BufWriter::new(out);
    let header = Header {
        schema_version: SCHEMA_VERSION,
        sim_config: trace.config.clone(),
        layout: trace.layout,
        metrics: trace.metrics.clone(),
        event_count: trace.events.len(),
    };
    serde_json::to_writer(&mut out, &header).map_err(std::io::Error::from)?;
    out.write_all(b"\n")?;
    for e in &trace.events {
        let words = codec::encode(&e.repcl, &trace.layout)?;
        let line = EventLine {
            event_id: e.event_id,
            proc: e.proc,
            kind: e.kind,
            pt: e.pt,
            real_time: e.real_time,
            msg_id: e.msg_id,
            repcl: e.repcl.clone(),
            repcl_words: codec::to_hex(&words),
            oracle_vc: e.oracle_vc.clone(),
            oracle_mpt: e.oracle_mpt,
            label: e.label.clone(),
        };
        serde_json::to_writer(&mut out, &line).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_trace(trace: &Trace, path: impl AsRef<Path>) -> Result<(), SimError> {
    write_trace_to(trace, File::create(path)?)
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Trace, SimError> {
    read_trace_from(File::open(path)?)
}

pub fn read_trace_from<R: Read>(input: R) -> Result<Trace, SimError> {
    let mut lines = BufReader::new(input).lines();
    let first = lines
        .next()
        .ok_or_else(|| SimError::Schema("empty file, no header".into()))??;
    let header: Header = serde_json::from_str(&first)
        .map_err(|e| SimError::Schema(format!("header: {e}")))?;
    if header.schema_version != SCHEMA_VERSION {
        return Err(SimError::Schema(format!(
            "schema_version {} is not supported (expected {SCHEMA_VERSION})",
            header.schema_version
        )));
    }
    let cfg = header.sim_config.clock;
    if header.layout.n != cfg.n() {
        return Err(SimError::Schema(format!(
            "layout is for n={}, config has n={}",
            header.layout.n,
            cfg.n()
        )));
    }

    let mut events = Vec::with_capacity(header.event_count);
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let ev: EventLine = serde_json::from_str(&line)
            .map_err(|e| SimError::Schema(format!("line {lineno}: {e}")))?;
        let bad = |msg: String| SimError::Schema(format!("line {lineno}: {msg}"));
        ev.repcl.validate(&cfg).map_err(|e| bad(e.to_string()))?;
        if ev.repcl.owner() != ev.proc {
            return Err(bad(format!(
                "timestamp owner {} differs from proc {}",
                ev.repcl.owner(),
                ev.proc
            )));
        }
        if ev.oracle_vc.len() != cfg.n() {
            return Err(bad(format!("oracle_vc has {} entries", ev.oracle_vc.len())));
        }
        let words = codec::from_hex(&ev.repcl_words).map_err(|e| bad(e.to_string()))?;
        let decoded =
            codec::decode(&words, &header.layout, ev.proc).map_err(|e| bad(e.to_string()))?;
        if decoded != ev.repcl {
            return Err(bad("repcl_words disagree with repcl".into()));
        }
        events.push(EventRecord {
            event_id: ev.event_id,
            proc: ev.proc,
            kind: ev.kind,
            pt: ev.pt,
            real_time: ev.real_time,
            msg_id: ev.msg_id,
            repcl: ev.repcl,
            oracle_vc: ev.oracle_vc,
            oracle_mpt: ev.oracle_mpt,
            label: ev.label,
        });
    }
    if events.len() != header.event_count {
        return Err(SimError::Schema(format!(
            "header announces {} events, file has {}",
            header.event_count,
            events.len()
        )));
    }
    Ok(Trace {
        config: header.sim_config,
        layout: header.layout,
        metrics: header.metrics,
        events,
    })
}
