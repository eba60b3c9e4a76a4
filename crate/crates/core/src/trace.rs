//! Trace records shared by the simulator, the medium and the CLI.

use std::io::{self, Write};

use serde::Serialize;

/// One observable event on the medium.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceEvent {
    pub slot: u64,
    pub channel: u32,
    pub event: String,
    pub packet_hex: String,
}

impl TraceEvent {
    pub fn new(slot: u64, channel: u32, event: impl Into<String>, packet: &[u8]) -> Self {
        Self {
            slot,
            channel,
            event: event.into(),
            packet_hex: crate::codec::to_hex_digest(packet).into_string(),
        }
    }
}

/// One JSON object per line.
pub fn write_jsonl<W: Write, T: Serialize>(mut out: W, records: &[T]) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// CSV with a header row derived from the record's field names.
pub fn write_csv<W: Write, T: Serialize>(out: W, records: &[T]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
