use std::io::Write;

use serde::{Deserialize, Serialize};

use super::IoError;

/// One environment step as logged to CSV. Field order is the column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub run_id: String,
    pub seed: u64,
    pub episode: u64,
    pub step: u64,
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
    pub next_action: Option<usize>,
    pub terminal: bool,
    pub td_error: f64,
    pub joy: f64,
    pub distress: f64,
    pub hope: f64,
    pub fear: f64,
    pub disappointment: f64,
    pub relief: f64,
}

impl TraceRow {
    pub const HEADER: [&'static str; 17] = [
        "run_id",
        "seed",
        "episode",
        "step",
        "state",
        "action",
        "reward",
        "next_state",
        "next_action",
        "terminal",
        "td_error",
        "joy",
        "distress",
        "hope",
        "fear",
        "disappointment",
        "relief",
    ];
}

/// CSV trace writer. The header goes out on construction, so a trace with no
/// steps is still a valid, header-only file.
pub struct TraceWriter<W: Write> {
    inner: csv::Writer<W>,
    rows: usize,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(out: W) -> Result<Self, IoError> {
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        inner.write_record(TraceRow::HEADER)?;
        Ok(Self { inner, rows: 0 })
    }

    pub fn append(&mut self, row: &TraceRow) -> Result<(), IoError> {
        self.inner.serialize(row)?;
        self.rows += 1;
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn finish(mut self) -> Result<W, IoError> {
        self.inner.flush()?;
        self.inner
            .into_inner()
            .map_err(|e| IoError::from(std::io::Error::new(e.error().kind(), e.error().to_string())))
    }
}

pub fn append_trace<W: Write>(writer: &mut TraceWriter<W>, row: &TraceRow) -> Result<(), IoError> {
    writer.append(row)
}

/// Trace rows serialized to CSV bytes.
pub fn trace_bytes(rows: &[TraceRow]) -> Result<Vec<u8>, IoError> {
    let mut w = TraceWriter::new(Vec::new())?;
    for r in rows {
        w.append(r)?;
    }
    w.finish()
}

pub fn write_trace(path: &std::path::Path, rows: &[TraceRow]) -> Result<(), IoError> {
    let bytes = trace_bytes(rows)?;
    std::fs::write(path, bytes).map_err(|e| IoError::at(path, e))
}
