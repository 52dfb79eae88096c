use std::path::Path;

use super::IoError;
use crate::experiments::{RunSummary, SeriesSummary};

pub fn load_summary(path: &Path) -> Result<RunSummary, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::at(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn summary_bytes(summary: &RunSummary) -> Result<Vec<u8>, IoError> {
    let mut bytes = serde_json::to_vec_pretty(summary)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// `x,mean,stdev` rows for one series.
pub fn series_csv(series: &SeriesSummary) -> Result<Vec<u8>, IoError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x", "mean", "stdev"])?;
    for ((x, m), s) in series.x.iter().zip(&series.mean).zip(&series.stdev) {
        w.serialize((x, m, s))?;
    }
    w.flush()?;
    w.into_inner().map_err(|e| IoError::SchemaMismatch(e.to_string()))
}

pub fn plot_data(summary: &Path, series: &str, out: &Path) -> Result<usize, IoError> {
    let summary = load_summary(summary)?;
    let found = summary
        .lookup(series)
        .ok_or_else(|| IoError::UnknownSeries(series.to_string()))?;
    std::fs::write(out, series_csv(found)?).map_err(|e| IoError::at(out, e))?;
    Ok(found.x.len())
}
