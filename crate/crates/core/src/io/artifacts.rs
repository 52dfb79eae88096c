use std::path::{Path, PathBuf};

use super::{save_snapshot, series_csv, summary_bytes, write_trace, IoError, Snapshot};
use crate::experiments::ScenarioOutput;

/// File-system safe form of a series or run name.
pub fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '-'
            }
        })
        .collect()
}

/// Write the summary, plot data and per-run traces and snapshots under `dir`.
/// Returns the files written.
pub fn write_outputs(dir: &Path, output: &ScenarioOutput, audit_rollouts: bool) -> Result<Vec<PathBuf>, IoError> {
    let plots = dir.join("plots");
    std::fs::create_dir_all(&plots).map_err(|e| IoError::at(&plots, e))?;
    let mut written = Vec::new();

    let path = dir.join("summary.json");
    std::fs::write(&path, summary_bytes(&output.summary)?).map_err(|e| IoError::at(&path, e))?;
    written.push(path);

    for (name, series) in output.summary.series.iter().chain(&output.summary.tables) {
        let path = plots.join(format!("{}.csv", file_stem(name)));
        std::fs::write(&path, series_csv(series)?).map_err(|e| IoError::at(&path, e))?;
        written.push(path);
    }

    for seed in &output.seeds {
        for run in &seed.runs {
            let stem = format!("{}_seed{}", file_stem(&run.run_id), run.seed);
            let path = dir.join(format!("trace_{stem}.csv"));
            write_trace(&path, &run.trace)?;
            written.push(path);

            let path = dir.join(format!("snapshot_{stem}.json"));
            save_snapshot(
                &Snapshot::new(&run.run_id, run.seed, run.config.clone(), run.initial.clone()),
                &path,
            )?;
            written.push(path);

            let path = dir.join(format!("final_{stem}.json"));
            save_snapshot(
                &Snapshot::new(&run.run_id, run.seed, run.config.clone(), run.final_state.clone()),
                &path,
            )?;
            written.push(path);

            if audit_rollouts {
                let path = dir.join(format!("rollouts_{stem}.json"));
                let mut bytes = serde_json::to_vec(&run.rollouts)?;
                bytes.push(b'\n');
                std::fs::write(&path, bytes).map_err(|e| IoError::at(&path, e))?;
                written.push(path);
            }
        }
    }
    Ok(written)
}
