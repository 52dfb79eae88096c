use std::path::Path;

use serde::Deserialize;

use super::{load_snapshot, IoError, Snapshot, TraceRow, TraceWriter};
use crate::emotion::{emotion_step, onset, AnticipationLedger, LedgerKey, Transition, ValueUpdate};
use crate::experiments::ModelSource;
use crate::mdp::{ActionId, StateId, StepOutcome};
use crate::rng::SimRng;

const REQUIRED_COLUMNS: [&str; 4] = ["state", "action", "reward", "next_state"];

/// A logged transition; only the four required columns must be present.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct LoggedStep {
    #[serde(default)]
    pub run_id: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub episode: Option<u64>,
    #[serde(default)]
    pub step: Option<u64>,
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
    #[serde(default)]
    pub next_action: Option<usize>,
    #[serde(default)]
    pub terminal: Option<bool>,
}

pub fn read_logged_steps(path: &Path) -> Result<Vec<LoggedStep>, IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::at(path, e))?;
    parse_logged_steps(&bytes)
}

pub fn parse_logged_steps(bytes: &[u8]) -> Result<Vec<LoggedStep>, IoError> {
    let mut rdr = csv::Reader::from_reader(bytes);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() {
        return Ok(Vec::new());
    }
    let missing: Vec<&str> = REQUIRED_COLUMNS
        .into_iter()
        .filter(|c| !headers.iter().any(|h| h == *c))
        .collect();
    if !missing.is_empty() {
        return Err(IoError::SchemaMismatch(format!(
            "trace lacks columns: {}",
            missing.join(", ")
        )));
    }
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| IoError::SchemaMismatch(format!("row {}: {e}", i + 1))))
        .collect()
}

/// Recompute the emotion columns of `steps` against the frozen snapshot.
///
/// Imagination replays from the snapshot's stream cursor, and a learned model
/// is updated from the logged transitions exactly as during the run, so a
/// trace recorded with value learning off is reproduced bit for bit.
pub fn annotate_steps(steps: &[LoggedStep], snapshot: &Snapshot) -> Result<Vec<TraceRow>, IoError> {
    let cfg = &snapshot.config;
    let mdp = cfg
        .environment_at(snapshot.agent.episode)
        .map_err(|e| IoError::SchemaMismatch(e.to_string()))?
        .enumerate()
        .map_err(|e| IoError::SchemaMismatch(e.to_string()))?;
    let terminal_flags = mdp.terminal_flags();
    let mut q = snapshot.agent.q.clone();
    let mut model = snapshot.agent.model.clone();
    if q.n_states() != mdp.n_states() || model.n_states() != mdp.n_states() {
        return Err(IoError::SchemaMismatch(
            "snapshot tables do not match the environment".into(),
        ));
    }
    let mut rng = SimRng::from_cursor(snapshot.agent.rng.imagination);
    let params = cfg.emotion_params();
    let model_learning = cfg.agent.model_learning && cfg.agent.model == ModelSource::Learned;
    let mut ledger = AnticipationLedger::new();
    let mut out = Vec::with_capacity(steps.len());
    let mut episode_counter = snapshot.agent.episode as u64;
    let mut previous_terminal = true;

    for (i, row) in steps.iter().enumerate() {
        let in_range = row.state < mdp.n_states()
            && row.next_state < mdp.n_states()
            && row.action < mdp.n_actions(StateId(row.state));
        if !in_range {
            return Err(IoError::SchemaMismatch(format!(
                "row {}: state/action outside the environment",
                i + 1
            )));
        }
        let starts = match row.step {
            Some(step) => step == 0,
            None => previous_terminal,
        };
        if starts && i > 0 && !previous_terminal {
            episode_counter += 1;
        }
        let episode = row.episode.unwrap_or(episode_counter);
        let key = LedgerKey::Episode(episode);
        let (s, a, next) = (StateId(row.state), ActionId(row.action), StateId(row.next_state));
        if starts {
            onset(&mut q, &model, &terminal_flags, s, &params, &mut ledger, key, &mut rng)?;
        }
        if model_learning {
            model.update(s, a, row.reward, next)?;
        }
        let terminal = row.terminal.unwrap_or(terminal_flags[next.0]);
        let next_action = if terminal {
            None
        } else {
            let inferred = row
                .next_action
                .or_else(|| steps.get(i + 1).filter(|r| r.state == row.next_state).map(|r| r.action));
            Some(ActionId(inferred.ok_or_else(|| {
                IoError::SchemaMismatch(format!("row {}: cannot tell the next action", i + 1))
            })?))
        };
        let transition = Transition {
            state: s,
            action: a,
            outcome: StepOutcome {
                next_state: next,
                reward: row.reward,
                terminal,
            },
            next_action,
        };
        let step = emotion_step(
            &mut q,
            &model,
            &terminal_flags,
            &transition,
            &params,
            &ValueUpdate::Frozen,
            &mut ledger,
            key,
            &mut rng,
        )?;
        out.push(TraceRow {
            run_id: row.run_id.clone().unwrap_or_else(|| snapshot.run_id.clone()),
            seed: row.seed.unwrap_or(snapshot.seed),
            episode,
            step: row.step.unwrap_or(0),
            state: row.state,
            action: row.action,
            reward: row.reward,
            next_state: row.next_state,
            next_action: next_action.map(|a| a.0),
            terminal,
            td_error: step.delta.value(),
            joy: step.signal.joy,
            distress: step.signal.distress,
            hope: step.signal.hope,
            fear: step.signal.fear,
            disappointment: step.signal.disappointment,
            relief: step.signal.relief,
        });
        if terminal {
            episode_counter = episode + 1;
        }
        previous_terminal = terminal;
    }
    Ok(out)
}

/// Annotate the trace at `trace` and write the result to `out`. Returns the
/// number of rows written.
pub fn annotate(trace: &Path, snapshot: &Path, out: &Path) -> Result<usize, IoError> {
    let snapshot = load_snapshot(snapshot)?;
    let steps = read_logged_steps(trace)?;
    let rows = annotate_steps(&steps, &snapshot)?;
    let file = std::fs::File::create(out).map_err(|e| IoError::at(out, e))?;
    let mut w = TraceWriter::new(std::io::BufWriter::new(file))?;
    for r in &rows {
        w.append(r)?;
    }
    w.finish()?;
    Ok(rows.len())
}
