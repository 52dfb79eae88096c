use serde::{Deserialize, Serialize};

use super::EmotionError;
use crate::learner::{outcome_deltas, LearnerError, PolicyKind, QTable, TdMode, TransitionModel};
use crate::mdp::{ActionId, StateId};
use crate::rng::SimRng;

/// How per-rollout discounted sums are pooled into one intensity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Mean,
    Max,
}

/// Breadth, depth, policy and discounting of imagination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnticipationParams {
    pub n_rollouts: usize,
    pub depth: usize,
    pub sim_policy: PolicyKind,
    pub gamma: f64,
    #[serde(default)]
    pub aggregation: Aggregation,
    /// Distortion applied to imagined outcome probabilities.
    #[serde(default)]
    pub perception: TdMode,
}

impl AnticipationParams {
    pub fn validate(&self) -> Result<(), EmotionError> {
        if self.n_rollouts == 0 {
            return Err(EmotionError::InvalidParameter("n_rollouts must be positive".into()));
        }
        if self.depth == 0 {
            return Err(EmotionError::InvalidParameter("depth must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(EmotionError::InvalidParameter(format!(
                "gamma = {} outside [0, 1]",
                self.gamma
            )));
        }
        self.sim_policy.validate()?;
        self.perception.validate()?;
        Ok(())
    }
}

/// One imagined transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RolloutRecord {
    pub rollout: usize,
    pub k: usize,
    pub state: StateId,
    pub action: ActionId,
    pub next_state: StateId,
    pub delta: f64,
}

/// Discounted positive and negative sums for one rollout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RolloutSummary {
    pub first_action: Option<ActionId>,
    pub hope: f64,
    pub fear: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Anticipation {
    pub hope: f64,
    pub fear: f64,
    pub records: Vec<RolloutRecord>,
    pub rollouts: Vec<RolloutSummary>,
}

impl Anticipation {
    /// Mean `hope - fear` of the rollouts that opened with `a`, or 0.
    pub fn motivation(&self, a: ActionId) -> f64 {
        let mut total = 0.0;
        let mut n = 0usize;
        for r in self.rollouts.iter().filter(|r| r.first_action == Some(a)) {
            total += r.hope - r.fear;
            n += 1;
        }
        if n == 0 {
            0.0
        } else {
            total / n as f64
        }
    }
}

/// Imagine `n_rollouts` futures from `s` through the model and collect the
/// TD errors met on the way.
///
/// One 64-bit key is drawn from `rng`; rollout `i` then runs on its own
/// stream `(key, i)`, so equal keys give paired rollouts across parameter
/// settings. Values are read, never written. A rollout stops at a terminal
/// state, after `depth` steps, or at a state-action pair the model has never
/// seen.
pub fn anticipate(
    q: &QTable,
    m: &TransitionModel,
    terminal: &[bool],
    s: StateId,
    params: &AnticipationParams,
    rng: &mut SimRng,
) -> Result<Anticipation, EmotionError> {
    let key = rng.next_u64();
    anticipate_keyed(q, m, terminal, s, params, key)
}

/// [`anticipate`] with an explicit rollout key.
pub fn anticipate_keyed(
    q: &QTable,
    m: &TransitionModel,
    terminal: &[bool],
    s: StateId,
    params: &AnticipationParams,
    key: u64,
) -> Result<Anticipation, EmotionError> {
    if s.0 >= q.n_states() || s.0 >= terminal.len() {
        return Err(EmotionError::InvalidState(s));
    }
    let mut out = Anticipation {
        rollouts: Vec::with_capacity(params.n_rollouts),
        ..Anticipation::default()
    };
    for i in 0..params.n_rollouts {
        let mut rng = SimRng::with_stream(key, i as u64);
        let summary = rollout(q, m, terminal, s, params, i, &mut rng, &mut out.records)?;
        out.rollouts.push(summary);
    }
    let n = out.rollouts.len() as f64;
    match params.aggregation {
        Aggregation::Mean => {
            let (mut h, mut f) = (0.0, 0.0);
            for r in &out.rollouts {
                h += r.hope;
                f += r.fear;
            }
            out.hope = h / n;
            out.fear = f / n;
        }
        Aggregation::Max => {
            out.hope = out.rollouts.iter().map(|r| r.hope).fold(0.0, f64::max);
            out.fear = out.rollouts.iter().map(|r| r.fear).fold(0.0, f64::max);
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn rollout(
    q: &QTable,
    m: &TransitionModel,
    terminal: &[bool],
    start: StateId,
    params: &AnticipationParams,
    index: usize,
    rng: &mut SimRng,
    records: &mut Vec<RolloutRecord>,
) -> Result<RolloutSummary, EmotionError> {
    let mut summary = RolloutSummary {
        first_action: None,
        hope: 0.0,
        fear: 0.0,
        steps: 0,
    };
    let mut state = start;
    let mut action: Option<ActionId> = None;
    let mut weight = 1.0;
    for k in 0..params.depth {
        if terminal[state.0] {
            break;
        }
        let a = match action {
            Some(a) => a,
            None => match choose(q, state, &params.sim_policy, rng)? {
                Some(a) => a,
                None => break,
            },
        };
        if k == 0 {
            summary.first_action = Some(a);
        }
        if m.visits(state, a)? == 0 {
            break;
        }
        let branches = outcome_deltas(q, m, terminal, state, a, &params.sim_policy)?;
        let probs = match params.perception {
            TdMode::Expected => branches.iter().map(|(p, _)| p.prob).collect(),
            mode => {
                let pairs: Vec<(f64, f64)> = branches.iter().map(|(p, d)| (p.prob, *d)).collect();
                mode.perceived(&pairs)
            }
        };
        let predicted = branches[rng.sample_index(&probs)].0;
        let next = predicted.next;
        let (q_next, a_next) = if terminal[next.0] {
            (0.0, None)
        } else {
            match choose(q, next, &params.sim_policy, rng)? {
                Some(a2) => (q.get(next, a2)?, Some(a2)),
                None => (0.0, None),
            }
        };
        let delta = predicted.reward + q.gamma() * q_next - q.get(state, a)?;
        records.push(RolloutRecord {
            rollout: index,
            k,
            state,
            action: a,
            next_state: next,
            delta,
        });
        summary.hope += weight * delta.max(0.0);
        summary.fear += weight * (-delta).max(0.0);
        summary.steps += 1;
        weight *= params.gamma;
        state = next;
        action = a_next;
        if action.is_none() && !terminal[next.0] {
            break;
        }
    }
    Ok(summary)
}

fn choose(q: &QTable, s: StateId, policy: &PolicyKind, rng: &mut SimRng) -> Result<Option<ActionId>, LearnerError> {
    let row = q.row(s)?;
    if row.is_empty() {
        return Ok(None);
    }
    Ok(Some(ActionId(rng.sample_index(&policy.distribution(row)))))
}

/// Apply `Q(s,a) += alpha * delta` for every imagined step, in order.
pub fn write_back(q: &mut QTable, records: &[RolloutRecord]) -> Result<(), EmotionError> {
    for r in records {
        q.nudge(r.state, r.action, r.delta)?;
    }
    Ok(())
}
