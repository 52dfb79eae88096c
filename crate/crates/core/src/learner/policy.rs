use serde::{Deserialize, Serialize};

use super::{LearnerError, QTable};
use crate::mdp::{ActionId, StateId};
use crate::rng::SimRng;

/// Rule turning action values into action probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum PolicyKind {
    /// `p(a) = Q(s,a) / sum_i Q(s,a_i)`. When any value is nonpositive the
    /// values are first shifted to `Q - min(Q) + shift_eps`.
    Proportional {
        shift_eps: f64,
    },
    Softmax {
        tau: f64,
    },
    EpsilonGreedy {
        eps: f64,
    },
    #[default]
    Greedy,
}

impl PolicyKind {
    /// Uniform random choice.
    pub const UNIFORM: Self = Self::EpsilonGreedy { eps: 1.0 };

    pub fn validate(&self) -> Result<(), LearnerError> {
        let ok = match *self {
            Self::Proportional { shift_eps } => shift_eps.is_finite() && shift_eps > 0.0,
            Self::Softmax { tau } => tau.is_finite() && tau > 0.0,
            Self::EpsilonGreedy { eps } => (0.0..=1.0).contains(&eps),
            Self::Greedy => true,
        };
        if ok {
            Ok(())
        } else {
            Err(LearnerError::InvalidParameter(format!(
                "policy parameter out of range: {self:?}"
            )))
        }
    }

    /// Probabilities over `values` (one entry per valid action).
    pub fn distribution(&self, values: &[f64]) -> Vec<f64> {
        let n = values.len();
        if n == 0 {
            return Vec::new();
        }
        match *self {
            Self::Greedy => greedy(values),
            Self::EpsilonGreedy { eps } => {
                let uniform = eps / n as f64;
                greedy(values).into_iter().map(|g| (1.0 - eps) * g + uniform).collect()
            }
            Self::Softmax { tau } => {
                let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let w: Vec<f64> = values.iter().map(|v| ((v - max) / tau).exp()).collect();
                normalize(w)
            }
            Self::Proportional { shift_eps } => {
                let min = values.iter().copied().fold(f64::INFINITY, f64::min);
                let w: Vec<f64> = if min > 0.0 {
                    values.to_vec()
                } else {
                    values.iter().map(|v| v - min + shift_eps).collect()
                };
                normalize(w)
            }
        }
    }
}

fn greedy(values: &[f64]) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties = values.iter().filter(|&&v| v == max).count();
    values
        .iter()
        .map(|&v| if v == max { 1.0 / ties as f64 } else { 0.0 })
        .collect()
}

fn normalize(w: Vec<f64>) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

pub fn action_probabilities(q: &QTable, s: StateId, policy: &PolicyKind) -> Result<Vec<f64>, LearnerError> {
    let row = q.row(s)?;
    if row.is_empty() {
        return Err(LearnerError::NoActions(s));
    }
    Ok(policy.distribution(row))
}

pub fn select_action(q: &QTable, s: StateId, policy: &PolicyKind, rng: &mut SimRng) -> Result<ActionId, LearnerError> {
    let probs = action_probabilities(q, s, policy)?;
    Ok(ActionId(rng.sample_index(&probs)))
}

/// Like [`select_action`] but over arbitrary preferences (values plus any
/// motivational bonus).
pub fn select_from_preferences(prefs: &[f64], policy: &PolicyKind, rng: &mut SimRng) -> Option<ActionId> {
    if prefs.is_empty() {
        return None;
    }
    Some(ActionId(rng.sample_index(&policy.distribution(prefs))))
}
