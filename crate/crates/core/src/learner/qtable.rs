use serde::{Deserialize, Serialize};

use super::LearnerError;
use crate::mdp::{ActionId, StateId, TabularMdp};

/// Signed TD error in reward units.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TdError(pub f64);

impl TdError {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Action values with the SARSA learning rate and discount.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    alpha: f64,
    gamma: f64,
    values: Vec<Vec<f64>>,
}

impl QTable {
    /// Zero-initialized table with `action_counts[s]` actions in state `s`.
    pub fn new(action_counts: &[usize], alpha: f64, gamma: f64) -> Result<Self, LearnerError> {
        check_rates(alpha, gamma)?;
        Ok(Self {
            alpha,
            gamma,
            values: action_counts.iter().map(|&n| vec![0.0; n]).collect(),
        })
    }

    pub fn for_mdp(mdp: &TabularMdp, alpha: f64, gamma: f64) -> Result<Self, LearnerError> {
        Self::new(&mdp.action_counts(), alpha, gamma)
    }

    pub fn from_values(values: Vec<Vec<f64>>, alpha: f64, gamma: f64) -> Result<Self, LearnerError> {
        check_rates(alpha, gamma)?;
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(LearnerError::InvalidParameter("action values must be finite".into()));
        }
        Ok(Self { alpha, gamma, values })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn n_states(&self) -> usize {
        self.values.len()
    }

    pub fn n_actions(&self, s: StateId) -> usize {
        self.values.get(s.0).map_or(0, Vec::len)
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn row(&self, s: StateId) -> Result<&[f64], LearnerError> {
        self.values
            .get(s.0)
            .map(Vec::as_slice)
            .ok_or(LearnerError::IndexOutOfRange { state: s, action: None })
    }

    pub fn get(&self, s: StateId, a: ActionId) -> Result<f64, LearnerError> {
        self.values
            .get(s.0)
            .and_then(|row| row.get(a.0))
            .copied()
            .ok_or(LearnerError::IndexOutOfRange {
                state: s,
                action: Some(a),
            })
    }

    pub fn set(&mut self, s: StateId, a: ActionId, v: f64) -> Result<(), LearnerError> {
        let slot = self
            .values
            .get_mut(s.0)
            .and_then(|row| row.get_mut(a.0))
            .ok_or(LearnerError::IndexOutOfRange {
                state: s,
                action: Some(a),
            })?;
        *slot = v;
        Ok(())
    }

    /// `Q(s,a) += alpha * delta`.
    pub fn nudge(&mut self, s: StateId, a: ActionId, delta: f64) -> Result<(), LearnerError> {
        let q = self.get(s, a)?;
        self.set(s, a, q + self.alpha * delta)
    }
}

fn check_rates(alpha: f64, gamma: f64) -> Result<(), LearnerError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(LearnerError::InvalidParameter(format!(
            "alpha = {alpha} outside (0, 1]"
        )));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(LearnerError::InvalidParameter(format!(
            "gamma = {gamma} outside [0, 1]"
        )));
    }
    Ok(())
}

/// `r + gamma * Q(s', a') - Q(s, a)`, with a zero bootstrap when the episode
/// ended (`a_next = None`).
pub fn td_error(
    q: &QTable,
    s: StateId,
    a: ActionId,
    r: f64,
    s_next: StateId,
    a_next: Option<ActionId>,
) -> Result<TdError, LearnerError> {
    let current = q.get(s, a)?;
    let bootstrap = match a_next {
        Some(a2) => q.get(s_next, a2)?,
        None => {
            q.row(s_next)?;
            0.0
        }
    };
    Ok(TdError(r + q.gamma * bootstrap - current))
}

/// One SARSA step: returns the TD error and moves `Q(s,a)` by `alpha` times it.
pub fn sarsa_update(
    q: &mut QTable,
    s: StateId,
    a: ActionId,
    r: f64,
    s_next: StateId,
    a_next: Option<ActionId>,
) -> Result<TdError, LearnerError> {
    let delta = td_error(q, s, a, r, s_next, a_next)?;
    q.nudge(s, a, delta.0)?;
    Ok(delta)
}
