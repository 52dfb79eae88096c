use serde::{Deserialize, Serialize};

use super::{LearnerError, PolicyKind, Predicted, QTable, TdError, TransitionModel};
use crate::mdp::{ActionId, StateId};

/// How per-outcome TD errors are collapsed into one learning signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum TdMode {
    #[default]
    Expected,
    /// Blend of the expected and the best-case outcome.
    Optimistic { beta: f64 },
    /// Blend of the expected and the worst-case outcome.
    Pessimistic { beta: f64 },
}

impl TdMode {
    pub fn validate(&self) -> Result<(), LearnerError> {
        match *self {
            Self::Expected => Ok(()),
            Self::Optimistic { beta } | Self::Pessimistic { beta } if (0.0..=1.0).contains(&beta) => Ok(()),
            _ => Err(LearnerError::InvalidParameter(format!(
                "beta out of [0, 1] in {self:?}"
            ))),
        }
    }

    /// Collapse `(prob, delta)` pairs. `E + beta * (extreme - E)` keeps the
    /// result monotone in beta under rounding.
    pub fn combine(&self, branches: &[(f64, f64)]) -> f64 {
        let mut expected = 0.0;
        for &(p, d) in branches {
            expected += p * d;
        }
        let live = branches.iter().filter(|(p, _)| *p > 0.0).map(|&(_, d)| d);
        match *self {
            Self::Expected => expected,
            Self::Optimistic { beta } => {
                let best = live.fold(f64::NEG_INFINITY, f64::max);
                expected + beta * (best - expected).max(0.0)
            }
            Self::Pessimistic { beta } => {
                let worst = live.fold(f64::INFINITY, f64::min);
                expected + beta * (worst - expected).min(0.0)
            }
        }
    }

    /// Outcome distribution whose plain expectation equals [`combine`]:
    /// `(1 - beta) * P + beta * (uniform over the extreme outcomes)`.
    ///
    /// [`combine`]: TdMode::combine
    pub fn perceived(&self, branches: &[(f64, f64)]) -> Vec<f64> {
        let (beta, extreme) = match *self {
            Self::Expected => return branches.iter().map(|&(p, _)| p).collect(),
            Self::Optimistic { beta } => (
                beta,
                branches
                    .iter()
                    .filter(|(p, _)| *p > 0.0)
                    .map(|&(_, d)| d)
                    .fold(f64::NEG_INFINITY, f64::max),
            ),
            Self::Pessimistic { beta } => (
                beta,
                branches
                    .iter()
                    .filter(|(p, _)| *p > 0.0)
                    .map(|&(_, d)| d)
                    .fold(f64::INFINITY, f64::min),
            ),
        };
        let hits = branches.iter().filter(|&&(p, d)| p > 0.0 && d == extreme).count() as f64;
        branches
            .iter()
            .map(|&(p, d)| {
                let bump = if p > 0.0 && d == extreme { beta / hits } else { 0.0 };
                (1.0 - beta) * p + bump
            })
            .collect()
    }
}

/// `V_pi(s) = sum_a pi(a|s) Q(s,a)`; zero for terminal states.
pub fn state_value(q: &QTable, s: StateId, terminal: bool, policy: &PolicyKind) -> Result<f64, LearnerError> {
    if terminal {
        return Ok(0.0);
    }
    let row = q.row(s)?;
    let mut v = 0.0;
    for (p, qa) in policy.distribution(row).iter().zip(row) {
        v += p * qa;
    }
    Ok(v)
}

/// Per-branch TD errors `r̂ + gamma * V_pi(s') - Q(s,a)` for every predicted
/// outcome of `(s, a)`.
pub fn outcome_deltas(
    q: &QTable,
    m: &TransitionModel,
    terminal: &[bool],
    s: StateId,
    a: ActionId,
    policy: &PolicyKind,
) -> Result<Vec<(Predicted, f64)>, LearnerError> {
    let current = q.get(s, a)?;
    m.predict(s, a)?
        .into_iter()
        .map(|p| {
            let is_terminal = terminal.get(p.next.0).copied().unwrap_or(false);
            let v = state_value(q, p.next, is_terminal, policy)?;
            Ok((p, p.reward + q.gamma() * v - current))
        })
        .collect()
}

/// Model-based TD error for `(s, a)` under `mode`.
pub fn expected_td(
    q: &QTable,
    m: &TransitionModel,
    terminal: &[bool],
    s: StateId,
    a: ActionId,
    mode: &TdMode,
    policy: &PolicyKind,
) -> Result<TdError, LearnerError> {
    let branches: Vec<(f64, f64)> = outcome_deltas(q, m, terminal, s, a, policy)?
        .into_iter()
        .map(|(p, d)| (p.prob, d))
        .collect();
    Ok(TdError(mode.combine(&branches)))
}
