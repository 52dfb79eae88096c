//! SARSA value learning, action selection, count-based transition models and
//! the optimistic/pessimistic TD variants.

mod model;
mod planning;
mod policy;
mod qtable;
mod td;

use thiserror::Error;

use crate::mdp::{ActionId, StateId};

pub use model::{model_predict, model_update, Predicted, TransitionModel};
pub use planning::{exact_q, greedy_action, solve_values};
pub use policy::{action_probabilities, select_action, select_from_preferences, PolicyKind};
pub use qtable::{sarsa_update, td_error, QTable, TdError};
pub use td::{expected_td, outcome_deltas, state_value, TdMode};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnerError {
    #[error("index out of range: state {state}{}", .action.map(|a| format!(", action {a}")).unwrap_or_default())]
    IndexOutOfRange { state: StateId, action: Option<ActionId> },
    #[error("state {0} has no actions")]
    NoActions(StateId),
    #[error("no observations for state {state}, action {action}")]
    Unvisited { state: StateId, action: ActionId },
    #[error("{0}")]
    InvalidParameter(String),
}
