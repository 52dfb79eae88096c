//! Tabular MDPs, the built-in scenario environments and a seeded stepper.

mod env;
mod spec;
mod tabular;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use env::{build_env, EnvironmentInstance};
pub use spec::{
    EnvironmentSpec, ExplicitOutcome, ExplicitState, LotteryReveal, RepeatedRewardChain, SlipperyCliff,
    TabularExplicit, TwoArmedGamble,
};
pub use tabular::{Outcome, StateSpec, TabularMdp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(pub usize);

impl std::fmt::Display for StateId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::fmt::Display for ActionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub next_state: StateId,
    pub reward: f64,
    pub terminal: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum MdpError {
    #[error("invalid environment spec: {0}")]
    InvalidSpec(String),
    #[error("action {action} is not valid in state {state}")]
    InvalidAction { state: StateId, action: ActionId },
    #[error("state {0} is terminal")]
    SteppedTerminal(StateId),
}

/// Exact tables for `spec`: the ground truth the stepper samples from.
pub fn enumerate_mdp(spec: &EnvironmentSpec) -> Result<TabularMdp, MdpError> {
    spec.enumerate()
}
