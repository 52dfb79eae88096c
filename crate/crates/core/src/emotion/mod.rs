//! Emotions read off TD errors: joy and distress from realized errors, hope
//! and fear from imagined ones, disappointment and relief from settling
//! anticipation against what actually happened.

mod anticipate;
mod ledger;
mod signal;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learner::{
    expected_td, sarsa_update, td_error, LearnerError, PolicyKind, QTable, TdError, TdMode, TransitionModel,
};
use crate::mdp::{ActionId, StateId, StepOutcome};
use crate::rng::SimRng;

pub use anticipate::{
    anticipate, anticipate_keyed, write_back, Aggregation, Anticipation, AnticipationParams, RolloutRecord,
    RolloutSummary,
};
pub use ledger::{register_anticipation, resolve_outcome, AnticipationLedger, LedgerKey, Pending, Resolution};
pub use signal::{joy_distress, EmotionSignal};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmotionError {
    #[error("state {0} is not part of the value table")]
    InvalidState(StateId),
    #[error("no pending anticipation for {0}")]
    UnknownKey(LedgerKey),
    #[error("{0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Learner(#[from] LearnerError),
}

/// Everything the per-step emotion computation needs besides the tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmotionParams {
    pub anticipation: AnticipationParams,
    /// Fraction of each step's hope/fear registered as already felt.
    pub kappa: f64,
    /// Let imagined TD errors move the action values.
    pub write_back: bool,
}

impl EmotionParams {
    pub fn validate(&self) -> Result<(), EmotionError> {
        self.anticipation.validate()?;
        if !(0.0..=1.0).contains(&self.kappa) {
            return Err(EmotionError::InvalidParameter(format!(
                "kappa = {} outside [0, 1]",
                self.kappa
            )));
        }
        Ok(())
    }
}

/// How the realized step changes the action values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ValueUpdate {
    Frozen,
    Sarsa,
    /// `Q(s,a) += alpha * expected_td(mode)` through the model.
    Model {
        mode: TdMode,
        policy: PolicyKind,
    },
}

/// One realized environment transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: StateId,
    pub action: ActionId,
    pub outcome: StepOutcome,
    /// Action chosen at the next state; `None` when the step ended the episode.
    pub next_action: Option<ActionId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepEmotion {
    pub signal: EmotionSignal,
    pub delta: TdError,
    pub anticipation: Option<Anticipation>,
}

/// Anticipation at the start of an episode, registered under `key`.
#[allow(clippy::too_many_arguments)]
pub fn onset(
    q: &mut QTable,
    m: &TransitionModel,
    terminal: &[bool],
    s0: StateId,
    params: &EmotionParams,
    ledger: &mut AnticipationLedger,
    key: LedgerKey,
    rng: &mut SimRng,
) -> Result<Anticipation, EmotionError> {
    let a = anticipate(q, m, terminal, s0, &params.anticipation, rng)?;
    if params.write_back {
        write_back(q, &a.records)?;
    }
    ledger.register(key, params.kappa * a.hope, params.kappa * a.fear);
    Ok(a)
}

/// Imagination at the step's next state, then [`realize_step`].
#[allow(clippy::too_many_arguments)]
pub fn emotion_step(
    q: &mut QTable,
    m: &TransitionModel,
    terminal: &[bool],
    step: &Transition,
    params: &EmotionParams,
    update: &ValueUpdate,
    ledger: &mut AnticipationLedger,
    key: LedgerKey,
    rng: &mut SimRng,
) -> Result<StepEmotion, EmotionError> {
    let anticipation = if step.outcome.terminal {
        None
    } else {
        let a = anticipate(q, m, terminal, step.outcome.next_state, &params.anticipation, rng)?;
        if params.write_back {
            write_back(q, &a.records)?;
        }
        Some(a)
    };
    realize_step(q, m, terminal, step, anticipation, params.kappa, update, ledger, key)
}

/// Realized TD error, joy/distress, registration of the supplied
/// anticipation and, on terminal steps, settlement of `key`.
#[allow(clippy::too_many_arguments)]
pub fn realize_step(
    q: &mut QTable,
    m: &TransitionModel,
    terminal: &[bool],
    step: &Transition,
    anticipation: Option<Anticipation>,
    kappa: f64,
    update: &ValueUpdate,
    ledger: &mut AnticipationLedger,
    key: LedgerKey,
) -> Result<StepEmotion, EmotionError> {
    let Transition {
        state: s,
        action: a,
        outcome,
        next_action,
    } = *step;
    let a_next = if outcome.terminal { None } else { next_action };
    let delta = match update {
        ValueUpdate::Frozen => td_error(q, s, a, outcome.reward, outcome.next_state, a_next)?,
        ValueUpdate::Sarsa => sarsa_update(q, s, a, outcome.reward, outcome.next_state, a_next)?,
        ValueUpdate::Model { mode, policy } => {
            let realized = td_error(q, s, a, outcome.reward, outcome.next_state, a_next)?;
            let planned = expected_td(q, m, terminal, s, a, mode, policy)?;
            q.nudge(s, a, planned.value())?;
            realized
        }
    };
    let (joy, distress) = joy_distress(delta);
    let mut signal = EmotionSignal {
        joy,
        distress,
        ..EmotionSignal::default()
    };
    if let Some(ant) = &anticipation {
        signal.hope = ant.hope;
        signal.fear = ant.fear;
    }
    if outcome.terminal {
        if ledger.is_pending(&key) {
            let r = ledger.resolve(&key, delta)?;
            signal.disappointment = r.disappointment;
            signal.relief = r.relief;
        }
    } else {
        ledger.register(key, kappa * signal.hope, kappa * signal.fear);
    }
    Ok(StepEmotion {
        signal,
        delta,
        anticipation,
    })
}
