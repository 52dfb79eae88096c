use serde::{Deserialize, Serialize};

use super::StateId;

/// One branch of `P(s'|s,a)` with the reward paid on that branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub next: StateId,
    pub prob: f64,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpec {
    pub terminal: bool,
    /// Outcome lists indexed by action.
    pub actions: Vec<Vec<Outcome>>,
}

impl StateSpec {
    pub fn choice(actions: Vec<Vec<Outcome>>) -> Self {
        Self {
            terminal: false,
            actions,
        }
    }

    /// Terminal states are filled in by [`TabularMdp::new`] with a single
    /// zero-reward self loop.
    pub fn terminal() -> Self {
        Self {
            terminal: true,
            actions: Vec::new(),
        }
    }
}

/// Fully enumerated finite MDP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularMdp {
    start: StateId,
    states: Vec<StateSpec>,
}

impl TabularMdp {
    pub fn new(start: StateId, mut states: Vec<StateSpec>) -> Self {
        for (i, s) in states.iter_mut().enumerate() {
            if s.terminal {
                s.actions = vec![vec![Outcome {
                    next: StateId(i),
                    prob: 1.0,
                    reward: 0.0,
                }]];
            }
        }
        Self { start, states }
    }

    pub fn start(&self) -> StateId {
        self.start
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_actions(&self, s: StateId) -> usize {
        self.states[s.0].actions.len()
    }

    pub fn max_actions(&self) -> usize {
        self.states.iter().map(|s| s.actions.len()).max().unwrap_or(0)
    }

    /// Action counts for every state, in state order.
    pub fn action_counts(&self) -> Vec<usize> {
        self.states.iter().map(|s| s.actions.len()).collect()
    }

    pub fn is_terminal(&self, s: StateId) -> bool {
        self.states[s.0].terminal
    }

    pub fn terminal_flags(&self) -> Vec<bool> {
        self.states.iter().map(|s| s.terminal).collect()
    }

    pub fn outcomes(&self, s: StateId, a: usize) -> &[Outcome] {
        &self.states[s.0].actions[a]
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.states.len()).map(StateId)
    }
}
