use super::{ActionId, EnvironmentSpec, MdpError, StateId, StepOutcome, TabularMdp};
use crate::rng::{streams, SimRng};

/// A running environment: spec, current state and its own random stream.
#[derive(Debug, Clone)]
pub struct EnvironmentInstance {
    spec: EnvironmentSpec,
    mdp: TabularMdp,
    current: StateId,
    rng: SimRng,
}

pub fn build_env(spec: EnvironmentSpec, seed: u64) -> Result<EnvironmentInstance, MdpError> {
    let mdp = spec.enumerate()?;
    let current = mdp.start();
    Ok(EnvironmentInstance {
        spec,
        mdp,
        current,
        rng: SimRng::with_stream(seed, streams::ENVIRONMENT),
    })
}

impl EnvironmentInstance {
    pub fn spec(&self) -> &EnvironmentSpec {
        &self.spec
    }

    pub fn mdp(&self) -> &TabularMdp {
        &self.mdp
    }

    pub fn current_state(&self) -> StateId {
        self.current
    }

    pub fn rng(&self) -> &SimRng {
        &self.rng
    }

    /// Replace the random stream, e.g. when resuming from a saved cursor.
    pub fn set_rng(&mut self, rng: SimRng) {
        self.rng = rng;
    }

    /// Back to the start state. The random stream keeps running.
    pub fn reset(&mut self) -> StateId {
        self.current = self.mdp.start();
        self.current
    }

    pub fn step(&mut self, action: ActionId) -> Result<StepOutcome, MdpError> {
        let s = self.current;
        if self.mdp.is_terminal(s) {
            return Err(MdpError::SteppedTerminal(s));
        }
        if action.0 >= self.mdp.n_actions(s) {
            return Err(MdpError::InvalidAction { state: s, action });
        }
        let outs = self.mdp.outcomes(s, action.0);
        let probs: Vec<f64> = outs.iter().map(|o| o.prob).collect();
        let o = outs[self.rng.sample_index(&probs)];
        self.current = o.next;
        Ok(StepOutcome {
            next_state: o.next,
            reward: o.reward,
            terminal: self.mdp.is_terminal(o.next),
        })
    }

    /// Swap in a new parameterization of the same state space, keeping the
    /// current state and random stream.
    pub fn set_spec(&mut self, spec: EnvironmentSpec) -> Result<(), MdpError> {
        let mdp = spec.enumerate()?;
        if mdp.action_counts() != self.mdp.action_counts() {
            return Err(MdpError::InvalidSpec(
                "phase override changes the state/action layout".into(),
            ));
        }
        self.spec = spec;
        self.mdp = mdp;
        Ok(())
    }
}
