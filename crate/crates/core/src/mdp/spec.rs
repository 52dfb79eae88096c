use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::tabular::{Outcome, StateSpec, TabularMdp};
use super::{MdpError, StateId};

fn default_one() -> f64 {
    1.0
}
fn default_length() -> usize {
    1
}
fn default_fall_penalty() -> f64 {
    -10.0
}
fn default_jackpot() -> f64 {
    100.0
}

/// A single action that pays `reward` after `length` steps, then ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepeatedRewardChain {
    #[serde(default = "default_one", alias = "r")]
    pub reward: f64,
    #[serde(default = "default_length")]
    pub length: usize,
}

/// A 1xL corridor along a cliff edge.
///
/// Cells `0..length` are walkable, state `length` is the goal and
/// `length + 1` the cliff bottom. Actions are forward (0) and back (1); back
/// at cell 0 bumps the wall. Any move made from a cell `>= cliff_from` slips
/// into the cliff with probability `slip_p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlipperyCliff {
    pub length: usize,
    pub slip_p: f64,
    #[serde(default = "default_one")]
    pub goal_r: f64,
    #[serde(default = "default_fall_penalty")]
    pub fall_penalty: f64,
    #[serde(default)]
    pub cliff_from: usize,
    #[serde(default)]
    pub step_r: f64,
}

/// One choice between a sure payoff and a lottery over a win and a loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoArmedGamble {
    pub safe_r: f64,
    pub risky_r: f64,
    pub risky_p: f64,
    pub risky_loss: f64,
}

/// `k` sequential reveals; each matches with probability `p`. All matches
/// pay `jackpot_r`, any mismatch ends the episode with nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LotteryReveal {
    pub k: usize,
    pub p: f64,
    #[serde(default = "default_jackpot")]
    pub jackpot_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitOutcome {
    pub next: usize,
    pub p: f64,
    #[serde(default)]
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitState {
    #[serde(default)]
    pub terminal: bool,
    #[serde(default)]
    pub actions: Vec<Vec<ExplicitOutcome>>,
}

/// Arbitrary tabular MDP given in full.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabularExplicit {
    #[serde(default)]
    pub start: usize,
    pub states: Vec<ExplicitState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params")]
pub enum EnvironmentSpec {
    RepeatedRewardChain(RepeatedRewardChain),
    SlipperyCliff(SlipperyCliff),
    TwoArmedGamble(TwoArmedGamble),
    LotteryReveal(LotteryReveal),
    TabularExplicit(TabularExplicit),
}

fn check_prob(name: &str, p: f64) -> Result<(), MdpError> {
    if p.is_finite() && (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(MdpError::InvalidSpec(format!("{name} = {p} is not a probability")))
    }
}

fn check_finite(name: &str, x: f64) -> Result<(), MdpError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(MdpError::InvalidSpec(format!("{name} must be finite")))
    }
}

fn check_positive(name: &str, n: usize) -> Result<(), MdpError> {
    if n > 0 {
        Ok(())
    } else {
        Err(MdpError::InvalidSpec(format!("{name} must be positive")))
    }
}

/// Outcome list with zero-probability branches dropped.
fn branches(items: &[(usize, f64, f64)]) -> Vec<Outcome> {
    items
        .iter()
        .filter(|(_, p, _)| *p > 0.0)
        .map(|&(next, prob, reward)| Outcome {
            next: StateId(next),
            prob,
            reward,
        })
        .collect()
}

impl EnvironmentSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::RepeatedRewardChain(_) => "RepeatedRewardChain",
            Self::SlipperyCliff(_) => "SlipperyCliff",
            Self::TwoArmedGamble(_) => "TwoArmedGamble",
            Self::LotteryReveal(_) => "LotteryReveal",
            Self::TabularExplicit(_) => "TabularExplicit",
        }
    }

    pub fn validate(&self) -> Result<(), MdpError> {
        match self {
            Self::RepeatedRewardChain(c) => {
                check_positive("length", c.length)?;
                check_finite("reward", c.reward)
            }
            Self::SlipperyCliff(c) => {
                check_positive("length", c.length)?;
                check_prob("slip_p", c.slip_p)?;
                check_finite("goal_r", c.goal_r)?;
                check_finite("fall_penalty", c.fall_penalty)?;
                check_finite("step_r", c.step_r)?;
                if c.cliff_from > c.length {
                    return Err(MdpError::InvalidSpec(format!(
                        "cliff_from = {} exceeds length = {}",
                        c.cliff_from, c.length
                    )));
                }
                Ok(())
            }
            Self::TwoArmedGamble(g) => {
                check_prob("risky_p", g.risky_p)?;
                check_finite("safe_r", g.safe_r)?;
                check_finite("risky_r", g.risky_r)?;
                check_finite("risky_loss", g.risky_loss)
            }
            Self::LotteryReveal(l) => {
                check_positive("k", l.k)?;
                check_prob("p", l.p)?;
                check_finite("jackpot_r", l.jackpot_r)
            }
            Self::TabularExplicit(t) => validate_explicit(t),
        }
    }

    /// Spec with some parameters replaced, e.g. at a schedule phase boundary.
    pub fn with_overrides(&self, overrides: &Map<String, Value>) -> Result<Self, MdpError> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut value =
            serde_json::to_value(self).map_err(|e| MdpError::InvalidSpec(format!("cannot encode spec: {e}")))?;
        let params = value
            .get_mut("params")
            .and_then(Value::as_object_mut)
            .ok_or_else(|| MdpError::InvalidSpec("spec has no params object".into()))?;
        for (k, v) in overrides {
            params.insert(k.clone(), v.clone());
        }
        let spec: Self =
            serde_json::from_value(value).map_err(|e| MdpError::InvalidSpec(format!("bad override: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Exact transition and reward tables for this spec.
    pub fn enumerate(&self) -> Result<TabularMdp, MdpError> {
        self.validate()?;
        let mdp = match self {
            Self::RepeatedRewardChain(c) => {
                let mut states = Vec::with_capacity(c.length + 1);
                for i in 0..c.length {
                    let next = i + 1;
                    let r = if next == c.length { c.reward } else { 0.0 };
                    states.push(StateSpec::choice(vec![branches(&[(next, 1.0, r)])]));
                }
                states.push(StateSpec::terminal());
                TabularMdp::new(StateId(0), states)
            }
            Self::SlipperyCliff(c) => {
                let goal = c.length;
                let cliff = c.length + 1;
                let mut states = Vec::with_capacity(c.length + 2);
                for cell in 0..c.length {
                    let slip = if cell >= c.cliff_from { c.slip_p } else { 0.0 };
                    let mv = |to: usize| {
                        let r = if to == goal { c.goal_r } else { c.step_r };
                        branches(&[(to, 1.0 - slip, r), (cliff, slip, c.fall_penalty)])
                    };
                    let forward = mv(cell + 1);
                    let back = mv(cell.saturating_sub(1));
                    states.push(StateSpec::choice(vec![forward, back]));
                }
                states.push(StateSpec::terminal());
                states.push(StateSpec::terminal());
                TabularMdp::new(StateId(0), states)
            }
            Self::TwoArmedGamble(g) => {
                let safe = branches(&[(1, 1.0, g.safe_r)]);
                let risky = branches(&[(2, g.risky_p, g.risky_r), (3, 1.0 - g.risky_p, g.risky_loss)]);
                let states = vec![
                    StateSpec::choice(vec![safe, risky]),
                    StateSpec::terminal(),
                    StateSpec::terminal(),
                    StateSpec::terminal(),
                ];
                TabularMdp::new(StateId(0), states)
            }
            Self::LotteryReveal(l) => {
                let jackpot = l.k;
                let bust = l.k + 1;
                let mut states = Vec::with_capacity(l.k + 2);
                for stage in 0..l.k {
                    let next = stage + 1;
                    let r = if next == jackpot { l.jackpot_r } else { 0.0 };
                    states.push(StateSpec::choice(vec![branches(&[
                        (next, l.p, r),
                        (bust, 1.0 - l.p, 0.0),
                    ])]));
                }
                states.push(StateSpec::terminal());
                states.push(StateSpec::terminal());
                TabularMdp::new(StateId(0), states)
            }
            Self::TabularExplicit(t) => {
                let states = t
                    .states
                    .iter()
                    .map(|s| {
                        if s.terminal {
                            StateSpec::terminal()
                        } else {
                            let actions = s
                                .actions
                                .iter()
                                .map(|outs| {
                                    let items: Vec<_> = outs.iter().map(|o| (o.next, o.p, o.r)).collect();
                                    branches(&items)
                                })
                                .collect();
                            StateSpec::choice(actions)
                        }
                    })
                    .collect();
                TabularMdp::new(StateId(t.start), states)
            }
        };
        Ok(mdp)
    }
}

fn validate_explicit(t: &TabularExplicit) -> Result<(), MdpError> {
    let n = t.states.len();
    check_positive("states", n)?;
    if t.start >= n {
        return Err(MdpError::InvalidSpec(format!("start {} out of range", t.start)));
    }
    if t.states[t.start].terminal {
        return Err(MdpError::InvalidSpec("start state is terminal".into()));
    }
    for (i, s) in t.states.iter().enumerate() {
        if s.terminal {
            continue;
        }
        if s.actions.is_empty() {
            return Err(MdpError::InvalidSpec(format!("state {i} has no actions")));
        }
        for (a, outs) in s.actions.iter().enumerate() {
            let mut total = 0.0;
            for o in outs {
                check_prob(&format!("states[{i}].actions[{a}].p"), o.p)?;
                check_finite("r", o.r)?;
                if o.next >= n {
                    return Err(MdpError::InvalidSpec(format!(
                        "states[{i}].actions[{a}] points to missing state {}",
                        o.next
                    )));
                }
                total += o.p;
            }
            if (total - 1.0).abs() > 1e-12 {
                return Err(MdpError::InvalidSpec(format!(
                    "states[{i}].actions[{a}] probabilities sum to {total}"
                )));
            }
        }
    }
    Ok(())
}
