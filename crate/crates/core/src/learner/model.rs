use serde::{Deserialize, Serialize};

use super::LearnerError;
use crate::mdp::{ActionId, StateId, TabularMdp};

/// Pseudo-count used when seeding a model from exact probabilities. Large
/// enough that count ratios reproduce the true probabilities to ~1e-15.
const EXACT_RESOLUTION: f64 = (1u64 << 48) as f64;

/// One predicted branch: `P̂(next|s,a)` and mean reward on that branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Predicted {
    pub next: StateId,
    pub prob: f64,
    pub reward: f64,
}

/// Count-based estimate of `P(s'|s,a)` and `E[r|s,a,s']`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionModel {
    n_states: usize,
    counts: Vec<Vec<Vec<u64>>>,
    reward_sum: Vec<Vec<Vec<f64>>>,
    visit_count: Vec<Vec<u64>>,
}

impl TransitionModel {
    pub fn new(action_counts: &[usize]) -> Self {
        let n_states = action_counts.len();
        Self {
            n_states,
            counts: action_counts.iter().map(|&n| vec![vec![0; n_states]; n]).collect(),
            reward_sum: action_counts.iter().map(|&n| vec![vec![0.0; n_states]; n]).collect(),
            visit_count: action_counts.iter().map(|&n| vec![0; n]).collect(),
        }
    }

    /// Model whose predictions equal the true tables of `mdp`.
    pub fn from_mdp(mdp: &TabularMdp) -> Self {
        let mut m = Self::new(&mdp.action_counts());
        for s in mdp.states() {
            for a in 0..mdp.n_actions(s) {
                for o in mdp.outcomes(s, a) {
                    let c = ((o.prob * EXACT_RESOLUTION).round() as u64).max(1);
                    m.counts[s.0][a][o.next.0] += c;
                    m.reward_sum[s.0][a][o.next.0] += o.reward * c as f64;
                    m.visit_count[s.0][a] += c;
                }
            }
        }
        m
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn counts(&self, s: StateId, a: ActionId) -> Result<&[u64], LearnerError> {
        self.counts
            .get(s.0)
            .and_then(|row| row.get(a.0))
            .map(Vec::as_slice)
            .ok_or(LearnerError::IndexOutOfRange {
                state: s,
                action: Some(a),
            })
    }

    pub fn visits(&self, s: StateId, a: ActionId) -> Result<u64, LearnerError> {
        self.visit_count
            .get(s.0)
            .and_then(|row| row.get(a.0))
            .copied()
            .ok_or(LearnerError::IndexOutOfRange {
                state: s,
                action: Some(a),
            })
    }

    /// `P̂(next|s,a)`.
    pub fn probability(&self, s: StateId, a: ActionId, next: StateId) -> Result<f64, LearnerError> {
        let visits = self.visits(s, a)?;
        if visits == 0 {
            return Err(LearnerError::Unvisited { state: s, action: a });
        }
        let c = self
            .counts(s, a)?
            .get(next.0)
            .copied()
            .ok_or(LearnerError::IndexOutOfRange {
                state: next,
                action: None,
            })?;
        Ok(c as f64 / visits as f64)
    }

    pub fn update(&mut self, s: StateId, a: ActionId, r: f64, next: StateId) -> Result<(), LearnerError> {
        if next.0 >= self.n_states {
            return Err(LearnerError::IndexOutOfRange {
                state: next,
                action: None,
            });
        }
        self.counts(s, a)?;
        self.counts[s.0][a.0][next.0] += 1;
        self.reward_sum[s.0][a.0][next.0] += r;
        self.visit_count[s.0][a.0] += 1;
        Ok(())
    }

    /// Observed branches in next-state order.
    pub fn predict(&self, s: StateId, a: ActionId) -> Result<Vec<Predicted>, LearnerError> {
        let visits = self.visits(s, a)?;
        if visits == 0 {
            return Err(LearnerError::Unvisited { state: s, action: a });
        }
        let counts = &self.counts[s.0][a.0];
        let sums = &self.reward_sum[s.0][a.0];
        Ok(counts
            .iter()
            .zip(sums)
            .enumerate()
            .filter(|(_, (&c, _))| c > 0)
            .map(|(next, (&c, &sum))| Predicted {
                next: StateId(next),
                prob: c as f64 / visits as f64,
                reward: sum / c as f64,
            })
            .collect())
    }
}

pub fn model_update(
    m: &mut TransitionModel,
    s: StateId,
    a: ActionId,
    r: f64,
    next: StateId,
) -> Result<(), LearnerError> {
    m.update(s, a, r, next)
}

pub fn model_predict(m: &TransitionModel, s: StateId, a: ActionId) -> Result<Vec<Predicted>, LearnerError> {
    m.predict(s, a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{build_env, EnvironmentSpec, SlipperyCliff};

    fn cliff_spec(slip_p: f64) -> EnvironmentSpec {
        EnvironmentSpec::SlipperyCliff(SlipperyCliff {
            length: 4,
            slip_p,
            goal_r: 1.0,
            fall_penalty: -10.0,
            cliff_from: 0,
            step_r: 0.0,
        })
    }

    #[test]
    fn single_observation() {
        let mut m = TransitionModel::new(&[1, 1]);
        m.update(StateId(0), ActionId(0), 1.0, StateId(1)).unwrap();
        let p = m.predict(StateId(0), ActionId(0)).unwrap();
        assert_eq!(
            p,
            vec![Predicted {
                next: StateId(1),
                prob: 1.0,
                reward: 1.0
            }]
        );
    }

    #[test]
    fn split_observations() {
        let mut m = TransitionModel::new(&[1, 1, 1]);
        m.update(StateId(0), ActionId(0), 0.0, StateId(1)).unwrap();
        m.update(StateId(0), ActionId(0), 2.0, StateId(2)).unwrap();
        let p = m.predict(StateId(0), ActionId(0)).unwrap();
        assert_eq!(p.iter().map(|x| x.prob).collect::<Vec<_>>(), vec![0.5, 0.5]);
        assert_eq!(p[1].reward, 2.0);
    }

    #[test]
    fn count_ratio() {
        let mut m = TransitionModel::new(&[1, 1, 1]);
        for _ in 0..9 {
            m.update(StateId(0), ActionId(0), 0.0, StateId(1)).unwrap();
        }
        m.update(StateId(0), ActionId(0), -10.0, StateId(2)).unwrap();
        assert!((m.probability(StateId(0), ActionId(0), StateId(2)).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn unvisited() {
        let m = TransitionModel::new(&[2]);
        assert_eq!(
            m.predict(StateId(0), ActionId(1)),
            Err(LearnerError::Unvisited {
                state: StateId(0),
                action: ActionId(1)
            })
        );
    }

    #[test]
    fn visits_equal_count_sums() {
        let mut m = TransitionModel::new(&[2, 2, 2]);
        for (s, a, n) in [(0, 0, 1), (0, 0, 2), (1, 1, 0), (0, 1, 2)] {
            m.update(StateId(s), ActionId(a), 0.0, StateId(n)).unwrap();
        }
        for s in 0..3 {
            for a in 0..2 {
                let total: u64 = m.counts(StateId(s), ActionId(a)).unwrap().iter().sum();
                assert_eq!(total, m.visits(StateId(s), ActionId(a)).unwrap());
            }
        }
    }

    #[test]
    fn exact_model_matches_truth() {
        let mdp = cliff_spec(0.1).enumerate().unwrap();
        let m = TransitionModel::from_mdp(&mdp);
        for s in mdp.states() {
            for a in 0..mdp.n_actions(s) {
                let pred = m.predict(s, ActionId(a)).unwrap();
                let truth = mdp.outcomes(s, a);
                assert_eq!(pred.len(), truth.len());
                for t in truth {
                    let p = pred.iter().find(|p| p.next == t.next).unwrap();
                    assert!((p.prob - t.prob).abs() < 1e-14);
                    assert_eq!(p.reward, t.reward);
                }
            }
        }
    }

    #[test]
    fn sampled_model_converges() {
        let spec = cliff_spec(0.1);
        let mut env = build_env(spec.clone(), 2024).unwrap();
        let mdp = spec.enumerate().unwrap();
        let mut m = TransitionModel::new(&mdp.action_counts());
        let n = 50_000;
        for _ in 0..n {
            env.reset();
            let out = env.step(ActionId(0)).unwrap();
            m.update(StateId(0), ActionId(0), out.reward, out.next_state).unwrap();
        }
        let worst = mdp
            .outcomes(StateId(0), 0)
            .iter()
            .map(|o| (m.probability(StateId(0), ActionId(0), o.next).unwrap() - o.prob).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.02, "max error {worst}");
    }

    #[test]
    fn step_frequencies_within_three_sigma() {
        let spec = cliff_spec(0.1);
        let mut env = build_env(spec, 5).unwrap();
        let n = 100_000;
        let mut falls = 0;
        for _ in 0..n {
            env.reset();
            if env.step(ActionId(0)).unwrap().next_state == StateId(5) {
                falls += 1;
            }
        }
        let sigma = (0.1f64 * 0.9 / n as f64).sqrt();
        assert!((falls as f64 / n as f64 - 0.1).abs() < 3.0 * sigma);
    }
}
