use super::{PolicyKind, QTable, TdMode};
use crate::mdp::{StateId, TabularMdp};

const MAX_SWEEPS: usize = 100_000;

/// Action values at the fixed point of the mode-aware Bellman backup
/// `Q(s,a) = combine_mode{ r + gamma * V(s') }`, with `V` taken under
/// `policy` over the current values and `V = 0` at terminal states.
///
/// Sweeps until no entry changes (bitwise) or `MAX_SWEEPS` is hit. The
/// backup accumulates `p * (r + gamma * v)` from zero in outcome order, so a
/// deterministic step reproduces `r + gamma * v` exactly.
pub fn solve_values(mdp: &TabularMdp, gamma: f64, mode: &TdMode, policy: &PolicyKind) -> Vec<Vec<f64>> {
    let counts = mdp.action_counts();
    let mut q: Vec<Vec<f64>> = counts.iter().map(|&n| vec![0.0; n]).collect();
    let terminal = mdp.terminal_flags();
    for sweep in 0..MAX_SWEEPS {
        let v: Vec<f64> = q
            .iter()
            .zip(&terminal)
            .map(|(row, &t)| if t { 0.0 } else { policy_value(row, policy) })
            .collect();
        let mut changed = false;
        for s in mdp.states() {
            if terminal[s.0] {
                continue;
            }
            for (a, slot) in q[s.0].iter_mut().enumerate() {
                let branches: Vec<(f64, f64)> = mdp
                    .outcomes(s, a)
                    .iter()
                    .map(|o| (o.prob, o.reward + gamma * v[o.next.0]))
                    .collect();
                let new = mode.combine(&branches);
                if new.to_bits() != slot.to_bits() {
                    changed = true;
                    *slot = new;
                }
            }
        }
        if !changed {
            log::debug!("value iteration converged after {sweep} sweeps");
            return q;
        }
    }
    log::warn!("value iteration stopped at {MAX_SWEEPS} sweeps without a bitwise fixed point");
    q
}

fn policy_value(row: &[f64], policy: &PolicyKind) -> f64 {
    let mut v = 0.0;
    for (p, qa) in policy.distribution(row).iter().zip(row) {
        v += p * qa;
    }
    v
}

/// [`solve_values`] wrapped in a [`QTable`] with the given learning rate.
pub fn exact_q(mdp: &TabularMdp, alpha: f64, gamma: f64, mode: &TdMode, policy: &PolicyKind) -> QTable {
    QTable::from_values(solve_values(mdp, gamma, mode, policy), alpha, gamma)
        .expect("value iteration yields finite values for validated rates")
}

/// Greedy action under `values` at `s` (lowest index on ties).
pub fn greedy_action(values: &[Vec<f64>], s: StateId) -> usize {
    let row = &values[s.0];
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}
