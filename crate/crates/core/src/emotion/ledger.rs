use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EmotionError;
use crate::learner::TdError;
use crate::mdp::StateId;

/// What a pending anticipation is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LedgerKey {
    Episode(u64),
    State(StateId),
}

impl std::fmt::Display for LedgerKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Episode(n) => write!(f, "episode {n}"),
            Self::State(s) => write!(f, "state {s}"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Pending {
    pub anticipated_joy: f64,
    pub anticipated_distress: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub disappointment: f64,
    pub relief: f64,
    /// The entry that was consumed.
    pub anticipated: Pending,
}

/// Anticipated joy and distress already felt ahead of an outcome.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnticipationLedger {
    pending: BTreeMap<LedgerKey, Pending>,
}

impl AnticipationLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: &LedgerKey) -> Option<&Pending> {
        self.pending.get(key)
    }

    pub fn is_pending(&self, key: &LedgerKey) -> bool {
        self.pending.contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    /// Accumulate anticipation under `key`. Negative amounts are treated as 0.
    pub fn register(&mut self, key: LedgerKey, hope_amount: f64, fear_amount: f64) {
        let entry = self.pending.entry(key).or_default();
        entry.anticipated_joy += hope_amount.max(0.0);
        entry.anticipated_distress += fear_amount.max(0.0);
    }

    /// Settle `key` against the realized TD error and drop it.
    ///
    /// Only the correction matching the outcome's valence is reported: a
    /// negative outcome can disappoint, a positive one can relieve. A neutral
    /// outcome reports the net shortfall, so at most one of the two is ever
    /// nonzero.
    pub fn resolve(&mut self, key: &LedgerKey, realized: TdError) -> Result<Resolution, EmotionError> {
        let anticipated = self.pending.remove(key).ok_or(EmotionError::UnknownKey(*key))?;
        let (joy, distress) = super::joy_distress(realized);
        let short_joy = if anticipated.anticipated_joy > 0.0 {
            (anticipated.anticipated_joy - joy).max(0.0)
        } else {
            0.0
        };
        let short_distress = if anticipated.anticipated_distress > 0.0 {
            (anticipated.anticipated_distress - distress).max(0.0)
        } else {
            0.0
        };
        let d = realized.value();
        let (disappointment, relief) = if d < 0.0 {
            (short_joy, 0.0)
        } else if d > 0.0 {
            (0.0, short_distress)
        } else {
            (
                (short_joy - short_distress).max(0.0),
                (short_distress - short_joy).max(0.0),
            )
        };
        Ok(Resolution {
            disappointment,
            relief,
            anticipated,
        })
    }
}

pub fn register_anticipation(ledger: &mut AnticipationLedger, key: LedgerKey, hope_amount: f64, fear_amount: f64) {
    ledger.register(key, hope_amount, fear_amount);
}

pub fn resolve_outcome(
    ledger: &mut AnticipationLedger,
    key: &LedgerKey,
    realized: TdError,
) -> Result<Resolution, EmotionError> {
    ledger.resolve(key, realized)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const K: LedgerKey = LedgerKey::Episode(0);

    #[test]
    fn register_accumulates() {
        let mut l = AnticipationLedger::new();
        l.register(K, 0.8, 0.0);
        assert_eq!(
            l.get(&K),
            Some(&Pending {
                anticipated_joy: 0.8,
                anticipated_distress: 0.0
            })
        );
        let mut l = AnticipationLedger::new();
        l.register(K, 0.3, 0.0);
        l.register(K, 0.5, 0.0);
        assert_eq!(l.get(&K).unwrap().anticipated_joy, 0.8);
        let mut l = AnticipationLedger::new();
        l.register(K, 0.0, 0.0);
        assert_eq!(l.get(&K), Some(&Pending::default()));
    }

    #[test]
    fn neutral_outcome_disappoints_hope() {
        let mut l = AnticipationLedger::new();
        l.register(K, 0.8, 0.0);
        let r = l.resolve(&K, TdError(0.0)).unwrap();
        assert_eq!((r.disappointment, r.relief), (0.8, 0.0));
        assert!(l.is_empty());
    }

    #[test]
    fn neutral_outcome_relieves_fear() {
        let mut l = AnticipationLedger::new();
        l.register(K, 0.0, 0.5);
        let r = l.resolve(&K, TdError(0.0)).unwrap();
        assert_eq!((r.disappointment, r.relief), (0.0, 0.5));
    }

    #[test]
    fn better_than_hoped() {
        let mut l = AnticipationLedger::new();
        l.register(K, 0.3, 0.0);
        let r = l.resolve(&K, TdError(0.5)).unwrap();
        assert_eq!((r.disappointment, r.relief), (0.0, 0.0));
    }

    #[test]
    fn resolved_once() {
        let mut l = AnticipationLedger::new();
        l.register(K, 0.1, 0.1);
        l.resolve(&K, TdError(0.0)).unwrap();
        assert_eq!(l.resolve(&K, TdError(0.0)), Err(EmotionError::UnknownKey(K)));
    }

    proptest! {
        #[test]
        fn bounded_and_exclusive(hope in 0.0f64..10.0, fear in 0.0f64..10.0, d in -10.0f64..10.0) {
            let mut l = AnticipationLedger::new();
            l.register(K, hope, fear);
            let r = l.resolve(&K, TdError(d)).unwrap();
            prop_assert!(r.disappointment >= 0.0 && r.relief >= 0.0);
            prop_assert!(r.disappointment <= hope);
            prop_assert!(r.relief <= fear);
            prop_assert!(r.disappointment * r.relief == 0.0);
        }
    }
}
