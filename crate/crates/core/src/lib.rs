//! Tabular TD learning with an emotion layer: joy and distress from realized
//! TD errors, hope and fear from TD errors met in imagined model rollouts,
//! and disappointment and relief from anticipation that did not pan out.

pub mod emotion;
pub mod experiments;
pub mod io;
pub mod learner;
pub mod mdp;
pub mod rng;
