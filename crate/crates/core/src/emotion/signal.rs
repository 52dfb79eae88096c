use serde::{Deserialize, Serialize};

use crate::learner::TdError;

/// The six emotion intensities reported per step. All nonnegative.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EmotionSignal {
    pub joy: f64,
    pub distress: f64,
    pub hope: f64,
    pub fear: f64,
    pub disappointment: f64,
    pub relief: f64,
}

impl EmotionSignal {
    pub const FIELDS: [&'static str; 6] = ["joy", "distress", "hope", "fear", "disappointment", "relief"];

    pub fn values(&self) -> [f64; 6] {
        [
            self.joy,
            self.distress,
            self.hope,
            self.fear,
            self.disappointment,
            self.relief,
        ]
    }

    pub fn is_silent(&self) -> bool {
        self.values().iter().all(|&v| v == 0.0)
    }
}

/// Positive and negative parts of a realized TD error.
pub fn joy_distress(delta: TdError) -> (f64, f64) {
    let d = delta.value();
    (d.max(0.0), (-d).max(0.0))
}
