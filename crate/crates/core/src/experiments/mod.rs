//! Scenario scripts: configs, the agent loop, per-seed measurement and
//! aggregation across seeds.

mod agent;
mod config;
mod scenarios;
mod summary;

use thiserror::Error;

use crate::emotion::EmotionError;
use crate::learner::LearnerError;
use crate::mdp::MdpError;

pub use agent::{trace_rows, Agent, AgentState, EpisodeLog, RngCursors, RolloutAudit, StepRecord};
pub use config::{
    AgentConfig, EmotionConfig, ModelSource, NamedMode, NamedPolicy, Phase, Pretrain, Probe, Scenario, ScenarioConfig,
    Schedule, Sweep, UpdateRule, ValidationError,
};
pub use scenarios::{
    run_cliff_fear, run_extinction, run_gamble, run_habituation, run_lottery, run_scenario, run_seed, RunOptions,
    ScenarioOutput,
};
pub use summary::{summarize, OrderingCount, RunArtifacts, RunSummary, SeedResult, SeriesSummary, Stat, Table};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("scenario {scenario} needs a {expected} environment, got {found}")]
    WrongEnvironment {
        scenario: &'static str,
        expected: &'static str,
        found: String,
    },
    #[error("runs have different schedules or series")]
    MismatchedSchedules,
    #[error("nothing to summarize")]
    NoRuns,
    #[error("invalid config: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidConfig(Vec<ValidationError>),
    #[error(transparent)]
    Mdp(#[from] MdpError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Emotion(#[from] EmotionError),
}

/// The shipped default config for each scenario, as JSON text.
pub const BUILTIN_CONFIGS: [(Scenario, &str); 5] = [
    (
        Scenario::Habituation,
        include_str!("../../../../configs/habituation.json"),
    ),
    (Scenario::CliffFear, include_str!("../../../../configs/cliff_fear.json")),
    (
        Scenario::Extinction,
        include_str!("../../../../configs/extinction.json"),
    ),
    (Scenario::Gamble, include_str!("../../../../configs/gamble.json")),
    (Scenario::Lottery, include_str!("../../../../configs/lottery.json")),
];

impl Scenario {
    pub fn description(self) -> &'static str {
        match self {
            Self::Habituation => "joy fades under a repeated reward; omission brings distress",
            Self::CliffFear => "fear along a slippery cliff by imagination policy, depth and position",
            Self::Extinction => "conditioned fear fades as the model sees safe outcomes",
            Self::Gamble => "optimistic vs expected TD on a sure thing vs a long-shot bet",
            Self::Lottery => "hope across reveals, disappointment on a bust",
        }
    }
}
