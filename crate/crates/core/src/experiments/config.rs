use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::emotion::{Aggregation, AnticipationParams, EmotionParams};
use crate::learner::{PolicyKind, TdMode};
use crate::mdp::EnvironmentSpec;

/// One of the built-in experiment scripts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Habituation,
    CliffFear,
    Extinction,
    Gamble,
    Lottery,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Self::Habituation,
        Self::CliffFear,
        Self::Extinction,
        Self::Gamble,
        Self::Lottery,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Habituation => "habituation",
            Self::CliffFear => "cliff_fear",
            Self::Extinction => "extinction",
            Self::Gamble => "gamble",
            Self::Lottery => "lottery",
        }
    }

    /// Environment kind the scenario is written for.
    pub fn environment_kind(self) -> &'static str {
        match self {
            Self::Habituation => "RepeatedRewardChain",
            Self::CliffFear | Self::Extinction => "SlipperyCliff",
            Self::Gamble => "TwoArmedGamble",
            Self::Lottery => "LotteryReveal",
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelSource {
    /// Counts start empty and grow from experience.
    #[default]
    Learned,
    /// Seeded from the true environment tables and never updated.
    Exact,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateRule {
    /// Sample-based SARSA.
    #[default]
    Sarsa,
    /// Move toward the model-based TD error of the configured mode.
    Model,
}

/// How the action values are initialized before the scheduled episodes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Pretrain {
    /// Start from zeros.
    #[default]
    None,
    /// Value iteration on the true environment.
    Exact,
    /// SARSA episodes until max |δ| < 1e-3 over a 50-episode window.
    Sarsa { max_episodes: usize },
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub alpha: f64,
    pub gamma: f64,
    #[serde(default)]
    pub policy: PolicyKind,
    #[serde(default)]
    pub td_mode: TdMode,
    /// Update action values during the scheduled episodes.
    #[serde(default = "yes")]
    pub learning: bool,
    #[serde(default)]
    pub update: UpdateRule,
    #[serde(default)]
    pub model: ModelSource,
    /// Update a learned model from experience.
    #[serde(default = "yes")]
    pub model_learning: bool,
    #[serde(default)]
    pub pretrain: Pretrain,
    /// Weight of per-action `hope - fear` added to acting preferences.
    #[serde(default)]
    pub shaping_eta: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmotionConfig {
    pub n_rollouts: usize,
    pub depth: usize,
    #[serde(default)]
    pub sim_policy: PolicyKind,
    /// Discount on imagined errors; defaults to the agent's gamma.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default = "one")]
    pub kappa: f64,
    #[serde(default)]
    pub aggregation: Aggregation,
    #[serde(default)]
    pub write_back: bool,
    /// Distortion of imagined outcome probabilities; defaults to the agent's
    /// TD mode.
    #[serde(default)]
    pub perception: Option<TdMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Phase {
    pub name: String,
    pub start: usize,
    /// Environment parameter overrides in force from `start` on.
    #[serde(default)]
    pub overrides: Map<String, Value>,
}

fn default_max_steps() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub n_episodes: usize,
    #[serde(default)]
    pub phases: Vec<Phase>,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedPolicy {
    pub name: String,
    pub policy: PolicyKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedMode {
    pub name: String,
    pub mode: TdMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Probe {
    pub n_rollouts: usize,
    pub depth: usize,
}

/// Scenario-specific grids. Unused fields are ignored by other scenarios.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    /// Imagination policies, ordered from most to least control.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sim_policies: Vec<NamedPolicy>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub depths: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub n_rollouts: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub positions: Vec<usize>,
    /// TD modes; the first is the reference the others are compared to.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modes: Vec<NamedMode>,
    /// Trailing episodes used for asymptotic metrics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    /// Fixed-key imagination probe run before every episode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<Probe>,
    /// Episodes after the phase boundary at which extinction is read off.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exposures: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub scenario: Scenario,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
    pub environment: EnvironmentSpec,
    pub agent: AgentConfig,
    pub emotion: EmotionConfig,
    pub schedule: Schedule,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub sweep: Sweep,
}

/// A field-level problem found while validating a config.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationError {
    pub field: String,
    pub reason: String,
}

impl ValidationError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl std::fmt::Display for ValidationError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

fn unit_range(errors: &mut Vec<ValidationError>, field: &str, v: f64) {
    if !(0.0..=1.0).contains(&v) {
        errors.push(ValidationError::new(field, format!("{v} out of range [0, 1]")));
    }
}

impl ScenarioConfig {
    pub fn anticipation_params(&self) -> AnticipationParams {
        AnticipationParams {
            n_rollouts: self.emotion.n_rollouts,
            depth: self.emotion.depth,
            sim_policy: self.emotion.sim_policy,
            gamma: self.emotion.gamma.unwrap_or(self.agent.gamma),
            aggregation: self.emotion.aggregation,
            perception: self.emotion.perception.unwrap_or(self.agent.td_mode),
        }
    }

    pub fn emotion_params(&self) -> EmotionParams {
        EmotionParams {
            anticipation: self.anticipation_params(),
            kappa: self.emotion.kappa,
            write_back: self.emotion.write_back,
        }
    }

    /// Environment in force during `episode`.
    pub fn environment_at(&self, episode: usize) -> Result<EnvironmentSpec, crate::mdp::MdpError> {
        match self.schedule.phases.iter().rev().find(|p| p.start <= episode) {
            Some(p) if !p.overrides.is_empty() => self.environment.with_overrides(&p.overrides),
            _ => Ok(self.environment.clone()),
        }
    }

    /// Every semantic problem with the config, in field order.
    pub fn validate(&self) -> Vec<ValidationError> {
        let mut errors = Vec::new();
        if self.name.trim().is_empty() {
            errors.push(ValidationError::new("name", "must not be empty"));
        }
        if let Err(e) = self.environment.validate() {
            errors.push(ValidationError::new("environment", e.to_string()));
        } else if self.environment.kind_name() != self.scenario.environment_kind() {
            errors.push(ValidationError::new(
                "environment.kind",
                format!(
                    "scenario {} needs {}, got {}",
                    self.scenario,
                    self.scenario.environment_kind(),
                    self.environment.kind_name()
                ),
            ));
        }

        let agent = &self.agent;
        if !(agent.alpha > 0.0 && agent.alpha <= 1.0) {
            errors.push(ValidationError::new(
                "agent.alpha",
                format!("{} out of range (0, 1]", agent.alpha),
            ));
        }
        unit_range(&mut errors, "agent.gamma", agent.gamma);
        if let Err(e) = agent.policy.validate() {
            errors.push(ValidationError::new("agent.policy", e.to_string()));
        }
        if let Err(e) = agent.td_mode.validate() {
            errors.push(ValidationError::new("agent.td_mode", e.to_string()));
        }
        if agent.td_mode != TdMode::Expected && agent.update == UpdateRule::Sarsa && self.sweep.modes.is_empty() {
            errors.push(ValidationError::new(
                "agent.update",
                "non-expected td_mode needs update = model",
            ));
        }
        if let Pretrain::Sarsa { max_episodes: 0 } = agent.pretrain {
            errors.push(ValidationError::new("agent.pretrain.max_episodes", "must be positive"));
        }
        if !agent.shaping_eta.is_finite() || agent.shaping_eta < 0.0 {
            errors.push(ValidationError::new(
                "agent.shaping_eta",
                "must be finite and nonnegative",
            ));
        }

        let emo = &self.emotion;
        if emo.n_rollouts == 0 {
            errors.push(ValidationError::new("emotion.n_rollouts", "must be positive"));
        }
        if emo.depth == 0 {
            errors.push(ValidationError::new("emotion.depth", "must be positive"));
        }
        if let Err(e) = emo.sim_policy.validate() {
            errors.push(ValidationError::new("emotion.sim_policy", e.to_string()));
        }
        if let Some(g) = emo.gamma {
            unit_range(&mut errors, "emotion.gamma", g);
        }
        unit_range(&mut errors, "emotion.kappa", emo.kappa);
        if let Some(Err(e)) = emo.perception.map(|p| p.validate()) {
            errors.push(ValidationError::new("emotion.perception", e.to_string()));
        }

        let sched = &self.schedule;
        if sched.max_steps == 0 {
            errors.push(ValidationError::new("schedule.max_steps", "must be positive"));
        }
        let mut last = None;
        for (i, p) in sched.phases.iter().enumerate() {
            let field = format!("schedule.phases[{i}]");
            if last.is_some_and(|l| p.start <= l) {
                errors.push(ValidationError::new(
                    format!("{field}.start"),
                    "phases must start in increasing order",
                ));
            }
            if p.start >= sched.n_episodes.max(1) {
                errors.push(ValidationError::new(
                    format!("{field}.start"),
                    "starts after the last episode",
                ));
            }
            last = Some(p.start);
            if !p.overrides.is_empty() {
                match self.environment.with_overrides(&p.overrides) {
                    Ok(spec) => {
                        let same_layout = match (spec.enumerate(), self.environment.enumerate()) {
                            (Ok(a), Ok(b)) => a.action_counts() == b.action_counts(),
                            _ => true,
                        };
                        if !same_layout {
                            errors.push(ValidationError::new(
                                format!("{field}.overrides"),
                                "may not change the state/action layout",
                            ));
                        }
                    }
                    Err(e) => errors.push(ValidationError::new(format!("{field}.overrides"), e.to_string())),
                }
            }
        }

        if self.seeds.is_empty() {
            errors.push(ValidationError::new("seeds", "at least one seed is required"));
        }
        self.validate_sweep(&mut errors);
        errors
    }

    fn validate_sweep(&self, errors: &mut Vec<ValidationError>) {
        let sweep = &self.sweep;
        for (i, p) in sweep.sim_policies.iter().enumerate() {
            if let Err(e) = p.policy.validate() {
                errors.push(ValidationError::new(format!("sweep.sim_policies[{i}]"), e.to_string()));
            }
        }
        for (i, m) in sweep.modes.iter().enumerate() {
            if let Err(e) = m.mode.validate() {
                errors.push(ValidationError::new(format!("sweep.modes[{i}]"), e.to_string()));
            }
        }
        if sweep.depths.contains(&0) {
            errors.push(ValidationError::new("sweep.depths", "depths must be positive"));
        }
        if sweep.n_rollouts.contains(&0) {
            errors.push(ValidationError::new(
                "sweep.n_rollouts",
                "rollout counts must be positive",
            ));
        }
        if let Some(p) = sweep.probe {
            if p.n_rollouts == 0 || p.depth == 0 {
                errors.push(ValidationError::new(
                    "sweep.probe",
                    "n_rollouts and depth must be positive",
                ));
            }
        }
        if sweep.window == Some(0) {
            errors.push(ValidationError::new("sweep.window", "must be positive"));
        }
        match self.scenario {
            Scenario::CliffFear => {
                if sweep.sim_policies.len() < 2 {
                    errors.push(ValidationError::new(
                        "sweep.sim_policies",
                        "at least two policies are required",
                    ));
                }
                if sweep.depths.is_empty() {
                    errors.push(ValidationError::new("sweep.depths", "required"));
                }
                if sweep.n_rollouts.is_empty() {
                    errors.push(ValidationError::new("sweep.n_rollouts", "required"));
                }
                if sweep.positions.is_empty() {
                    errors.push(ValidationError::new("sweep.positions", "required"));
                }
                if let EnvironmentSpec::SlipperyCliff(c) = &self.environment {
                    if let Some(&p) = sweep.positions.iter().find(|&&p| p >= c.length) {
                        errors.push(ValidationError::new(
                            "sweep.positions",
                            format!("cell {p} is off the corridor"),
                        ));
                    }
                }
            }
            Scenario::Gamble => {
                if sweep.modes.len() < 2 {
                    errors.push(ValidationError::new("sweep.modes", "at least two modes are required"));
                }
                if sweep.window.is_some_and(|w| w > self.schedule.n_episodes) {
                    errors.push(ValidationError::new("sweep.window", "longer than the schedule"));
                }
            }
            Scenario::Extinction => {
                if self.schedule.phases.len() < 2 {
                    errors.push(ValidationError::new(
                        "schedule.phases",
                        "needs a conditioning and a safe phase",
                    ));
                }
                if sweep.probe.is_none() {
                    errors.push(ValidationError::new("sweep.probe", "required"));
                }
                let boundary = self.schedule.phases.get(1).map_or(0, |p| p.start);
                let exposures = sweep.exposures.unwrap_or(0);
                if exposures == 0 {
                    errors.push(ValidationError::new("sweep.exposures", "required and positive"));
                } else if boundary + exposures > self.schedule.n_episodes {
                    errors.push(ValidationError::new(
                        "sweep.exposures",
                        "runs past the end of the schedule",
                    ));
                }
            }
            Scenario::Habituation => {
                if self.schedule.phases.len() < 2 {
                    errors.push(ValidationError::new(
                        "schedule.phases",
                        "needs a reward and an omission phase",
                    ));
                }
            }
            Scenario::Lottery => {}
        }
    }
}
