use serde::{Deserialize, Serialize};

use super::config::{ModelSource, Pretrain, ScenarioConfig, UpdateRule};
use super::ExperimentError;
use crate::emotion::{
    anticipate, onset, realize_step, write_back, Anticipation, AnticipationLedger, EmotionParams, EmotionSignal,
    LedgerKey, Pending, RolloutRecord, Transition, ValueUpdate,
};
use crate::io::TraceRow;
use crate::learner::{exact_q, sarsa_update, select_action, select_from_preferences, QTable, TransitionModel};
use crate::mdp::{build_env, ActionId, EnvironmentInstance, StateId};
use crate::rng::{streams, RngCursor, SimRng};

/// Positions of the three random streams an agent owns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngCursors {
    pub environment: RngCursor,
    pub acting: RngCursor,
    pub imagination: RngCursor,
}

/// Everything needed to resume or replay an agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    /// Episodes completed so far.
    pub episode: usize,
    pub q: QTable,
    pub model: TransitionModel,
    pub rng: RngCursors,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub state: StateId,
    pub action: ActionId,
    pub reward: f64,
    pub next_state: StateId,
    pub next_action: Option<ActionId>,
    pub terminal: bool,
    pub delta: f64,
    pub signal: EmotionSignal,
    /// The ledger entry settled by this step, if any.
    pub settled: Option<Pending>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub episode: usize,
    pub onset_hope: f64,
    pub onset_fear: f64,
    pub steps: Vec<StepRecord>,
    /// Hit `max_steps` before reaching a terminal state.
    pub truncated: bool,
}

impl EpisodeLog {
    pub fn first_action(&self) -> Option<ActionId> {
        self.steps.first().map(|s| s.action)
    }

    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }
}

/// Imagined rollouts tagged with where they happened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutAudit {
    pub episode: usize,
    /// Step after which imagination ran; `None` for the episode onset.
    pub step: Option<usize>,
    pub state: StateId,
    pub hope: f64,
    pub fear: f64,
    pub records: Vec<RolloutRecord>,
}

/// Learner, model, ledger and environment for one (config, seed) pair.
#[derive(Debug, Clone)]
pub struct Agent {
    cfg: ScenarioConfig,
    seed: u64,
    env: EnvironmentInstance,
    terminal: Vec<bool>,
    q: QTable,
    model: TransitionModel,
    ledger: AnticipationLedger,
    acting: SimRng,
    imagination: SimRng,
    update: ValueUpdate,
    model_learning: bool,
    emotion: EmotionParams,
    episode: usize,
    audit: Option<Vec<RolloutAudit>>,
}

impl Agent {
    /// Fresh agent, pretrained as configured.
    pub fn new(cfg: &ScenarioConfig, seed: u64) -> Result<Self, ExperimentError> {
        let env = build_env(cfg.environment_at(0)?, seed)?;
        let mdp = env.mdp().clone();
        let agent_cfg = &cfg.agent;
        let q = match agent_cfg.pretrain {
            Pretrain::Exact => exact_q(
                &mdp,
                agent_cfg.alpha,
                agent_cfg.gamma,
                &agent_cfg.td_mode,
                &agent_cfg.policy,
            ),
            _ => QTable::for_mdp(&mdp, agent_cfg.alpha, agent_cfg.gamma)?,
        };
        let model = match agent_cfg.model {
            ModelSource::Exact => TransitionModel::from_mdp(&mdp),
            ModelSource::Learned => TransitionModel::new(&mdp.action_counts()),
        };
        let mut agent = Self::assemble(cfg, seed, env, q, model)?;
        if let Pretrain::Sarsa { max_episodes } = agent_cfg.pretrain {
            agent.pretrain_sarsa(max_episodes)?;
        }
        Ok(agent)
    }

    /// Agent resumed from a saved state.
    pub fn from_state(cfg: &ScenarioConfig, seed: u64, state: AgentState) -> Result<Self, ExperimentError> {
        let mut env = build_env(cfg.environment_at(state.episode)?, seed)?;
        env.set_rng(SimRng::from_cursor(state.rng.environment));
        let mut agent = Self::assemble(cfg, seed, env, state.q, state.model)?;
        agent.acting = SimRng::from_cursor(state.rng.acting);
        agent.imagination = SimRng::from_cursor(state.rng.imagination);
        agent.episode = state.episode;
        Ok(agent)
    }

    fn assemble(
        cfg: &ScenarioConfig,
        seed: u64,
        env: EnvironmentInstance,
        q: QTable,
        model: TransitionModel,
    ) -> Result<Self, ExperimentError> {
        let agent_cfg = &cfg.agent;
        let update = match (agent_cfg.learning, agent_cfg.update) {
            (false, _) => ValueUpdate::Frozen,
            (true, UpdateRule::Sarsa) => ValueUpdate::Sarsa,
            (true, UpdateRule::Model) => ValueUpdate::Model {
                mode: agent_cfg.td_mode,
                policy: agent_cfg.policy,
            },
        };
        let emotion = cfg.emotion_params();
        emotion.validate()?;
        Ok(Self {
            terminal: env.mdp().terminal_flags(),
            env,
            q,
            model,
            ledger: AnticipationLedger::new(),
            acting: SimRng::with_stream(seed, streams::ACTING),
            imagination: SimRng::with_stream(seed, streams::IMAGINATION),
            update,
            model_learning: agent_cfg.model_learning && agent_cfg.model == ModelSource::Learned,
            emotion,
            episode: 0,
            audit: None,
            cfg: cfg.clone(),
            seed,
        })
    }

    /// Keep every imagined rollout for later inspection.
    pub fn enable_audit(&mut self) {
        self.audit.get_or_insert_with(Vec::new);
    }

    pub fn take_audit(&mut self) -> Vec<RolloutAudit> {
        self.audit.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn q(&self) -> &QTable {
        &self.q
    }

    pub fn model(&self) -> &TransitionModel {
        &self.model
    }

    pub fn terminal_flags(&self) -> &[bool] {
        &self.terminal
    }

    pub fn env(&self) -> &EnvironmentInstance {
        &self.env
    }

    pub fn episode(&self) -> usize {
        self.episode
    }

    pub fn state(&self) -> AgentState {
        AgentState {
            episode: self.episode,
            q: self.q.clone(),
            model: self.model.clone(),
            rng: RngCursors {
                environment: self.env.rng().cursor(),
                acting: self.acting.cursor(),
                imagination: self.imagination.cursor(),
            },
        }
    }

    fn choose(&mut self, s: StateId, anticipation: Option<&Anticipation>) -> Result<ActionId, ExperimentError> {
        let eta = self.cfg.agent.shaping_eta;
        match anticipation {
            Some(ant) if eta > 0.0 => {
                let prefs: Vec<f64> = self
                    .q
                    .row(s)?
                    .iter()
                    .enumerate()
                    .map(|(a, &v)| v + eta * ant.motivation(ActionId(a)))
                    .collect();
                select_from_preferences(&prefs, &self.cfg.agent.policy, &mut self.acting)
                    .ok_or(ExperimentError::Learner(crate::learner::LearnerError::NoActions(s)))
            }
            _ => Ok(select_action(&self.q, s, &self.cfg.agent.policy, &mut self.acting)?),
        }
    }

    fn record_audit(&mut self, step: Option<usize>, state: StateId, ant: &Anticipation) {
        if let Some(audit) = self.audit.as_mut() {
            audit.push(RolloutAudit {
                episode: self.episode,
                step,
                state,
                hope: ant.hope,
                fear: ant.fear,
                records: ant.records.clone(),
            });
        }
    }

    fn enter_phase(&mut self) -> Result<(), ExperimentError> {
        if self
            .cfg
            .schedule
            .phases
            .iter()
            .any(|p| p.start == self.episode && p.start > 0)
        {
            let spec = self.cfg.environment_at(self.episode)?;
            log::debug!("episode {}: switching environment to {:?}", self.episode, spec);
            self.env.set_spec(spec)?;
        }
        Ok(())
    }

    /// One scheduled episode with emotions.
    pub fn run_episode(&mut self) -> Result<EpisodeLog, ExperimentError> {
        self.enter_phase()?;
        let key = LedgerKey::Episode(self.episode as u64);
        let s0 = self.env.reset();
        let opening = onset(
            &mut self.q,
            &self.model,
            &self.terminal,
            s0,
            &self.emotion,
            &mut self.ledger,
            key,
            &mut self.imagination,
        )?;
        self.record_audit(None, s0, &opening);
        let mut log = EpisodeLog {
            episode: self.episode,
            onset_hope: opening.hope,
            onset_fear: opening.fear,
            steps: Vec::new(),
            truncated: true,
        };
        let mut s = s0;
        let mut a = self.choose(s0, Some(&opening))?;
        for step in 0..self.cfg.schedule.max_steps {
            let outcome = self.env.step(a)?;
            if self.model_learning {
                self.model.update(s, a, outcome.reward, outcome.next_state)?;
            }
            let (anticipation, next_action) = if outcome.terminal {
                (None, None)
            } else {
                let ant = anticipate(
                    &self.q,
                    &self.model,
                    &self.terminal,
                    outcome.next_state,
                    &self.emotion.anticipation,
                    &mut self.imagination,
                )?;
                if self.emotion.write_back {
                    write_back(&mut self.q, &ant.records)?;
                }
                self.record_audit(Some(step), outcome.next_state, &ant);
                let a2 = self.choose(outcome.next_state, Some(&ant))?;
                (Some(ant), Some(a2))
            };
            let settled = if outcome.terminal {
                self.ledger.get(&key).copied()
            } else {
                None
            };
            let transition = Transition {
                state: s,
                action: a,
                outcome,
                next_action,
            };
            let result = realize_step(
                &mut self.q,
                &self.model,
                &self.terminal,
                &transition,
                anticipation,
                self.emotion.kappa,
                &self.update,
                &mut self.ledger,
                key,
            )?;
            log.steps.push(StepRecord {
                step,
                state: s,
                action: a,
                reward: outcome.reward,
                next_state: outcome.next_state,
                next_action,
                terminal: outcome.terminal,
                delta: result.delta.value(),
                signal: result.signal,
                settled,
            });
            if outcome.terminal {
                log.truncated = false;
                break;
            }
            s = outcome.next_state;
            a = next_action.expect("nonterminal steps choose a next action");
        }
        if log.truncated {
            log::warn!(
                "episode {} truncated at {} steps",
                self.episode,
                self.cfg.schedule.max_steps
            );
        }
        self.episode += 1;
        Ok(log)
    }

    /// Plain SARSA episodes until the largest |δ| of each of the last 50
    /// episodes is below 1e-3. Returns the episodes used.
    fn pretrain_sarsa(&mut self, max_episodes: usize) -> Result<usize, ExperimentError> {
        const WINDOW: usize = 50;
        const TOL: f64 = 1e-3;
        let mut calm = 0;
        for n in 0..max_episodes {
            let mut s = self.env.reset();
            let mut a = select_action(&self.q, s, &self.cfg.agent.policy, &mut self.acting)?;
            let mut worst = 0.0f64;
            for _ in 0..self.cfg.schedule.max_steps {
                let out = self.env.step(a)?;
                if self.model_learning {
                    self.model.update(s, a, out.reward, out.next_state)?;
                }
                let a2 = if out.terminal {
                    None
                } else {
                    Some(select_action(
                        &self.q,
                        out.next_state,
                        &self.cfg.agent.policy,
                        &mut self.acting,
                    )?)
                };
                let d = sarsa_update(&mut self.q, s, a, out.reward, out.next_state, a2)?;
                worst = worst.max(d.value().abs());
                match a2 {
                    Some(next) => {
                        s = out.next_state;
                        a = next;
                    }
                    None => break,
                }
            }
            calm = if worst < TOL { calm + 1 } else { 0 };
            if calm >= WINDOW {
                log::info!("pretraining converged after {} episodes", n + 1);
                return Ok(n + 1);
            }
        }
        log::warn!("pretraining did not converge within {max_episodes} episodes");
        Ok(max_episodes)
    }
}

/// Trace rows for one episode.
pub fn trace_rows(run_id: &str, seed: u64, log: &EpisodeLog) -> Vec<TraceRow> {
    log.steps
        .iter()
        .map(|s| TraceRow {
            run_id: run_id.to_string(),
            seed,
            episode: log.episode as u64,
            step: s.step as u64,
            state: s.state.0,
            action: s.action.0,
            reward: s.reward,
            next_state: s.next_state.0,
            next_action: s.next_action.map(|a| a.0),
            terminal: s.terminal,
            td_error: s.delta,
            joy: s.signal.joy,
            distress: s.signal.distress,
            hope: s.signal.hope,
            fear: s.signal.fear,
            disappointment: s.signal.disappointment,
            relief: s.signal.relief,
        })
        .collect()
}
