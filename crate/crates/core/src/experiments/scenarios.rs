use std::collections::BTreeMap;

use rayon::prelude::*;

use super::agent::{trace_rows, Agent, EpisodeLog, RolloutAudit};
use super::config::{Scenario, ScenarioConfig};
use super::summary::{summarize, RunArtifacts, RunSummary, SeedResult, Table};
use super::ExperimentError;
use crate::emotion::{anticipate_keyed, AnticipationParams};
use crate::learner::greedy_action;
use crate::mdp::{ActionId, EnvironmentSpec, StateId};
use crate::rng::{streams, SimRng};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Keep every imagined rollout in the run artifacts.
    pub audit_rollouts: bool,
}

/// Summary plus per-seed results, seeds in config order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub summary: RunSummary,
    pub seeds: Vec<SeedResult>,
}

/// Run every seed of `cfg` (in parallel on the current rayon pool) and
/// aggregate.
pub fn run_scenario(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<ScenarioOutput, ExperimentError> {
    let errors = cfg.validate();
    if !errors.is_empty() {
        return Err(ExperimentError::InvalidConfig(errors));
    }
    let seeds: Vec<SeedResult> = cfg
        .seeds
        .par_iter()
        .map(|&seed| run_seed(cfg, seed, opts))
        .collect::<Result<_, _>>()?;
    let summary = summarize(&seeds)?;
    Ok(ScenarioOutput { summary, seeds })
}

/// One seed of `cfg`.
pub fn run_seed(cfg: &ScenarioConfig, seed: u64, opts: &RunOptions) -> Result<SeedResult, ExperimentError> {
    log::debug!("{} seed {seed}", cfg.name);
    match cfg.scenario {
        Scenario::Habituation => habituation_seed(cfg, seed, opts),
        Scenario::CliffFear => cliff_fear_seed(cfg, seed, opts),
        Scenario::Extinction => extinction_seed(cfg, seed, opts),
        Scenario::Gamble => gamble_seed(cfg, seed, opts),
        Scenario::Lottery => lottery_seed(cfg, seed, opts),
    }
}

fn expect(cfg: &ScenarioConfig, scenario: Scenario) -> Result<(), ExperimentError> {
    if cfg.scenario != scenario || cfg.environment.kind_name() != scenario.environment_kind() {
        return Err(ExperimentError::WrongEnvironment {
            scenario: scenario.name(),
            expected: scenario.environment_kind(),
            found: cfg.environment.kind_name().to_string(),
        });
    }
    Ok(())
}

pub fn run_habituation(cfg: &ScenarioConfig) -> Result<RunSummary, ExperimentError> {
    expect(cfg, Scenario::Habituation)?;
    Ok(run_scenario(cfg, &RunOptions::default())?.summary)
}

pub fn run_cliff_fear(cfg: &ScenarioConfig) -> Result<RunSummary, ExperimentError> {
    expect(cfg, Scenario::CliffFear)?;
    Ok(run_scenario(cfg, &RunOptions::default())?.summary)
}

pub fn run_extinction(cfg: &ScenarioConfig) -> Result<RunSummary, ExperimentError> {
    expect(cfg, Scenario::Extinction)?;
    Ok(run_scenario(cfg, &RunOptions::default())?.summary)
}

pub fn run_gamble(cfg: &ScenarioConfig) -> Result<RunSummary, ExperimentError> {
    expect(cfg, Scenario::Gamble)?;
    Ok(run_scenario(cfg, &RunOptions::default())?.summary)
}

pub fn run_lottery(cfg: &ScenarioConfig) -> Result<RunSummary, ExperimentError> {
    expect(cfg, Scenario::Lottery)?;
    Ok(run_scenario(cfg, &RunOptions::default())?.summary)
}

/// Agent run through the whole schedule, with an optional hook before each
/// episode.
struct Episodes {
    logs: Vec<EpisodeLog>,
    artifacts: RunArtifacts,
}

fn run_agent(
    cfg: &ScenarioConfig,
    run_id: &str,
    seed: u64,
    opts: &RunOptions,
    mut before: impl FnMut(&Agent) -> Result<(), ExperimentError>,
) -> Result<Episodes, ExperimentError> {
    let mut agent = Agent::new(cfg, seed)?;
    if opts.audit_rollouts {
        agent.enable_audit();
    }
    let initial = agent.state();
    let mut logs = Vec::with_capacity(cfg.schedule.n_episodes);
    let mut trace = Vec::new();
    for _ in 0..cfg.schedule.n_episodes {
        before(&agent)?;
        let log = agent.run_episode()?;
        trace.extend(trace_rows(run_id, seed, &log));
        logs.push(log);
    }
    before(&agent)?;
    let rollouts: Vec<RolloutAudit> = agent.take_audit();
    Ok(Episodes {
        logs,
        artifacts: RunArtifacts {
            run_id: run_id.to_string(),
            seed,
            config: cfg.clone(),
            initial,
            final_state: agent.state(),
            trace,
            rollouts,
        },
    })
}

/// Standard per-episode series: summed realized signals, onset hope/fear.
fn episode_series(logs: &[EpisodeLog], prefix: &str, out: &mut BTreeMap<String, Vec<f64>>) {
    let mut put = |name: &str, f: &dyn Fn(&EpisodeLog) -> f64| {
        out.insert(format!("{prefix}{name}"), logs.iter().map(f).collect());
    };
    put("return", &|l| l.total_reward());
    put("td_error", &|l| l.steps.iter().map(|s| s.delta).sum());
    put("joy", &|l| l.steps.iter().map(|s| s.signal.joy).sum());
    put("distress", &|l| l.steps.iter().map(|s| s.signal.distress).sum());
    put("hope", &|l| l.onset_hope);
    put("fear", &|l| l.onset_fear);
    put("disappointment", &|l| {
        l.steps.iter().map(|s| s.signal.disappointment).sum()
    });
    put("relief", &|l| l.steps.iter().map(|s| s.signal.relief).sum());
    put("steps", &|l| l.steps.len() as f64);
}

fn habituation_seed(cfg: &ScenarioConfig, seed: u64, opts: &RunOptions) -> Result<SeedResult, ExperimentError> {
    expect(cfg, Scenario::Habituation)?;
    let run = run_agent(cfg, &cfg.name, seed, opts, |_| Ok(()))?;
    let mut res = SeedResult::new(cfg, seed);
    episode_series(&run.logs, "", &mut res.series);
    if let Some(omission) = cfg.schedule.phases.get(1).map(|p| p.start) {
        res.metrics
            .insert("omission_distress".into(), res.series["distress"][omission]);
        res.metrics
            .insert("last_rewarded_joy".into(), res.series["joy"][omission - 1]);
    }
    res.runs.push(run.artifacts);
    Ok(res)
}

fn probe_key(seed: u64) -> u64 {
    SimRng::with_stream(seed, streams::PROBE).next_u64()
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut total = 0.0;
    let mut n = 0usize;
    for x in xs {
        total += x;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        total / n as f64
    }
}

fn cliff_fear_seed(cfg: &ScenarioConfig, seed: u64, opts: &RunOptions) -> Result<SeedResult, ExperimentError> {
    expect(cfg, Scenario::CliffFear)?;
    let EnvironmentSpec::SlipperyCliff(cliff) = &cfg.environment else {
        unreachable!()
    };
    let run = run_agent(cfg, &cfg.name, seed, opts, |_| Ok(()))?;
    let mut res = SeedResult::new(cfg, seed);
    episode_series(&run.logs, "", &mut res.series);

    // probe the trained agent
    let agent = Agent::from_state(cfg, seed, run.artifacts.final_state.clone())?;
    let key = probe_key(seed);
    let sweep = &cfg.sweep;
    let base = cfg.anticipation_params();
    let positions: Vec<usize> = sweep.positions.clone();
    let x: Vec<f64> = positions.iter().map(|&p| p as f64).collect();
    // fear[(policy, depth, rollouts)] = per-position fear
    let mut fear: BTreeMap<(usize, usize, usize), Vec<f64>> = BTreeMap::new();
    for (pi, named) in sweep.sim_policies.iter().enumerate() {
        for &depth in &sweep.depths {
            for &n_rollouts in &sweep.n_rollouts {
                let params = AnticipationParams {
                    n_rollouts,
                    depth,
                    sim_policy: named.policy,
                    ..base
                };
                let mut fears = Vec::with_capacity(positions.len());
                let mut hopes = Vec::with_capacity(positions.len());
                for &p in &positions {
                    let a = anticipate_keyed(
                        agent.q(),
                        agent.model(),
                        agent.terminal_flags(),
                        StateId(p),
                        &params,
                        key,
                    )?;
                    fears.push(a.fear);
                    hopes.push(a.hope);
                }
                let tag = format!("{}/depth{depth}/rollouts{n_rollouts}", named.name);
                res.tables.insert(
                    format!("fear/{tag}"),
                    Table {
                        x: x.clone(),
                        y: fears.clone(),
                    },
                );
                res.tables
                    .insert(format!("hope/{tag}"), Table { x: x.clone(), y: hopes });
                fear.insert((pi, depth, n_rollouts), fears);
            }
        }
    }

    let hazard: Vec<usize> = (0..positions.len())
        .filter(|&i| positions[i] >= cliff.cliff_from)
        .collect();
    let hazard_mean = |ys: &[f64]| mean(hazard.iter().map(|&i| ys[i]));
    let all_mean = |ys: &[f64]| mean(ys.iter().copied());
    let n0 = sweep.n_rollouts[0];
    let n_max = *sweep.n_rollouts.iter().max().expect("validated non-empty");
    let mut depths = sweep.depths.clone();
    depths.sort_unstable();
    depths.dedup();
    let d_max = *depths.last().expect("validated non-empty");
    let last = sweep.sim_policies.len() - 1;

    for (pi, named) in sweep.sim_policies.iter().enumerate() {
        res.metrics.insert(
            format!("hazard_fear/{}", named.name),
            hazard_mean(&fear[&(pi, d_max, n0)]),
        );
        for &d in &depths {
            res.metrics.insert(
                format!("mean_fear/{}/depth{d}", named.name),
                all_mean(&fear[&(pi, d, n0)]),
            );
        }
    }
    let controlled = hazard_mean(&fear[&(0, d_max, n0)]);
    let helpless = hazard_mean(&fear[&(last, d_max, n0)]);
    res.orderings.insert("control".into(), helpless > controlled);

    let rumination = (0..sweep.sim_policies.len()).all(|pi| {
        depths
            .windows(2)
            .all(|w| all_mean(&fear[&(pi, w[0], n0)]) <= all_mean(&fear[&(pi, w[1], n0)]))
    });
    res.orderings.insert("rumination".into(), rumination);

    // cells approaching the first cliff-adjacent cell, nearest last
    let mut approach: Vec<(usize, usize)> = positions
        .iter()
        .enumerate()
        .filter(|(_, &p)| p <= cliff.cliff_from)
        .map(|(i, &p)| (p, i))
        .collect();
    approach.sort_unstable();
    let near = &fear[&(0, d_max, n_max)];
    let closeness = approach.len() >= 2 && approach.windows(2).all(|w| near[w[0].1] < near[w[1].1]);
    res.orderings.insert("closeness".into(), closeness);

    res.runs.push(run.artifacts);
    Ok(res)
}

fn extinction_seed(cfg: &ScenarioConfig, seed: u64, opts: &RunOptions) -> Result<SeedResult, ExperimentError> {
    expect(cfg, Scenario::Extinction)?;
    let EnvironmentSpec::SlipperyCliff(cliff) = &cfg.environment else {
        unreachable!()
    };
    let punish = StateId(cliff.length + 1);
    let probe = cfg.sweep.probe.expect("validated");
    let params = AnticipationParams {
        n_rollouts: probe.n_rollouts,
        depth: probe.depth,
        ..cfg.anticipation_params()
    };
    let key = probe_key(seed);
    let mut probe_fear = Vec::new();
    let mut probe_hope = Vec::new();
    let mut p_punish = Vec::new();
    let run = run_agent(cfg, &cfg.name, seed, opts, |agent| {
        let start = agent.env().mdp().start();
        let a = anticipate_keyed(agent.q(), agent.model(), agent.terminal_flags(), start, &params, key)?;
        probe_fear.push(a.fear);
        probe_hope.push(a.hope);
        let act = ActionId(greedy_action(agent.q().values(), start));
        p_punish.push(agent.model().probability(start, act, punish).unwrap_or(0.0));
        Ok(())
    })?;
    let n = cfg.schedule.n_episodes;
    let mut res = SeedResult::new(cfg, seed);
    episode_series(&run.logs, "", &mut res.series);
    res.tables.insert(
        "probe_fear".into(),
        Table {
            x: (0..=n).map(|i| i as f64).collect(),
            y: probe_fear.clone(),
        },
    );
    res.tables.insert(
        "probe_hope".into(),
        Table {
            x: (0..=n).map(|i| i as f64).collect(),
            y: probe_hope,
        },
    );
    res.tables.insert(
        "p_punish".into(),
        Table {
            x: (0..=n).map(|i| i as f64).collect(),
            y: p_punish.clone(),
        },
    );

    let boundary = cfg.schedule.phases[1].start;
    let after = boundary + cfg.sweep.exposures.expect("validated");
    let (f0, f1) = (probe_fear[boundary], probe_fear[after]);
    res.metrics.insert("fear_at_boundary".into(), f0);
    res.metrics.insert("fear_after_exposures".into(), f1);
    res.metrics.insert("p_punish_at_boundary".into(), p_punish[boundary]);
    res.metrics.insert("p_punish_after_exposures".into(), p_punish[after]);
    res.orderings.insert("extinction".into(), f0 > 0.0 && f1 < 0.2 * f0);
    let safe = &p_punish[boundary..];
    res.orderings
        .insert("p_punish_monotone".into(), safe.windows(2).all(|w| w[1] <= w[0]));
    res.runs.push(run.artifacts);
    Ok(res)
}

fn gamble_seed(cfg: &ScenarioConfig, seed: u64, opts: &RunOptions) -> Result<SeedResult, ExperimentError> {
    expect(cfg, Scenario::Gamble)?;
    const WIN: StateId = StateId(2);
    const RISKY: ActionId = ActionId(1);
    let mut res = SeedResult::new(cfg, seed);
    let window = cfg.sweep.window.unwrap_or(cfg.schedule.n_episodes);
    let tail = cfg.schedule.n_episodes - window;
    let mut per_mode = Vec::new();
    for named in &cfg.sweep.modes {
        let mut mode_cfg = cfg.clone();
        mode_cfg.agent.td_mode = named.mode;
        let run_id = format!("{}-{}", cfg.name, named.name);
        let run = run_agent(&mode_cfg, &run_id, seed, opts, |_| Ok(()))?;
        let prefix = format!("{}/", named.name);
        episode_series(&run.logs, &prefix, &mut res.series);
        let risky: Vec<f64> = run
            .logs
            .iter()
            .map(|l| f64::from(u8::from(l.first_action() == Some(RISKY))))
            .collect();
        res.series.insert(format!("{prefix}risky"), risky.clone());

        let recent = &run.logs[tail..];
        let risky_fraction = mean(risky[tail..].iter().copied());
        let fear = mean(recent.iter().map(|l| l.onset_fear));
        let wins: Vec<f64> = recent
            .iter()
            .flat_map(|l| l.steps.iter())
            .filter(|s| s.terminal && s.next_state == WIN)
            .map(|s| s.signal.joy)
            .collect();
        res.metrics.insert(format!("{prefix}risky_fraction"), risky_fraction);
        res.metrics.insert(format!("{prefix}fear"), fear);
        res.metrics.insert(format!("{prefix}wins"), wins.len() as f64);
        let win_joy = (!wins.is_empty()).then(|| mean(wins.iter().copied()));
        if let Some(j) = win_joy {
            res.metrics.insert(format!("{prefix}win_joy"), j);
        }
        let q = &run.artifacts.final_state.q;
        res.metrics.insert(format!("{prefix}q_safe"), q.values()[0][0]);
        res.metrics.insert(format!("{prefix}q_risky"), q.values()[0][1]);
        per_mode.push((named.name.clone(), risky_fraction, fear, win_joy));
        res.runs.push(run.artifacts);
    }
    let (_, ref_risk, ref_fear, ref_joy) = per_mode[0].clone();
    for (name, risk, fear, joy) in &per_mode[1..] {
        res.orderings.insert(format!("{name}/more_risk"), *risk > ref_risk);
        res.orderings.insert(format!("{name}/less_fear"), *fear < ref_fear);
        let more_joy = matches!((joy, ref_joy), (Some(j), Some(r)) if *j > r);
        res.orderings.insert(format!("{name}/more_win_joy"), more_joy);
    }
    Ok(res)
}

fn lottery_seed(cfg: &ScenarioConfig, seed: u64, opts: &RunOptions) -> Result<SeedResult, ExperimentError> {
    expect(cfg, Scenario::Lottery)?;
    let EnvironmentSpec::LotteryReveal(lottery) = &cfg.environment else {
        unreachable!()
    };
    let k = lottery.k;
    let bust = StateId(k + 1);
    let run = run_agent(cfg, &cfg.name, seed, opts, |_| Ok(()))?;
    let mut res = SeedResult::new(cfg, seed);
    episode_series(&run.logs, "", &mut res.series);

    let mut bounds = true;
    let mut bust_disappointed = true;
    let mut signs = true;
    let mut bust_disappointment = Vec::new();
    let mut correct_delta: Vec<Vec<f64>> = vec![Vec::new(); k];
    let mut bust_delta: Vec<Vec<f64>> = vec![Vec::new(); k];
    let mut jackpots = 0usize;
    for log in &run.logs {
        for s in &log.steps {
            if s.next_state == bust {
                bust_delta[s.state.0].push(s.delta);
                signs &= s.delta < 0.0;
            } else {
                correct_delta[s.state.0].push(s.delta);
                signs &= s.delta > 0.0;
            }
        }
        let Some(last) = log.steps.last().filter(|s| s.terminal) else {
            continue;
        };
        if let Some(p) = last.settled {
            bounds &= last.signal.disappointment <= p.anticipated_joy && last.signal.relief <= p.anticipated_distress;
        }
        if last.next_state == bust {
            bust_disappointment.push(last.signal.disappointment);
            if log.steps.len() > 1 && cfg.emotion.kappa > 0.0 {
                bust_disappointed &= last.signal.disappointment > 0.0;
            }
        } else {
            jackpots += 1;
        }
    }
    let stages: Vec<f64> = (0..k).map(|i| i as f64).collect();
    res.tables.insert(
        "correct_reveal_delta".into(),
        Table {
            x: stages.clone(),
            y: correct_delta.iter().map(|v| mean(v.iter().copied())).collect(),
        },
    );
    res.tables.insert(
        "bust_delta".into(),
        Table {
            x: stages,
            y: bust_delta.iter().map(|v| mean(v.iter().copied())).collect(),
        },
    );
    res.metrics
        .insert("bust_disappointment".into(), mean(bust_disappointment.iter().copied()));
    res.metrics
        .insert("jackpot_rate".into(), jackpots as f64 / run.logs.len().max(1) as f64);
    res.orderings.insert("ledger_bounds".into(), bounds);
    res.orderings.insert("bust_disappointment".into(), bust_disappointed);
    if !cfg.agent.learning {
        res.orderings.insert("reveal_signs".into(), signs);
    }
    res.runs.push(run.artifacts);
    Ok(res)
}
