use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::agent::{AgentState, RolloutAudit};
use super::config::{Scenario, ScenarioConfig};
use super::ExperimentError;
use crate::io::TraceRow;

/// Mean and population standard deviation across seeds, point by point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub x: Vec<f64>,
    pub mean: Vec<f64>,
    pub stdev: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub stdev: f64,
    /// Seeds that reported the metric.
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderingCount {
    pub passed: usize,
    pub total: usize,
}

impl OrderingCount {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.passed as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub scenario: Scenario,
    pub seeds: Vec<u64>,
    pub n_episodes: usize,
    /// Per-episode series; every one has `n_episodes` points.
    pub series: BTreeMap<String, SeriesSummary>,
    /// Series over something other than episodes (positions, stages).
    pub tables: BTreeMap<String, SeriesSummary>,
    pub metrics: BTreeMap<String, Stat>,
    pub orderings: BTreeMap<String, OrderingCount>,
}

impl RunSummary {
    /// A per-episode series or a table, by name.
    pub fn lookup(&self, name: &str) -> Option<&SeriesSummary> {
        self.series.get(name).or_else(|| self.tables.get(name))
    }
}

/// Points along a non-episode axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Files produced by one agent: its config, start and end states, trace.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub run_id: String,
    pub seed: u64,
    pub config: ScenarioConfig,
    pub initial: AgentState,
    pub final_state: AgentState,
    pub trace: Vec<TraceRow>,
    pub rollouts: Vec<RolloutAudit>,
}

/// Everything measured for one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedResult {
    pub name: String,
    pub scenario: Scenario,
    pub seed: u64,
    pub n_episodes: usize,
    pub series: BTreeMap<String, Vec<f64>>,
    pub tables: BTreeMap<String, Table>,
    pub metrics: BTreeMap<String, f64>,
    pub orderings: BTreeMap<String, bool>,
    pub runs: Vec<RunArtifacts>,
}

impl SeedResult {
    pub fn new(cfg: &ScenarioConfig, seed: u64) -> Self {
        Self {
            name: cfg.name.clone(),
            scenario: cfg.scenario,
            seed,
            n_episodes: cfg.schedule.n_episodes,
            series: BTreeMap::new(),
            tables: BTreeMap::new(),
            metrics: BTreeMap::new(),
            orderings: BTreeMap::new(),
            runs: Vec::new(),
        }
    }
}

fn mean_stdev(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mut total = 0.0;
    for &x in xs {
        total += x;
    }
    let mean = total / n;
    let mut ss = 0.0;
    for &x in xs {
        ss += (x - mean) * (x - mean);
    }
    (mean, (ss / n).sqrt())
}

fn pointwise(x: Vec<f64>, columns: &[&[f64]]) -> SeriesSummary {
    let len = x.len();
    let mut mean = Vec::with_capacity(len);
    let mut stdev = Vec::with_capacity(len);
    for i in 0..len {
        let at: Vec<f64> = columns.iter().map(|c| c[i]).collect();
        let (m, s) = mean_stdev(&at);
        mean.push(m);
        stdev.push(s);
    }
    SeriesSummary { x, mean, stdev }
}

/// Aggregate per-seed results, in the order given.
pub fn summarize(runs: &[SeedResult]) -> Result<RunSummary, ExperimentError> {
    let first = runs.first().ok_or(ExperimentError::NoRuns)?;
    for r in &runs[1..] {
        let same_series = r.series.len() == first.series.len()
            && r.series
                .iter()
                .all(|(k, v)| first.series.get(k).is_some_and(|f| f.len() == v.len()));
        let same_tables = r.tables.len() == first.tables.len()
            && r.tables
                .iter()
                .all(|(k, t)| first.tables.get(k).is_some_and(|f| f.x == t.x));
        if r.n_episodes != first.n_episodes || r.scenario != first.scenario || !same_series || !same_tables {
            return Err(ExperimentError::MismatchedSchedules);
        }
    }
    let mut series = BTreeMap::new();
    for (name, v) in &first.series {
        let cols: Vec<&[f64]> = runs.iter().map(|r| r.series[name].as_slice()).collect();
        let x = (0..v.len()).map(|i| i as f64).collect();
        series.insert(name.clone(), pointwise(x, &cols));
    }
    let mut tables = BTreeMap::new();
    for (name, t) in &first.tables {
        let cols: Vec<&[f64]> = runs.iter().map(|r| r.tables[name].y.as_slice()).collect();
        tables.insert(name.clone(), pointwise(t.x.clone(), &cols));
    }
    let mut metrics = BTreeMap::new();
    let names: std::collections::BTreeSet<&String> = runs.iter().flat_map(|r| r.metrics.keys()).collect();
    for name in names {
        let values: Vec<f64> = runs.iter().filter_map(|r| r.metrics.get(name).copied()).collect();
        let (mean, stdev) = mean_stdev(&values);
        metrics.insert(
            name.clone(),
            Stat {
                mean,
                stdev,
                n: values.len(),
            },
        );
    }
    let mut orderings = BTreeMap::new();
    let names: std::collections::BTreeSet<&String> = runs.iter().flat_map(|r| r.orderings.keys()).collect();
    for name in names {
        let outcomes: Vec<bool> = runs.iter().filter_map(|r| r.orderings.get(name).copied()).collect();
        orderings.insert(
            name.clone(),
            OrderingCount {
                passed: outcomes.iter().filter(|&&b| b).count(),
                total: outcomes.len(),
            },
        );
    }
    Ok(RunSummary {
        name: first.name.clone(),
        scenario: first.scenario,
        seeds: runs.iter().map(|r| r.seed).collect(),
        n_episodes: first.n_episodes,
        series,
        tables,
        metrics,
        orderings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(seed: u64, joy: Vec<f64>) -> SeedResult {
        SeedResult {
            name: "t".into(),
            scenario: Scenario::Habituation,
            seed,
            n_episodes: joy.len(),
            series: BTreeMap::from([("joy".to_string(), joy)]),
            tables: BTreeMap::new(),
            metrics: BTreeMap::from([("m".to_string(), seed as f64)]),
            orderings: BTreeMap::from([("o".to_string(), seed.is_multiple_of(2))]),
            runs: Vec::new(),
        }
    }

    #[test]
    fn single_seed_has_zero_spread() {
        let s = summarize(&[result(1, vec![0.5, 0.25])]).unwrap();
        assert_eq!(s.series["joy"].mean, vec![0.5, 0.25]);
        assert_eq!(s.series["joy"].stdev, vec![0.0, 0.0]);
    }

    #[test]
    fn duplicates_have_zero_spread() {
        let r = result(3, vec![0.1, 0.7]);
        let s = summarize(&[r.clone(), r]).unwrap();
        assert_eq!(s.series["joy"].mean, vec![0.1, 0.7]);
        assert_eq!(s.series["joy"].stdev, vec![0.0, 0.0]);
    }

    #[test]
    fn two_seed_arithmetic() {
        let s = summarize(&[result(0, vec![1.0, 2.0]), result(1, vec![3.0, 6.0])]).unwrap();
        assert_eq!(s.series["joy"].mean, vec![2.0, 4.0]);
        assert_eq!(s.series["joy"].stdev, vec![1.0, 2.0]);
        assert_eq!(s.series["joy"].x, vec![0.0, 1.0]);
        assert_eq!(
            s.metrics["m"],
            Stat {
                mean: 0.5,
                stdev: 0.5,
                n: 2
            }
        );
        assert_eq!(s.orderings["o"], OrderingCount { passed: 1, total: 2 });
    }

    #[test]
    fn mismatched_lengths() {
        let r = summarize(&[result(0, vec![1.0]), result(1, vec![1.0, 2.0])]);
        assert!(matches!(r, Err(ExperimentError::MismatchedSchedules)));
    }

    #[test]
    fn empty_input() {
        assert!(matches!(summarize(&[]), Err(ExperimentError::NoRuns)));
    }
}
