use std::path::PathBuf;

use affectrl::experiments::{run_scenario, RunOptions, Scenario, ScenarioConfig, BUILTIN_CONFIGS};
use affectrl::io::{
    annotate, annotate_steps, config_bytes, load_config, load_snapshot, parse_config, parse_logged_steps, plot_data,
    save_snapshot, trace_bytes, write_outputs, IoError, Snapshot,
};
use affectrl::learner::QTable;
use serde_json::{json, Value};

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn shipped_json(scenario: Scenario) -> Value {
    let (_, text) = BUILTIN_CONFIGS.iter().find(|(s, _)| *s == scenario).unwrap();
    serde_json::from_str(text).unwrap()
}

fn validation_fields(text: &str) -> Vec<String> {
    match parse_config(text) {
        Err(IoError::Validation(errors)) => errors.into_iter().map(|e| e.field).collect(),
        other => panic!("expected validation errors, got {other:?}"),
    }
}

#[test]
fn every_shipped_config_loads() {
    for (scenario, _) in BUILTIN_CONFIGS {
        let cfg = load_config(&configs_dir().join(format!("{}.json", scenario.name()))).unwrap();
        assert_eq!(cfg.scenario, scenario);
        assert!(cfg.notes.is_some());
    }
}

#[test]
fn shipped_habituation_values() {
    let cfg = load_config(&configs_dir().join("habituation.json")).unwrap();
    assert_eq!(cfg.agent.alpha, 0.1);
    assert_eq!(cfg.seeds, vec![0]);
}

#[test]
fn out_of_range_gamma_is_named() {
    let mut v = shipped_json(Scenario::Habituation);
    v["agent"]["gamma"] = json!(1.5);
    assert!(validation_fields(&v.to_string()).contains(&"agent.gamma".to_string()));
}

#[test]
fn missing_seeds_reported() {
    let mut v = shipped_json(Scenario::Habituation);
    v.as_object_mut().unwrap().remove("seeds");
    assert!(validation_fields(&v.to_string()).contains(&"seeds".to_string()));
}

#[test]
fn all_errors_reported_together() {
    let mut v = shipped_json(Scenario::Habituation);
    v["agent"]["gamma"] = json!(-0.5);
    v["agent"]["alpha"] = json!(0.0);
    v["seeds"] = json!([]);
    let fields = validation_fields(&v.to_string());
    for f in ["agent.gamma", "agent.alpha", "seeds"] {
        assert!(fields.iter().any(|x| x == f), "{f} missing from {fields:?}");
    }
}

#[test]
fn unknown_key_rejected() {
    let mut v = shipped_json(Scenario::Habituation);
    v["mystery"] = json!(1);
    assert!(matches!(parse_config(&v.to_string()), Err(IoError::Validation(_))));
}

#[test]
fn syntax_error_has_position() {
    match parse_config("{\n  \"name\": \"x\",\n  oops\n}") {
        Err(IoError::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
}

#[test]
fn missing_file_is_io_error() {
    let err = load_config(&configs_dir().join("nope.json")).unwrap_err();
    assert!(matches!(err, IoError::Io { .. }));
    assert!(!err.is_input_error());
}

#[test]
fn config_roundtrip_bytes() {
    for (_, text) in BUILTIN_CONFIGS {
        let a = config_bytes(&parse_config(text).unwrap()).unwrap();
        let b = config_bytes(&parse_config(std::str::from_utf8(&a).unwrap()).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}

fn small_lottery() -> ScenarioConfig {
    let mut cfg = parse_config(BUILTIN_CONFIGS.iter().find(|(s, _)| *s == Scenario::Lottery).unwrap().1).unwrap();
    cfg.seeds = vec![5];
    cfg.schedule.n_episodes = 40;
    cfg
}

#[test]
fn annotate_reproduces_frozen_run() {
    let cfg = small_lottery();
    assert!(!cfg.agent.learning);
    let out = run_scenario(&cfg, &RunOptions::default()).unwrap();
    let run = &out.seeds[0].runs[0];
    let original = trace_bytes(&run.trace).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let snap = dir.path().join("snap.json");
    let annotated = dir.path().join("annotated.csv");
    std::fs::write(&trace, &original).unwrap();
    save_snapshot(
        &Snapshot::new(&run.run_id, run.seed, cfg.clone(), run.initial.clone()),
        &snap,
    )
    .unwrap();
    let n = annotate(&trace, &snap, &annotated).unwrap();
    assert_eq!(n, run.trace.len());
    assert_eq!(std::fs::read(&annotated).unwrap(), original);
}

#[test]
fn annotate_learned_model_run() {
    let mut cfg = parse_config(
        BUILTIN_CONFIGS
            .iter()
            .find(|(s, _)| *s == Scenario::Extinction)
            .unwrap()
            .1,
    )
    .unwrap();
    cfg.seeds = vec![2];
    cfg.schedule.n_episodes = 12;
    cfg.sweep.exposures = Some(4);
    let out = run_scenario(&cfg, &RunOptions::default()).unwrap();
    let run = &out.seeds[0].runs[0];
    let original = trace_bytes(&run.trace).unwrap();
    let snapshot = Snapshot::new(&run.run_id, run.seed, cfg.clone(), run.initial.clone());
    let rows = annotate_steps(&parse_logged_steps(&original).unwrap(), &snapshot).unwrap();
    assert_eq!(trace_bytes(&rows).unwrap(), original);
}

#[test]
fn annotate_minimal_columns() {
    let cfg = small_lottery();
    let out = run_scenario(&cfg, &RunOptions::default()).unwrap();
    let run = &out.seeds[0].runs[0];
    let mut minimal = String::from("state,action,reward,next_state\n");
    for r in &run.trace {
        minimal.push_str(&format!("{},{},{},{}\n", r.state, r.action, r.reward, r.next_state));
    }
    let snapshot = Snapshot::new(&run.run_id, run.seed, cfg, run.initial.clone());
    let rows = annotate_steps(&parse_logged_steps(minimal.as_bytes()).unwrap(), &snapshot).unwrap();
    assert_eq!(rows.len(), run.trace.len());
    for (a, b) in rows.iter().zip(&run.trace) {
        assert_eq!(a.td_error, b.td_error);
        assert_eq!((a.joy, a.distress, a.hope, a.fear), (b.joy, b.distress, b.hope, b.fear));
        assert_eq!((a.disappointment, a.relief), (b.disappointment, b.relief));
    }
}

#[test]
fn annotate_self_loop_delta() {
    let cfg: ScenarioConfig = serde_json::from_value(json!({
        "name": "loop",
        "scenario": "habituation",
        "environment": {"kind": "TabularExplicit", "params": {"start": 0, "states": [
            {"actions": [[{"next": 0, "p": 0.5, "r": 0.0}, {"next": 1, "p": 0.5, "r": 1.0}]]},
            {"terminal": true, "actions": []}
        ]}},
        "agent": {"alpha": 0.1, "gamma": 0.9, "learning": false, "model": "exact"},
        "emotion": {"n_rollouts": 1, "depth": 1},
        "schedule": {"n_episodes": 1},
        "seeds": [0]
    }))
    .unwrap();
    let agent = affectrl::experiments::Agent::new(&cfg, 0).unwrap();
    let mut state = agent.state();
    state.q = QTable::from_values(vec![vec![2.0], vec![]], 0.1, 0.9).unwrap();
    let snapshot = Snapshot::new("loop", 0, cfg, state);
    let trace = "state,action,reward,next_state\n0,0,0,0\n0,0,1,1\n";
    let rows = annotate_steps(&parse_logged_steps(trace.as_bytes()).unwrap(), &snapshot).unwrap();
    assert!((rows[0].td_error - (0.9 - 1.0) * 2.0).abs() < 1e-12);
    assert!((rows[0].distress - 0.2).abs() < 1e-12);
    assert!((rows[1].td_error - (1.0 - 2.0)).abs() < 1e-12);
}

#[test]
fn annotate_empty_trace() {
    let cfg = small_lottery();
    let out = run_scenario(&cfg, &RunOptions::default()).unwrap();
    let run = &out.seeds[0].runs[0];
    let dir = tempfile::tempdir().unwrap();
    let (trace, snap, annotated) = (
        dir.path().join("t.csv"),
        dir.path().join("s.json"),
        dir.path().join("a.csv"),
    );
    std::fs::write(&trace, "").unwrap();
    save_snapshot(
        &Snapshot::new(&run.run_id, run.seed, cfg.clone(), run.initial.clone()),
        &snap,
    )
    .unwrap();
    assert_eq!(annotate(&trace, &snap, &annotated).unwrap(), 0);
    assert_eq!(std::fs::read(&annotated).unwrap(), trace_bytes(&[]).unwrap());
}

#[test]
fn annotate_schema_mismatch() {
    assert!(matches!(
        parse_logged_steps(b"state,action,reward\n0,0,1\n"),
        Err(IoError::SchemaMismatch(_))
    ));
}

#[test]
fn snapshot_version_checked() {
    let cfg = small_lottery();
    let out = run_scenario(&cfg, &RunOptions::default()).unwrap();
    let run = &out.seeds[0].runs[0];
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    save_snapshot(
        &Snapshot::new(&run.run_id, run.seed, cfg, run.final_state.clone()),
        &path,
    )
    .unwrap();
    let reloaded = load_snapshot(&path).unwrap();
    assert_eq!(reloaded.agent, run.final_state);

    let mut v: Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    v["format_version"] = json!(99);
    std::fs::write(&path, v.to_string()).unwrap();
    assert!(matches!(
        load_snapshot(&path),
        Err(IoError::VersionMismatch { found: 99, .. })
    ));
}

#[test]
fn outputs_and_plot_data() {
    let cfg = parse_config(
        BUILTIN_CONFIGS
            .iter()
            .find(|(s, _)| *s == Scenario::Habituation)
            .unwrap()
            .1,
    )
    .unwrap();
    let out = run_scenario(&cfg, &RunOptions { audit_rollouts: true }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = write_outputs(dir.path(), &out, true).unwrap();
    for name in [
        "summary.json",
        "trace_habituation_seed0.csv",
        "snapshot_habituation_seed0.json",
        "rollouts_habituation_seed0.json",
    ] {
        assert!(written.contains(&dir.path().join(name)), "{name} not written");
    }

    let csv_path = dir.path().join("joy.csv");
    let n = plot_data(&dir.path().join("summary.json"), "joy", &csv_path).unwrap();
    assert_eq!(n, cfg.schedule.n_episodes);
    let mut rdr = csv::Reader::from_path(&csv_path).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["x", "mean", "stdev"]);
    let mut expected = 1.0f64;
    for (i, rec) in rdr.records().take(100).enumerate() {
        let rec = rec.unwrap();
        assert_eq!(rec[0].parse::<f64>().unwrap(), i as f64);
        assert!((rec[1].parse::<f64>().unwrap() - expected).abs() < 1e-12);
        assert_eq!(rec[2].parse::<f64>().unwrap(), 0.0);
        expected *= 0.9;
    }

    let err = plot_data(&dir.path().join("summary.json"), "nonsense", &csv_path).unwrap_err();
    assert!(matches!(err, IoError::UnknownSeries(_)) && err.is_input_error());
}
