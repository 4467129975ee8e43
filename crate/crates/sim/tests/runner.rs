use std::fs;

use bwcr_sim::config::ExperimentConfig;
use bwcr_sim::runner::{run_experiment, trace_file_name, ExperimentSummary, SUMMARY_FILE};
use proptest::prelude::*;

fn config(algorithm: &str, horizons: &str, seeds: &[u64]) -> ExperimentConfig {
    let doc = format!(
        r#"{{
            "instance": {{"kind": "explicit", "means": [[0.9, 0.2, 0.5], [0.1, 0.7, 0.4]], "outcome": "fixed"}},
            "objective": {{"kind": "separable", "terms": [{{"kind": "log1p", "weight": 1.0}}, {{"kind": "linear", "weight": 0.5}}]}},
            "set": {{"kind": "halfspaces", "normals": [[1.0, 0.0]], "offsets": [0.6]}},
            "algorithm": {algorithm},
            "horizons": {horizons},
            "seeds": {seeds:?}
        }}"#
    );
    ExperimentConfig::from_json(&doc).unwrap()
}

#[test]
fn trace_has_one_row_per_step() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&config(r#"{"variant": "ucb_bwcr"}"#, "[10]", &[5]), dir.path()).unwrap();
    let text = fs::read_to_string(dir.path().join(trace_file_name(10, 5))).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 11);
    assert_eq!(lines[0], "t,arm,v_1,v_2,areg1,areg2,stopped");
    assert!(lines[1].starts_with("1,"));
    assert!(lines[10].starts_with("10,"));
    assert!(lines.iter().skip(1).all(|l| l.ends_with(",0")));
}

#[test]
fn knapsack_trace_flags_the_stop() {
    let dir = tempfile::tempdir().unwrap();
    // A budget of 1 runs out after a handful of steps.
    let cfg = ExperimentConfig::from_json(
        r#"{
            "instance": {"kind": "explicit", "means": [[0.9, 0.5], [0.8, 0.3]], "outcome": "fixed"},
            "algorithm": {"variant": "ucb_bwk", "budget": 1.0},
            "horizons": [50],
            "seeds": [0]
        }"#,
    )
    .unwrap();
    let summary = run_experiment(&cfg, dir.path()).unwrap();
    let run = &summary.runs[0];
    assert!(run.stop_time <= 50);
    assert!(run.budget_spent[1] <= 2.0);
    let text = fs::read_to_string(&run.trace).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].contains("reward_bwk"));
    assert_eq!(lines.len(), run.steps + 1);
    assert!(lines.last().unwrap().ends_with(",1"));
    assert_eq!(summary.horizons[0].early_stop_fraction, 1.0);
}

#[test]
fn summary_round_trips_through_json() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run_experiment(&config(r#"{"variant": "fw_primal"}"#, "[20, 40]", &[1, 2]), dir.path()).unwrap();
    let text = fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap();
    let parsed: ExperimentSummary = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed, summary);
    assert_eq!(parsed.runs.len(), 4);
    assert_eq!(parsed.variant, "fw_primal");
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = config(r#"{"variant": "combined"}"#, "[60]", &[8, 9]);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_experiment(&cfg, a.path()).unwrap();
    run_experiment(&cfg, b.path()).unwrap();
    for seed in [8, 9] {
        let name = trace_file_name(60, seed);
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap());
    }
}

#[test]
fn config_errors_exit_with_two() {
    let mut cfg = config(r#"{"variant": "ucb_bwcr"}"#, "[10]", &[1]);
    cfg.objective = None;
    cfg.set = None;
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_experiment(&cfg, dir.path()).unwrap_err().exit_code(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn medians_ignore_seed_order(seeds in proptest::sample::subsequence((0u64..12).collect::<Vec<_>>(), 3..6), rot in 0usize..6) {
        let mut shuffled = seeds.clone();
        let k = rot % shuffled.len();
        shuffled.rotate_left(k);
        shuffled.reverse();
        let run = |s: &[u64]| {
            let dir = tempfile::tempdir().unwrap();
            let cfg = config(r#"{"variant": "dual_oco"}"#, "[40]", s);
            run_experiment(&cfg, dir.path()).unwrap().horizons
        };
        prop_assert_eq!(run(&seeds), run(&shuffled));
    }
}
