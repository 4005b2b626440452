use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use qalloc::metrics::{
    export, queue_series, read_queue_csv, wait_stats, QueueSeries, RunSummary, SimTrace,
};
use qalloc::sim::{preset, run_scenario, ScenarioConfig};

fn config(name: &str, seed: u64, horizon: u64) -> ScenarioConfig {
    let mut c = preset(name).unwrap();
    c.rng_seed = seed;
    c.horizon = horizon;
    c
}

fn exported(trace: &SimTrace) -> (tempfile::TempDir, RunSummary) {
    let dir = tempfile::tempdir().unwrap();
    let summary = export(trace, dir.path()).unwrap();
    (dir, summary)
}

#[test]
fn replayed_queues_match_live_samples() {
    for (name, seed) in [("S1", 0), ("S2", 1), ("S3", 2), ("S4", 3), ("S5", 4)] {
        let trace = run_scenario(&config(name, seed, 1000)).unwrap();
        let live = QueueSeries::from_samples(trace.stations, &trace.live_queues);
        assert_eq!(queue_series(&trace).unwrap(), live, "{name}");
        assert_eq!(live.ticks(), 1000);
        assert_eq!(live.at(999), trace.summary.final_queues);
    }
}

#[test]
fn scenario_one_series_endpoints() {
    let trace = run_scenario(&preset("S1").unwrap()).unwrap();
    let s = queue_series(&trace).unwrap();
    // An agent starting next to a station can pick up during tick 0.
    assert!(
        s.at(0).iter().all(|&n| (9..=10).contains(&n)),
        "{:?}",
        s.at(0)
    );
    assert_eq!(s.at(s.ticks() - 1), vec![0, 0, 0]);
    let total = |t| s.at(t).iter().sum::<usize>();
    assert!((1..s.ticks()).all(|t| total(t) <= total(t - 1)));
}

#[test]
fn csv_round_trip_and_row_counts() {
    let trace = run_scenario(&config("S4", 11, 500)).unwrap();
    let (dir, _) = exported(&trace);
    let back = read_queue_csv(&dir.path().join("queues.csv")).unwrap();
    assert_eq!(back, queue_series(&trace).unwrap());
    let text = std::fs::read_to_string(dir.path().join("queues.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tick,station,length"));
    assert_eq!(lines.count(), 500 * 3);
    let waits = std::fs::read_to_string(dir.path().join("waits.csv")).unwrap();
    assert_eq!(
        waits.lines().next(),
        Some("task,station,arrival,completion,wait")
    );
    assert_eq!(waits.lines().count() - 1, trace.summary.delivered);
}

/// Statistics straight from `events.jsonl`, parsed as untyped JSON.
#[test]
fn summary_matches_event_log() {
    let trace = run_scenario(&config("S3", 5, 1500)).unwrap();
    let (dir, summary) = exported(&trace);
    let log = std::fs::read_to_string(dir.path().join("events.jsonl")).unwrap();
    let mut arrival = BTreeMap::new();
    let mut waits = Vec::new();
    for line in log.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let time = v["time"].as_u64().unwrap();
        let task = v["task"].as_u64();
        match v["kind"].as_str().unwrap() {
            "TaskSpawned" => {
                arrival.insert(task.unwrap(), time);
            }
            "TaskDelivered" => waits.push(time - arrival[&task.unwrap()]),
            _ => {}
        }
    }
    assert_eq!(log.lines().count(), trace.events.len());
    assert!(!waits.is_empty());
    let n = waits.len() as f64;
    let mean = waits.iter().sum::<u64>() as f64 / n;
    let var = waits
        .iter()
        .map(|&w| (w as f64 - mean).powi(2))
        .sum::<f64>()
        / n;
    assert!((summary.mean_wait.unwrap() - mean).abs() < 1e-9);
    assert!((summary.wait_std_dev.unwrap() - var.sqrt()).abs() < 1e-9);
    assert_eq!(summary.max_wait, waits.iter().copied().max());
    assert_eq!(summary.delivered, waits.len());
    assert_eq!(summary.spawned as usize, arrival.len());
    assert_eq!(summary.undelivered, arrival.len() - waits.len());
    assert_eq!(summary.histogram.iter().sum::<usize>(), waits.len());
    for (bin, &count) in summary.histogram.iter().enumerate() {
        let lo = bin as u64 * summary.histogram_bin_width;
        let hi = lo + summary.histogram_bin_width;
        assert_eq!(
            waits.iter().filter(|&&w| (lo..hi).contains(&w)).count(),
            count
        );
    }
    let stats = wait_stats(&trace).unwrap();
    for c in &stats.censored {
        assert_eq!(c.wait, 1500 - c.arrival);
    }
}

#[test]
fn summary_echo_ignores_seed() {
    let a = exported(&run_scenario(&config("S5", 1, 200)).unwrap()).1;
    let b = exported(&run_scenario(&config("S5", 2, 200)).unwrap()).1;
    assert_eq!(a.config, b.config);
    assert_eq!((a.seed, b.seed), (1, 2));
    assert_eq!(a.config["penalty"]["q"], 0.0);
    assert!(a.config.get("rng_seed").is_none());
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Frozen output of a short S4 run. Set `UPDATE_GOLDEN=1` to rewrite it
/// after an intended behaviour change.
#[test]
fn golden_outputs() {
    let trace = run_scenario(&config("S4", 2024, 300)).unwrap();
    let (dir, _) = exported(&trace);
    let files = ["queues.csv", "waits.csv", "events.jsonl", "summary.json"];
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(golden_dir()).unwrap();
        for f in files {
            std::fs::copy(dir.path().join(f), golden_dir().join(f)).unwrap();
        }
    }
    for f in files {
        let got = std::fs::read(dir.path().join(f)).unwrap();
        let want = std::fs::read(golden_dir().join(f)).unwrap_or_else(|e| panic!("{f}: {e}"));
        assert!(got == want, "{f} differs from the golden copy");
    }
}
