//! Post-processing of simulation traces: queue-length series, waiting-time
//! statistics, and the on-disk export format.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{StationId, TaskId};
use crate::sim::{EventKind, ScenarioConfig, SimEvent};

pub const DEFAULT_BIN_WIDTH: u64 = 20;

/// End-of-run world counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalSummary {
    pub spawned: u64,
    pub delivered: usize,
    pub picked_up: usize,
    pub open: usize,
    pub final_queues: Vec<usize>,
}

/// Everything a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub config: ScenarioConfig,
    pub horizon: u64,
    pub stations: usize,
    pub events: Vec<SimEvent>,
    /// Queue lengths sampled by the engine at the end of every tick.
    pub live_queues: Vec<Vec<usize>>,
    pub summary: FinalSummary,
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("malformed trace at event {index} ({event}): {reason}")]
    Malformed {
        index: usize,
        event: String,
        reason: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
}

/// `lengths[s][t]` is the queue length of station `s` at the end of tick `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueueSeries {
    pub lengths: Vec<Vec<usize>>,
}

impl QueueSeries {
    pub fn stations(&self) -> usize {
        self.lengths.len()
    }

    pub fn ticks(&self) -> usize {
        self.lengths.first().map_or(0, Vec::len)
    }

    /// Lengths of every station at `tick`.
    pub fn at(&self, tick: usize) -> Vec<usize> {
        self.lengths.iter().map(|s| s[tick]).collect()
    }

    /// Largest pairwise difference at `tick`.
    pub fn spread(&self, tick: usize) -> usize {
        let row = self.at(tick);
        let max = row.iter().copied().max().unwrap_or(0);
        let min = row.iter().copied().min().unwrap_or(0);
        max - min
    }

    /// Transposes engine samples (tick-major) into a series.
    pub fn from_samples(stations: usize, samples: &[Vec<usize>]) -> Self {
        let lengths = (0..stations)
            .map(|s| samples.iter().map(|row| row[s]).collect())
            .collect();
        Self { lengths }
    }
}

struct Replay {
    tasks: BTreeMap<TaskId, (StationId, u64)>,
}

impl Replay {
    fn station_of(
        &self,
        index: usize,
        event: &SimEvent,
        task: TaskId,
    ) -> Result<StationId, MetricsError> {
        self.tasks
            .get(&task)
            .map(|&(s, _)| s)
            .ok_or_else(|| malformed(index, event, format!("{task} was never spawned")))
    }
}

fn malformed(index: usize, event: &SimEvent, reason: String) -> MetricsError {
    MetricsError::Malformed {
        index,
        event: serde_json::to_string(event).unwrap_or_default(),
        reason,
    }
}

/// Checks ordering and that every task is spawned before it is mentioned.
fn replay_tasks(trace: &SimTrace) -> Result<Replay, MetricsError> {
    let mut replay = Replay {
        tasks: BTreeMap::new(),
    };
    let mut last = 0;
    for (i, e) in trace.events.iter().enumerate() {
        if e.time < last {
            return Err(malformed(i, e, format!("time goes back from {last}")));
        }
        if e.time >= trace.horizon {
            return Err(malformed(
                i,
                e,
                format!("time is past the horizon {}", trace.horizon),
            ));
        }
        last = e.time;
        match e.kind {
            EventKind::TaskSpawned { task, station, .. } => {
                if station.0 >= trace.stations {
                    return Err(malformed(i, e, format!("unknown station {station}")));
                }
                if replay.tasks.insert(task, (station, e.time)).is_some() {
                    return Err(malformed(i, e, format!("{task} spawned twice")));
                }
            }
            _ => {
                if let Some(task) = e.kind.task() {
                    replay.station_of(i, e, task)?;
                }
            }
        }
    }
    Ok(replay)
}

/// Rebuilds queue lengths from the event log alone. A task joins its queue
/// when spawned and leaves it when picked up.
pub fn queue_series(trace: &SimTrace) -> Result<QueueSeries, MetricsError> {
    let replay = replay_tasks(trace)?;
    let horizon = trace.horizon as usize;
    let mut samples = Vec::with_capacity(horizon);
    let mut current = vec![0usize; trace.stations];
    let mut events = trace.events.iter().enumerate().peekable();
    for tick in 0..horizon {
        while let Some((i, e)) = events.next_if(|(_, e)| e.time as usize == tick) {
            match e.kind {
                EventKind::TaskSpawned { station, .. } => current[station.0] += 1,
                EventKind::TaskPickedUp { task, .. } => {
                    let s = replay.station_of(i, e, task)?.0;
                    current[s] = current[s]
                        .checked_sub(1)
                        .ok_or_else(|| malformed(i, e, "pickup from an empty queue".into()))?;
                }
                _ => {}
            }
        }
        samples.push(current.clone());
    }
    Ok(QueueSeries::from_samples(trace.stations, &samples))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskWait {
    pub task: TaskId,
    pub station: StationId,
    pub arrival: u64,
    /// `None` for tasks still undelivered at the horizon.
    pub completion: Option<u64>,
    pub wait: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaitStats {
    /// Delivered tasks, in task order.
    pub delivered: Vec<TaskWait>,
    /// Undelivered tasks with `wait = horizon - arrival`.
    pub censored: Vec<TaskWait>,
}

impl WaitStats {
    pub fn waits(&self) -> impl Iterator<Item = u64> + '_ {
        self.delivered.iter().map(|w| w.wait)
    }

    pub fn mean(&self) -> Option<f64> {
        if self.delivered.is_empty() {
            return None;
        }
        Some(self.waits().sum::<u64>() as f64 / self.delivered.len() as f64)
    }

    pub fn max(&self) -> Option<u64> {
        self.waits().max()
    }

    /// Population standard deviation.
    pub fn std_dev(&self) -> Option<f64> {
        let mean = self.mean()?;
        let var = self.waits().map(|w| (w as f64 - mean).powi(2)).sum::<f64>()
            / self.delivered.len() as f64;
        Some(var.sqrt())
    }

    /// Middle value; mean of the two middle values for even counts.
    pub fn median(&self) -> Option<f64> {
        let mut w: Vec<u64> = self.waits().collect();
        if w.is_empty() {
            return None;
        }
        w.sort_unstable();
        let n = w.len();
        Some(if n % 2 == 1 {
            w[n / 2] as f64
        } else {
            (w[n / 2 - 1] + w[n / 2]) as f64 / 2.0
        })
    }

    /// Counts per bin `[k*width, (k+1)*width)`, up to the last non-empty bin.
    pub fn histogram(&self, bin_width: u64) -> Vec<usize> {
        assert!(bin_width > 0, "bin width must be positive");
        let mut bins = Vec::new();
        for w in self.waits() {
            let b = (w / bin_width) as usize;
            if bins.len() <= b {
                bins.resize(b + 1, 0);
            }
            bins[b] += 1;
        }
        bins
    }

    /// Time of the last delivery at each station, if any.
    pub fn last_delivery(&self, stations: usize) -> Vec<Option<u64>> {
        let mut out = vec![None; stations];
        for w in &self.delivered {
            let slot = &mut out[w.station.0];
            *slot = (*slot).max(w.completion);
        }
        out
    }
}

/// Waiting times, arrival to delivery, from the event log.
pub fn wait_stats(trace: &SimTrace) -> Result<WaitStats, MetricsError> {
    let replay = replay_tasks(trace)?;
    let mut done: BTreeMap<TaskId, u64> = BTreeMap::new();
    for (i, e) in trace.events.iter().enumerate() {
        if let EventKind::TaskDelivered { task, .. } = e.kind {
            if done.insert(task, e.time).is_some() {
                return Err(malformed(i, e, format!("{task} delivered twice")));
            }
        }
    }
    let mut stats = WaitStats {
        delivered: Vec::new(),
        censored: Vec::new(),
    };
    for (&task, &(station, arrival)) in &replay.tasks {
        match done.get(&task) {
            Some(&completion) => stats.delivered.push(TaskWait {
                task,
                station,
                arrival,
                completion: Some(completion),
                wait: completion - arrival,
            }),
            None => stats.censored.push(TaskWait {
                task,
                station,
                arrival,
                completion: None,
                wait: trace.horizon - arrival,
            }),
        }
    }
    Ok(stats)
}

#[derive(Debug, Serialize, Deserialize)]
struct QueueRow {
    tick: u64,
    station: usize,
    length: usize,
}

#[derive(Debug, Serialize)]
struct WaitRow {
    task: u64,
    station: usize,
    arrival: u64,
    completion: u64,
    wait: u64,
}

/// Aggregates written to `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: serde_json::Value,
    pub seed: u64,
    pub horizon: u64,
    pub spawned: u64,
    pub delivered: usize,
    pub undelivered: usize,
    pub mean_wait: Option<f64>,
    pub max_wait: Option<u64>,
    pub median_wait: Option<f64>,
    pub wait_std_dev: Option<f64>,
    pub final_queues: Vec<usize>,
    pub histogram_bin_width: u64,
    pub histogram: Vec<usize>,
}

pub fn run_summary(trace: &SimTrace, waits: &WaitStats) -> RunSummary {
    RunSummary {
        config: trace.config.echo(),
        seed: trace.config.rng_seed,
        horizon: trace.horizon,
        spawned: trace.summary.spawned,
        delivered: waits.delivered.len(),
        undelivered: waits.censored.len(),
        mean_wait: waits.mean(),
        max_wait: waits.max(),
        median_wait: waits.median(),
        wait_std_dev: waits.std_dev(),
        final_queues: trace.summary.final_queues.clone(),
        histogram_bin_width: DEFAULT_BIN_WIDTH,
        histogram: waits.histogram(DEFAULT_BIN_WIDTH),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> MetricsError + '_ {
    move |source| MetricsError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> MetricsError + '_ {
    move |source| MetricsError::Csv {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `queues.csv`, `waits.csv`, `events.jsonl` and `summary.json` into
/// `dir`, creating it if needed.
pub fn export(trace: &SimTrace, dir: &Path) -> Result<RunSummary, MetricsError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let series = queue_series(trace)?;
    let waits = wait_stats(trace)?;

    let path = dir.join("queues.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    if series.ticks() == 0 {
        w.write_record(["tick", "station", "length"])
            .map_err(csv_err(&path))?;
    }
    for tick in 0..series.ticks() {
        for station in 0..series.stations() {
            w.serialize(QueueRow {
                tick: tick as u64,
                station,
                length: series.lengths[station][tick],
            })
            .map_err(csv_err(&path))?;
        }
    }
    w.flush().map_err(io_err(&path))?;

    let path = dir.join("waits.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    if waits.delivered.is_empty() {
        w.write_record(["task", "station", "arrival", "completion", "wait"])
            .map_err(csv_err(&path))?;
    }
    for t in &waits.delivered {
        w.serialize(WaitRow {
            task: t.task.0,
            station: t.station.0,
            arrival: t.arrival,
            completion: t
                .completion
                .expect("delivered tasks have a completion time"),
            wait: t.wait,
        })
        .map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;

    let path = dir.join("events.jsonl");
    let file = File::create(&path).map_err(io_err(&path))?;
    let mut out = BufWriter::new(file);
    for e in &trace.events {
        let line = serde_json::to_string(e).expect("events serialize");
        writeln!(out, "{line}").map_err(io_err(&path))?;
    }
    out.flush().map_err(io_err(&path))?;

    let summary = run_summary(trace, &waits);
    let path = dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(io_err(&path))?;
    Ok(summary)
}

/// Parses a `queues.csv` written by [`export`].
pub fn read_queue_csv(path: &Path) -> Result<QueueSeries, MetricsError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut lengths: Vec<Vec<usize>> = Vec::new();
    for row in r.deserialize::<QueueRow>() {
        let row = row.map_err(csv_err(path))?;
        if lengths.len() <= row.station {
            lengths.resize(row.station + 1, Vec::new());
        }
        let series = &mut lengths[row.station];
        if series.len() as u64 != row.tick {
            return Err(MetricsError::Format {
                path: path.display().to_string(),
                message: format!("station {} jumps to tick {}", row.station, row.tick),
            });
        }
        series.push(row.length);
    }
    Ok(QueueSeries { lengths })
}
