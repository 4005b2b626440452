//! The five built-in evaluation scenarios.
//!
//! All share one 40x20 warehouse. Three pickup stations sit on the west wall
//! and three shared drop-off points on the east wall, each on the centre row
//! of an aisle, so every station to drop-off trip is 37 cells long. One agent
//! is parked beside the stations and one beside the drop-offs, which keeps
//! their work cycles half a trip apart. Every station admits one agent at a
//! time.

use std::collections::BTreeMap;

use crate::bidding::{PenaltyMode, PenaltyParams, TauMode};
use crate::map::Cell;

use super::config::{AgentSpec, MapSpec, ScenarioConfig, StationSpec};

pub const WAREHOUSE_MAP: &str = include_str!("../../maps/warehouse.txt");

pub const STATION_CELLS: [Cell; 3] = [Cell::new(1, 5), Cell::new(1, 10), Cell::new(1, 15)];
pub const DROPOFF_CELLS: [Cell; 3] = [Cell::new(38, 5), Cell::new(38, 10), Cell::new(38, 15)];
pub const HOME_CELLS: [Cell; 2] = [Cell::new(3, 10), Cell::new(38, 10)];

/// Per-tick arrival chances of the dynamic scenarios.
pub const DYNAMIC_ARRIVALS: [f64; 3] = [0.05, 0.15, 0.15];
pub const GLOBAL_TASK_CAP: usize = 40;

fn base(
    name: &str,
    horizon: u64,
    initial: [usize; 3],
    arrivals: [f64; 3],
    q: f64,
    tau: f64,
) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_owned(),
        horizon,
        rng_seed: 0,
        global_task_cap: GLOBAL_TASK_CAP,
        map: MapSpec {
            file: None,
            text: Some(WAREHOUSE_MAP.to_owned()),
            inflation_radius: 2,
            risk_weight: 1.0,
        },
        penalty: PenaltyParams {
            q,
            tau,
            tau_mode: TauMode::ElapsedTime,
            mode: PenaltyMode::Urgency,
        },
        dropoffs: DROPOFF_CELLS.to_vec(),
        stations: STATION_CELLS
            .iter()
            .zip(initial.iter().zip(arrivals))
            .map(|(&location, (&initial_tasks, arrival_prob))| StationSpec {
                location,
                arrival_prob,
                initial_tasks,
                capacity_m: 1,
            })
            .collect(),
        agents: HOME_CELLS
            .iter()
            .map(|&home| AgentSpec { home, speed: 2 })
            .collect(),
    }
}

/// S1..S5 keyed by name.
pub fn scenario_presets() -> BTreeMap<String, ScenarioConfig> {
    let none = [0.0; 3];
    [
        base("S1", 1000, [10, 10, 10], none, 10_000.0, 100.0),
        base("S2", 1200, [10, 10, 15], none, 10_000.0, 100.0),
        base("S3", 3000, [0; 3], DYNAMIC_ARRIVALS, 10_000.0, 0.0),
        base("S4", 3000, [0; 3], DYNAMIC_ARRIVALS, 10_000.0, 100.0),
        base("S5", 3000, [0; 3], DYNAMIC_ARRIVALS, 0.0, 100.0),
    ]
    .into_iter()
    .map(|c| (c.name.clone(), c))
    .collect()
}

pub fn preset(name: &str) -> Option<ScenarioConfig> {
    scenario_presets().remove(&name.to_ascii_uppercase())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_parameters() {
        let p = scenario_presets();
        assert_eq!(p.len(), 5);
        assert_eq!((p["S3"].penalty.q, p["S3"].penalty.tau), (10_000.0, 0.0));
        assert_eq!((p["S4"].penalty.q, p["S4"].penalty.tau), (10_000.0, 100.0));
        assert_eq!((p["S5"].penalty.q, p["S5"].penalty.tau), (0.0, 100.0));
        let initial: Vec<usize> = p["S2"].stations.iter().map(|s| s.initial_tasks).collect();
        assert_eq!(initial, vec![10, 10, 15]);
        let initial: Vec<usize> = p["S1"].stations.iter().map(|s| s.initial_tasks).collect();
        assert_eq!(initial, vec![10, 10, 10]);
        for cfg in p.values() {
            assert_eq!(cfg.stations.len(), 3);
            assert_eq!(cfg.dropoffs.len(), 3);
            assert_eq!(cfg.agents.len(), 2);
            assert!(cfg.stations.iter().all(|s| s.capacity_m == 1));
            cfg.validate().unwrap();
        }
        let arrivals: Vec<f64> = p["S4"].stations.iter().map(|s| s.arrival_prob).collect();
        assert_eq!(arrivals, vec![0.05, 0.15, 0.15]);
        assert_eq!(p["S5"].global_task_cap, 40);
        assert_eq!(preset("s2").unwrap().name, "S2");
        assert!(preset("S6").is_none());
    }
}
