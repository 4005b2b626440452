use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bidding::PenaltyParams;
use crate::map::{Cell, GridMap};
use crate::planner::build_risk_layer;

use super::SimError;

/// Map source plus risk-layer parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    /// Path to a text grid, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    /// Inline text grid; takes precedence over `file`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default = "default_radius")]
    pub inflation_radius: usize,
    #[serde(default = "default_risk_weight")]
    pub risk_weight: f64,
}

fn default_radius() -> usize {
    2
}

fn default_risk_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationSpec {
    pub location: Cell,
    /// Chance per tick that a task arrives.
    #[serde(default)]
    pub arrival_prob: f64,
    #[serde(default)]
    pub initial_tasks: usize,
    /// `m_i`
    #[serde(default = "default_m")]
    pub capacity_m: usize,
}

fn default_m() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub home: Cell,
    #[serde(default = "default_speed")]
    pub speed: usize,
}

fn default_speed() -> usize {
    2
}

/// A complete scenario, loadable from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub horizon: u64,
    #[serde(default)]
    pub rng_seed: u64,
    pub global_task_cap: usize,
    pub map: MapSpec,
    #[serde(default)]
    pub penalty: PenaltyParams,
    pub dropoffs: Vec<Cell>,
    pub stations: Vec<StationSpec>,
    pub agents: Vec<AgentSpec>,
}

impl ScenarioConfig {
    /// Reads a TOML config and inlines its map file.
    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let mut config = Self::from_toml(&text)?;
        if config.map.text.is_none() {
            if let Some(file) = &config.map.file {
                let base = path.parent().unwrap_or(Path::new("."));
                let map_path = base.join(file);
                let map_text = std::fs::read_to_string(&map_path).map_err(|e| SimError::Io {
                    path: map_path.display().to_string(),
                    source: e,
                })?;
                config.map.text = Some(map_text);
            }
        }
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// The grid with its risk layer applied.
    pub fn build_map(&self) -> Result<GridMap, SimError> {
        let text =
            self.map.text.as_deref().ok_or_else(|| {
                SimError::Config("map has neither `text` nor a loaded `file`".into())
            })?;
        let map = GridMap::from_text(text)?;
        Ok(build_risk_layer(
            &map,
            self.map.inflation_radius,
            self.map.risk_weight,
        ))
    }

    /// Checks everything that can be checked before tick 0.
    pub fn validate(&self) -> Result<GridMap, SimError> {
        let bad = |msg: String| Err(SimError::Config(msg));
        if self.horizon == 0 {
            return bad("horizon must be positive".into());
        }
        if self.stations.is_empty() {
            return bad("at least one station is required".into());
        }
        if self.agents.is_empty() {
            return bad("at least one agent is required".into());
        }
        let p = &self.penalty;
        if !(p.q.is_finite() && p.q >= 0.0 && p.tau.is_finite() && p.tau >= 0.0) {
            return bad(format!(
                "penalty weights must be non-negative, got q = {}, tau = {}",
                p.q, p.tau
            ));
        }
        if !(self.map.risk_weight.is_finite() && self.map.risk_weight >= 0.0) {
            return bad("risk_weight must be non-negative".into());
        }
        let map = self.build_map()?;
        let check_cell = |what: &str, cell: Cell| {
            if map.is_free(cell) {
                Ok(())
            } else {
                Err(SimError::Config(format!(
                    "{what} at {cell} is occupied or off the map"
                )))
            }
        };
        let mut initial = 0;
        for (i, s) in self.stations.iter().enumerate() {
            check_cell(&format!("station {i}"), s.location)?;
            if !(0.0..=1.0).contains(&s.arrival_prob) {
                return bad(format!(
                    "station {i} arrival_prob {} is outside [0, 1]",
                    s.arrival_prob
                ));
            }
            if s.capacity_m == 0 {
                return bad(format!("station {i} capacity_m must be at least 1"));
            }
            initial += s.initial_tasks;
        }
        for (i, d) in self.dropoffs.iter().enumerate() {
            check_cell(&format!("drop-off {i}"), *d)?;
        }
        for (i, a) in self.agents.iter().enumerate() {
            check_cell(&format!("agent {i} home"), a.home)?;
            if a.speed == 0 {
                return bad(format!("agent {i} speed must be at least 1"));
            }
        }
        let spawns = initial > 0 || self.stations.iter().any(|s| s.arrival_prob > 0.0);
        if spawns && self.dropoffs.is_empty() {
            return bad("tasks can spawn but no drop-off cells are listed".into());
        }
        if initial > self.global_task_cap {
            return bad(format!(
                "{initial} initial tasks exceed the global cap of {}",
                self.global_task_cap
            ));
        }
        Ok(map)
    }

    /// The config as JSON without its RNG seed, so the echo depends only on
    /// what the scenario is, not on which random draw it ran with.
    pub fn echo(&self) -> serde_json::Value {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("rng_seed");
        }
        value
    }
}
