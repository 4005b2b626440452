//! Line-oriented text form of an assignment instance.
//!
//! ```text
//! # comment
//! cap <station> <m>
//! <agent> <task> <station|-> <cost>
//! ```
//!
//! Fields are separated by whitespace or commas. `-` marks a task outside
//! every queue. A station without a `cap` line gets `m = 1`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::model::{AgentId, StationId, TaskId};

use super::{to_profits, AssignmentProblem, AuctionError, CostEdge};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Instance {
    pub edges: Vec<CostEdge>,
    pub caps: BTreeMap<StationId, usize>,
}

impl Instance {
    pub fn parse(text: &str) -> Result<Self, AuctionError> {
        let mut out = Instance::default();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let fields: Vec<&str> = content
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|f| !f.is_empty())
                .collect();
            let err = |message: String| AuctionError::Parse { line, message };
            let int = |s: &str| {
                s.parse::<u64>()
                    .map_err(|_| err(format!("expected a non-negative integer, found {s:?}")))
            };
            match fields.as_slice() {
                ["cap", station, m] => {
                    out.caps
                        .insert(StationId(int(station)? as usize), int(m)? as usize);
                }
                [agent, task, station, cost] => {
                    let station = match *station {
                        "-" => None,
                        s => Some(StationId(int(s)? as usize)),
                    };
                    let cost: f64 = cost
                        .parse()
                        .map_err(|_| err(format!("expected a cost, found {cost:?}")))?;
                    out.edges.push(CostEdge {
                        agent: AgentId(int(agent)? as usize),
                        task: TaskId(int(task)?),
                        station,
                        cost,
                    });
                }
                _ => return Err(err(format!("cannot read {content:?}"))),
            }
        }
        Ok(out)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (s, m) in &self.caps {
            writeln!(out, "cap {} {m}", s.0).unwrap();
        }
        for e in &self.edges {
            let station = e.station.map_or("-".to_owned(), |s| s.0.to_string());
            writeln!(out, "{} {} {station} {}", e.agent.0, e.task.0, e.cost).unwrap();
        }
        out
    }

    pub fn to_problem(&self) -> Result<AssignmentProblem, AuctionError> {
        let table = to_profits(&self.edges)?;
        let mut caps = self.caps.clone();
        for station in table.tasks.iter().filter_map(|t| t.station) {
            caps.entry(station).or_insert(1);
        }
        AssignmentProblem::from_table(&table, caps)
    }
}
