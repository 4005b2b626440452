use std::collections::BTreeSet;

use crate::bidding::EdgeCost;
use crate::model::{AgentId, StationId, TaskId};

use super::{AuctionError, ProblemTask, ProfitEdge};

/// Fixed-point resolution of costs and profits: one cost unit is
/// `PROFIT_SCALE` profit units.
pub const PROFIT_SCALE: i64 = 1_000_000;

/// An edge cost before conversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostEdge {
    pub agent: AgentId,
    pub task: TaskId,
    /// `None` when the task no longer sits in a queue.
    pub station: Option<StationId>,
    pub cost: f64,
}

impl From<&EdgeCost> for CostEdge {
    fn from(e: &EdgeCost) -> Self {
        Self {
            agent: e.agent,
            task: e.task,
            station: (!e.locked).then_some(e.station),
            cost: e.cost,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfitTable {
    pub edges: Vec<ProfitEdge>,
    pub tasks: Vec<ProblemTask>,
    /// The base `B` in `rho = B - C`, scaled.
    pub base: i64,
}

/// Converts costs to profits with `rho = B - C`.
///
/// With `C*` the largest cost and `K` the most pairs any matching can hold
/// (`min(#agents, #tasks)` on the edge list), `B = 1 + K * C*` in cost units.
/// Every profit is then at least one unit, lower cost always means higher
/// profit, and `K * min rho > (K - 1) * max rho`, so a matching with more
/// pairs always has the higher total.
pub fn to_profits(edges: &[CostEdge]) -> Result<ProfitTable, AuctionError> {
    let mut scaled = Vec::with_capacity(edges.len());
    for e in edges {
        if !e.cost.is_finite() || e.cost < 0.0 {
            return Err(AuctionError::BadCost {
                agent: e.agent,
                task: e.task,
                cost: e.cost,
            });
        }
        scaled.push((e.cost * PROFIT_SCALE as f64).round() as i64);
    }
    let agents: BTreeSet<AgentId> = edges.iter().map(|e| e.agent).collect();
    let mut tasks: Vec<ProblemTask> = edges
        .iter()
        .map(|e| ProblemTask {
            id: e.task,
            station: e.station,
        })
        .collect();
    tasks.sort();
    tasks.dedup();
    let distinct_tasks = tasks.iter().map(|t| t.id).collect::<BTreeSet<_>>().len();
    let k = agents.len().min(distinct_tasks) as i64;
    let max_cost = scaled.iter().copied().max().unwrap_or(0);
    let base = PROFIT_SCALE + k * max_cost;
    let edges = edges
        .iter()
        .zip(scaled)
        .map(|(e, c)| ProfitEdge {
            agent: e.agent,
            task: e.task,
            profit: base - c,
            cost: e.cost,
        })
        .collect();
    Ok(ProfitTable { edges, tasks, base })
}
