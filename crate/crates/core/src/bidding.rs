//! Bids and edge costs for one auction round.
//!
//! Each agent bids its travel cost for every open task. The allocator then
//! adds two station-side terms: a queue-length penalty `q * |Q_i|` and a
//! waiting-time penalty `tau * wait_j`. These penalties measure how urgent a
//! task is. Under [`PenaltyMode::Urgency`] (the default) they lower the cost of
//! serving that task, so long queues and old tasks win the auction.
//! [`PenaltyMode::Additive`] adds them to the cost instead.

use serde::{Deserialize, Serialize};

use crate::model::{Agent, AgentId, Station, StationId, Task, TaskId, WorldState};
use crate::planner::TravelCost;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauMode {
    /// `tau * (clock - arrival_time)`
    #[default]
    ElapsedTime,
    /// `tau * |T|`, the number of open tasks.
    TotalCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyMode {
    /// `C = c + (P - q_i - tau_j)`, with `P` the largest `q_i + tau_j` among
    /// the open tasks of the round so that `C >= 0`.
    #[default]
    Urgency,
    /// `C = c + q_i + tau_j`
    Additive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyParams {
    pub q: f64,
    pub tau: f64,
    #[serde(default)]
    pub tau_mode: TauMode,
    #[serde(default)]
    pub mode: PenaltyMode,
}

impl Default for PenaltyParams {
    fn default() -> Self {
        Self {
            q: 10_000.0,
            tau: 100.0,
            tau_mode: TauMode::ElapsedTime,
            mode: PenaltyMode::Urgency,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bid {
    pub agent: AgentId,
    pub task: TaskId,
    pub c: f64,
    /// 0 when the agent already carries this task's item, else 1.
    pub k_bt: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeCost {
    pub agent: AgentId,
    pub task: TaskId,
    pub station: StationId,
    pub path_cost: f64,
    pub queue_penalty: f64,
    pub wait_penalty: f64,
    /// Total edge cost `C_{k,j}`.
    pub cost: f64,
    /// The carrier's edge to its own picked-up task.
    pub locked: bool,
}

/// Travel cost of `agent` doing `task`: to the pickup, then to the drop-off.
/// `None` when either leg is unreachable, in which case no edge is emitted.
pub fn compute_bid<T: TravelCost + ?Sized>(agent: &Agent, task: &Task, travel: &T) -> Option<Bid> {
    if agent.carrying && agent.assigned_task == Some(task.id) {
        return Some(Bid {
            agent: agent.id,
            task: task.id,
            c: 0.0,
            k_bt: 0,
        });
    }
    let to_pickup = travel.travel_cost(agent.position, task.pickup)?;
    let to_dropoff = travel.travel_cost(task.pickup, task.dropoff)?;
    Some(Bid {
        agent: agent.id,
        task: task.id,
        c: to_pickup + to_dropoff,
        k_bt: 1,
    })
}

pub fn queue_penalty(station: &Station, params: &PenaltyParams) -> f64 {
    params.q * station.queue.len() as f64
}

/// `open_tasks` is `|T|`, only read under [`TauMode::TotalCount`].
pub fn waiting_penalty(task: &Task, clock: u64, open_tasks: usize, params: &PenaltyParams) -> f64 {
    match params.tau_mode {
        TauMode::ElapsedTime => params.tau * clock.saturating_sub(task.arrival_time) as f64,
        TauMode::TotalCount => params.tau * open_tasks as f64,
    }
}

/// One edge per (agent, open task) bid, sorted by `(agent, task)`.
///
/// Agents carrying an item emit only the locked zero-cost edge to the task
/// they carry.
pub fn assemble_edges<T: TravelCost + ?Sized>(
    world: &WorldState,
    params: &PenaltyParams,
    travel: &T,
) -> Vec<EdgeCost> {
    let open: Vec<&Task> = world.open_tasks().collect();
    let penalties: Vec<(f64, f64)> = open
        .iter()
        .map(|t| {
            (
                queue_penalty(&world.stations[t.station.0], params),
                waiting_penalty(t, world.clock, open.len(), params),
            )
        })
        .collect();
    let ceiling = penalties.iter().map(|(q, w)| q + w).fold(0.0f64, f64::max);

    let mut edges = Vec::new();
    for agent in &world.agents {
        if agent.carrying {
            if let Some(task) = agent.assigned_task.and_then(|id| world.tasks.get(&id)) {
                edges.push(EdgeCost {
                    agent: agent.id,
                    task: task.id,
                    station: task.station,
                    path_cost: 0.0,
                    queue_penalty: 0.0,
                    wait_penalty: 0.0,
                    cost: 0.0,
                    locked: true,
                });
            }
            continue;
        }
        for (task, &(qp, wp)) in open.iter().zip(&penalties) {
            let Some(bid) = compute_bid(agent, task, travel) else {
                continue;
            };
            let cost = match params.mode {
                PenaltyMode::Urgency => bid.c + (ceiling - qp - wp),
                PenaltyMode::Additive => bid.c + qp + wp,
            };
            edges.push(EdgeCost {
                agent: agent.id,
                task: task.id,
                station: task.station,
                path_cost: bid.c,
                queue_penalty: qp,
                wait_penalty: wp,
                cost,
                locked: false,
            });
        }
    }
    edges.sort_by_key(|e| (e.agent, e.task));
    edges
}
