//! Allocation stage: edge costs become profits and the constrained
//! assignment program is solved exactly.
//!
//! The program picks binary `x_{k,j}` maximizing `sum rho_{k,j} x_{k,j}` with
//! at most one task per agent, at most one agent per task, and at most `m_i`
//! assigned tasks drawn from station `i`'s queue.

mod flow;
mod instance;
mod oracle;
mod profit;
mod solver;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::{AgentId, StationId, TaskId};

pub use flow::{max_cardinality, solve_flow};
pub use instance::Instance;
pub use oracle::{brute_force_oracle, ORACLE_MAX_AGENTS, ORACLE_MAX_TASKS};
pub use profit::{to_profits, CostEdge, ProfitTable, PROFIT_SCALE};
pub use solver::{solve, solve_branch_and_bound};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AuctionError {
    #[error("duplicate edge {agent} -> {task}")]
    DuplicateEdge { agent: AgentId, task: TaskId },
    #[error("edge {agent} -> {task} has non-positive profit {profit}")]
    NonPositiveProfit {
        agent: AgentId,
        task: TaskId,
        profit: i64,
    },
    #[error("edge cost {cost} of {agent} -> {task} is negative or not finite")]
    BadCost {
        agent: AgentId,
        task: TaskId,
        cost: f64,
    },
    #[error("edge references unknown agent {0}")]
    UnknownAgent(AgentId),
    #[error("edge references unknown task {0}")]
    UnknownTask(TaskId),
    #[error("{task} is listed at both {first} and {second}")]
    ConflictingStation {
        task: TaskId,
        first: String,
        second: String,
    },
    #[error("no capacity given for station {0}")]
    MissingCap(StationId),
    #[error("instance with {agents} agents and {tasks} tasks exceeds the oracle limit")]
    OracleTooLarge { agents: usize, tasks: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A task as the solver sees it. `station` is `None` for a task that has left
/// its queue (a carried item), which no station cap counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct ProblemTask {
    pub id: TaskId,
    pub station: Option<StationId>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfitEdge {
    pub agent: AgentId,
    pub task: TaskId,
    /// Scaled by [`PROFIT_SCALE`].
    pub profit: i64,
    pub cost: f64,
}

/// A validated assignment instance. Agents, tasks and edges are kept sorted
/// by id, so the input order never matters.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentProblem {
    agents: Vec<AgentId>,
    tasks: Vec<ProblemTask>,
    edges: Vec<ProfitEdge>,
    queue_caps: BTreeMap<StationId, usize>,
}

impl AssignmentProblem {
    pub fn new(
        agents: impl IntoIterator<Item = AgentId>,
        tasks: impl IntoIterator<Item = ProblemTask>,
        edges: impl IntoIterator<Item = ProfitEdge>,
        queue_caps: BTreeMap<StationId, usize>,
    ) -> Result<Self, AuctionError> {
        let agents: Vec<AgentId> = agents
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut tasks: Vec<ProblemTask> = tasks.into_iter().collect();
        tasks.sort();
        tasks.dedup();
        for w in tasks.windows(2) {
            if w[0].id == w[1].id {
                return Err(AuctionError::ConflictingStation {
                    task: w[0].id,
                    first: format!("{:?}", w[0].station),
                    second: format!("{:?}", w[1].station),
                });
            }
        }
        for station in tasks.iter().filter_map(|t| t.station) {
            if !queue_caps.contains_key(&station) {
                return Err(AuctionError::MissingCap(station));
            }
        }
        let mut edges: Vec<ProfitEdge> = edges.into_iter().collect();
        edges.sort_by_key(|e| (e.agent, e.task));
        for w in edges.windows(2) {
            if (w[0].agent, w[0].task) == (w[1].agent, w[1].task) {
                return Err(AuctionError::DuplicateEdge {
                    agent: w[0].agent,
                    task: w[0].task,
                });
            }
        }
        for e in &edges {
            if e.profit <= 0 {
                return Err(AuctionError::NonPositiveProfit {
                    agent: e.agent,
                    task: e.task,
                    profit: e.profit,
                });
            }
            if agents.binary_search(&e.agent).is_err() {
                return Err(AuctionError::UnknownAgent(e.agent));
            }
            if tasks.binary_search_by_key(&e.task, |t| t.id).is_err() {
                return Err(AuctionError::UnknownTask(e.task));
            }
        }
        Ok(Self {
            agents,
            tasks,
            edges,
            queue_caps,
        })
    }

    /// Builds the instance implied by a profit table: every agent and task
    /// that appears on an edge.
    pub fn from_table(
        table: &ProfitTable,
        queue_caps: BTreeMap<StationId, usize>,
    ) -> Result<Self, AuctionError> {
        let agents: Vec<AgentId> = table.edges.iter().map(|e| e.agent).collect();
        let tasks = table.tasks.clone();
        Self::new(agents, tasks, table.edges.clone(), queue_caps)
    }

    pub fn agents(&self) -> &[AgentId] {
        &self.agents
    }

    pub fn tasks(&self) -> &[ProblemTask] {
        &self.tasks
    }

    pub fn edges(&self) -> &[ProfitEdge] {
        &self.edges
    }

    pub fn queue_caps(&self) -> &BTreeMap<StationId, usize> {
        &self.queue_caps
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edge(&self, agent: AgentId, task: TaskId) -> Option<&ProfitEdge> {
        self.edges
            .binary_search_by_key(&(agent, task), |e| (e.agent, e.task))
            .ok()
            .map(|i| &self.edges[i])
    }

    pub fn station_of(&self, task: TaskId) -> Option<StationId> {
        self.tasks
            .binary_search_by_key(&task, |t| t.id)
            .ok()
            .and_then(|i| self.tasks[i].station)
    }

    /// Dense index form used by the solvers.
    pub(crate) fn indexed(&self) -> Indexed {
        let station_index: BTreeMap<StationId, usize> = self
            .queue_caps
            .keys()
            .enumerate()
            .map(|(i, s)| (*s, i))
            .collect();
        let caps = self.queue_caps.values().copied().collect();
        let task_station = self
            .tasks
            .iter()
            .map(|t| t.station.map(|s| station_index[&s]))
            .collect();
        let mut adj = vec![Vec::new(); self.agents.len()];
        for e in &self.edges {
            let a = self.agents.binary_search(&e.agent).unwrap();
            let t = self.tasks.binary_search_by_key(&e.task, |t| t.id).unwrap();
            adj[a].push((t, e.profit));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Indexed {
            adj,
            task_station,
            caps,
        }
    }

    /// Checks the three constraint families against a set of pairs.
    pub fn check_feasible(&self, pairs: &[(AgentId, TaskId)]) -> Result<(), String> {
        let mut agents = BTreeSet::new();
        let mut tasks = BTreeSet::new();
        let mut load: BTreeMap<StationId, usize> = BTreeMap::new();
        for &(agent, task) in pairs {
            if self.edge(agent, task).is_none() {
                return Err(format!("{agent} -> {task} is not an edge"));
            }
            if !agents.insert(agent) {
                return Err(format!("{agent} assigned twice"));
            }
            if !tasks.insert(task) {
                return Err(format!("{task} assigned twice"));
            }
            if let Some(station) = self.station_of(task) {
                let n = load.entry(station).or_default();
                *n += 1;
                if *n > self.queue_caps[&station] {
                    return Err(format!(
                        "{station} exceeds its cap of {}",
                        self.queue_caps[&station]
                    ));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn assignment_from_indices(&self, choice: &[Option<usize>]) -> Assignment {
        let mut pairs = Vec::new();
        let mut objective = 0;
        let mut total_cost = 0.0;
        for (a, t) in choice.iter().enumerate() {
            if let Some(t) = t {
                let agent = self.agents[a];
                let task = self.tasks[*t].id;
                let e = self.edge(agent, task).expect("chosen pair is an edge");
                objective += e.profit;
                total_cost += e.cost;
                pairs.push((agent, task));
            }
        }
        Assignment {
            pairs,
            objective,
            total_cost,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Indexed {
    /// Per agent: `(task index, profit)` sorted by task index.
    pub adj: Vec<Vec<(usize, i64)>>,
    pub task_station: Vec<Option<usize>>,
    pub caps: Vec<usize>,
}

/// Solution `x_{k,j}` as the list of chosen pairs, sorted by agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub pairs: Vec<(AgentId, TaskId)>,
    /// Total profit, scaled by [`PROFIT_SCALE`].
    pub objective: i64,
    /// Sum of edge costs over the chosen pairs.
    pub total_cost: f64,
}

impl Assignment {
    pub fn empty() -> Self {
        Self {
            pairs: Vec::new(),
            objective: 0,
            total_cost: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn task_of(&self, agent: AgentId) -> Option<TaskId> {
        self.pairs
            .iter()
            .find(|(a, _)| *a == agent)
            .map(|(_, t)| *t)
    }

    pub fn agent_of(&self, task: TaskId) -> Option<AgentId> {
        self.pairs.iter().find(|(_, t)| *t == task).map(|(a, _)| *a)
    }

    pub fn objective_units(&self) -> f64 {
        self.objective as f64 / PROFIT_SCALE as f64
    }
}
