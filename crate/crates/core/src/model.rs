//! World entities: stations with their task queues, tasks, agents and the
//! shared map, plus the task lifecycle.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::map::{Cell, GridMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StationId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub usize);

macro_rules! display_id {
    ($($ty:ty => $prefix:literal),*) => {$(
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    )*};
}

display_id!(StationId => "S", TaskId => "T", AgentId => "R");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskState {
    Queued,
    Assigned,
    PickedUp,
    Delivered,
}

impl TaskState {
    /// Legal lifecycle edges. `Assigned -> Queued` is a reassignment before
    /// pickup; everything after pickup is one-way.
    pub fn can_become(self, next: TaskState) -> bool {
        use TaskState::*;
        matches!(
            (self, next),
            (Queued, Assigned) | (Assigned, PickedUp) | (PickedUp, Delivered) | (Assigned, Queued)
        )
    }

    /// Queued or Assigned: still waiting in its station's queue.
    pub fn is_open(self) -> bool {
        matches!(self, TaskState::Queued | TaskState::Assigned)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("unknown station {0}")]
    UnknownStation(StationId),
    #[error("unknown task {0}")]
    UnknownTask(TaskId),
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
    #[error("cell {0} is occupied or outside the map")]
    OccupiedCell(Cell),
    #[error("illegal transition of {task}: {from:?} -> {to:?}")]
    IllegalTransition {
        task: TaskId,
        from: TaskState,
        to: TaskState,
    },
    #[error("{0} cannot become Assigned without an assignee")]
    MissingAssignee(TaskId),
    #[error("{agent} already holds {held}")]
    AgentBusy { agent: AgentId, held: TaskId },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Station {
    pub id: StationId,
    pub location: Cell,
    /// Open tasks in arrival order.
    pub queue: Vec<TaskId>,
    pub arrival_prob: f64,
    pub capacity_m: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub id: TaskId,
    pub station: StationId,
    pub pickup: Cell,
    pub dropoff: Cell,
    pub arrival_time: u64,
    pub state: TaskState,
    pub completion_time: Option<u64>,
    pub assignee: Option<AgentId>,
}

impl Task {
    pub fn wait(&self, clock: u64) -> u64 {
        self.completion_time
            .unwrap_or(clock)
            .saturating_sub(self.arrival_time)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub id: AgentId,
    pub position: Cell,
    pub home: Cell,
    pub assigned_task: Option<TaskId>,
    pub carrying: bool,
    pub current_path: Option<Vec<Cell>>,
    /// Cells per tick.
    pub speed: usize,
}

impl Agent {
    pub fn new(id: AgentId, home: Cell, speed: usize) -> Self {
        Self {
            id,
            position: home,
            home,
            assigned_task: None,
            carrying: false,
            current_path: None,
            speed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WorldState {
    pub map: GridMap,
    pub stations: Vec<Station>,
    pub tasks: BTreeMap<TaskId, Task>,
    pub agents: Vec<Agent>,
    pub clock: u64,
    next_task: u64,
}

impl WorldState {
    pub fn new(map: GridMap) -> Self {
        Self {
            map,
            stations: Vec::new(),
            tasks: BTreeMap::new(),
            agents: Vec::new(),
            clock: 0,
            next_task: 0,
        }
    }

    pub fn add_station(
        &mut self,
        location: Cell,
        arrival_prob: f64,
        capacity_m: usize,
    ) -> Result<StationId, ModelError> {
        self.require_free(location)?;
        let id = StationId(self.stations.len());
        self.stations.push(Station {
            id,
            location,
            queue: Vec::new(),
            arrival_prob,
            capacity_m: capacity_m.max(1),
        });
        Ok(id)
    }

    pub fn add_agent(&mut self, home: Cell, speed: usize) -> Result<AgentId, ModelError> {
        self.require_free(home)?;
        let id = AgentId(self.agents.len());
        self.agents.push(Agent::new(id, home, speed));
        Ok(id)
    }

    fn require_free(&self, cell: Cell) -> Result<(), ModelError> {
        if self.map.is_free(cell) {
            Ok(())
        } else {
            Err(ModelError::OccupiedCell(cell))
        }
    }

    pub fn station(&self, id: StationId) -> Result<&Station, ModelError> {
        self.stations
            .get(id.0)
            .ok_or(ModelError::UnknownStation(id))
    }

    pub fn task(&self, id: TaskId) -> Result<&Task, ModelError> {
        self.tasks.get(&id).ok_or(ModelError::UnknownTask(id))
    }

    pub fn agent(&self, id: AgentId) -> Result<&Agent, ModelError> {
        self.agents.get(id.0).ok_or(ModelError::UnknownAgent(id))
    }

    pub fn agent_mut(&mut self, id: AgentId) -> Result<&mut Agent, ModelError> {
        self.agents
            .get_mut(id.0)
            .ok_or(ModelError::UnknownAgent(id))
    }

    /// Adds a Queued task to the back of `station`'s queue.
    pub fn spawn_task(&mut self, station: StationId, dropoff: Cell) -> Result<TaskId, ModelError> {
        let pickup = self.station(station)?.location;
        self.require_free(dropoff)?;
        let id = TaskId(self.next_task);
        self.next_task += 1;
        self.tasks.insert(
            id,
            Task {
                id,
                station,
                pickup,
                dropoff,
                arrival_time: self.clock,
                state: TaskState::Queued,
                completion_time: None,
                assignee: None,
            },
        );
        self.stations[station.0].queue.push(id);
        Ok(id)
    }

    /// Number of tasks ever spawned.
    pub fn spawned(&self) -> u64 {
        self.next_task
    }

    /// Moves `task` along a lifecycle edge and keeps queues and agents in
    /// step. Becoming Assigned needs an assignee, see [`Self::assign_task`].
    pub fn transition_task(&mut self, id: TaskId, to: TaskState) -> Result<(), ModelError> {
        let clock = self.clock;
        let task = self.tasks.get_mut(&id).ok_or(ModelError::UnknownTask(id))?;
        let from = task.state;
        if !from.can_become(to) {
            return Err(ModelError::IllegalTransition { task: id, from, to });
        }
        if to == TaskState::Assigned && task.assignee.is_none() {
            return Err(ModelError::MissingAssignee(id));
        }
        task.state = to;
        let station = task.station;
        let assignee = task.assignee;
        match to {
            TaskState::Queued => {
                task.assignee = None;
                if let Some(agent) = assignee {
                    self.agents[agent.0].assigned_task = None;
                    self.agents[agent.0].carrying = false;
                }
            }
            TaskState::Assigned => {}
            TaskState::PickedUp => {
                self.stations[station.0].queue.retain(|t| *t != id);
                if let Some(agent) = assignee {
                    self.agents[agent.0].carrying = true;
                }
            }
            TaskState::Delivered => {
                task.completion_time = Some(clock);
                task.assignee = None;
                if let Some(agent) = assignee {
                    let agent = &mut self.agents[agent.0];
                    agent.assigned_task = None;
                    agent.carrying = false;
                }
            }
        }
        Ok(())
    }

    /// Gives a Queued task to an agent that holds nothing.
    pub fn assign_task(&mut self, id: TaskId, agent: AgentId) -> Result<(), ModelError> {
        let held = self.agent(agent)?.assigned_task;
        if let Some(held) = held {
            return Err(ModelError::AgentBusy { agent, held });
        }
        let task = self.tasks.get_mut(&id).ok_or(ModelError::UnknownTask(id))?;
        if !task.state.can_become(TaskState::Assigned) {
            return Err(ModelError::IllegalTransition {
                task: id,
                from: task.state,
                to: TaskState::Assigned,
            });
        }
        task.assignee = Some(agent);
        self.transition_task(id, TaskState::Assigned)?;
        self.agents[agent.0].assigned_task = Some(id);
        Ok(())
    }

    /// |Q_i|: tasks at the station that have not been picked up yet.
    pub fn queue_length(&self, station: StationId) -> Result<usize, ModelError> {
        Ok(self.station(station)?.queue.len())
    }

    pub fn queue_lengths(&self) -> Vec<usize> {
        self.stations.iter().map(|s| s.queue.len()).collect()
    }

    /// Tasks in a queue (Queued or Assigned), in id order.
    pub fn open_tasks(&self) -> impl Iterator<Item = &Task> {
        self.tasks.values().filter(|t| t.state.is_open())
    }

    /// Tasks not yet delivered.
    pub fn undelivered(&self) -> usize {
        self.tasks
            .values()
            .filter(|t| t.state != TaskState::Delivered)
            .count()
    }

    pub fn count_state(&self, state: TaskState) -> usize {
        self.tasks.values().filter(|t| t.state == state).count()
    }

    /// Checks every structural invariant, describing the first one broken.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut in_queue = 0usize;
        for station in &self.stations {
            for id in &station.queue {
                let task = self
                    .tasks
                    .get(id)
                    .ok_or_else(|| format!("{} queue references missing {id}", station.id))?;
                if task.station != station.id || !task.state.is_open() {
                    return Err(format!(
                        "{id} in {} queue in state {:?}",
                        station.id, task.state
                    ));
                }
                in_queue += 1;
            }
        }
        let picked = self.count_state(TaskState::PickedUp);
        let delivered = self.count_state(TaskState::Delivered);
        if in_queue + picked + delivered != self.next_task as usize
            || self.tasks.len() != self.next_task as usize
        {
            return Err(format!(
                "conservation broken: {in_queue} queued + {picked} picked up + {delivered} delivered != {} spawned",
                self.next_task
            ));
        }
        for task in self.tasks.values() {
            match (task.state, task.assignee) {
                (TaskState::Assigned | TaskState::PickedUp, Some(agent)) => {
                    let held = self.agents.get(agent.0).and_then(|a| a.assigned_task);
                    if held != Some(task.id) {
                        return Err(format!(
                            "{} names {agent} but the agent holds {held:?}",
                            task.id
                        ));
                    }
                }
                (TaskState::Assigned | TaskState::PickedUp, None) => {
                    return Err(format!("{} is {:?} with no assignee", task.id, task.state));
                }
                (_, Some(agent)) => {
                    return Err(format!("{} is {:?} but names {agent}", task.id, task.state));
                }
                (_, None) => {}
            }
            if (task.state == TaskState::Delivered) != task.completion_time.is_some() {
                return Err(format!("{} completion time does not match state", task.id));
            }
            if task.completion_time.is_some_and(|c| c < task.arrival_time) {
                return Err(format!("{} completed before it arrived", task.id));
            }
        }
        for agent in &self.agents {
            if let Some(id) = agent.assigned_task {
                let task = self
                    .tasks
                    .get(&id)
                    .ok_or_else(|| format!("{} holds missing {id}", agent.id))?;
                if task.assignee != Some(agent.id) {
                    return Err(format!(
                        "{} holds {id} assigned to {:?}",
                        agent.id, task.assignee
                    ));
                }
                if agent.carrying != (task.state == TaskState::PickedUp) {
                    return Err(format!("{} carrying flag disagrees with {id}", agent.id));
                }
            } else if agent.carrying {
                return Err(format!("{} carries nothing it was assigned", agent.id));
            }
        }
        Ok(())
    }
}
