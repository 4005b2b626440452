use serde::{Deserialize, Serialize};

use crate::map::Cell;
use crate::model::{AgentId, StationId, TaskId};

/// One line of the audit log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub time: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum EventKind {
    TaskSpawned {
        task: TaskId,
        station: StationId,
        dropoff: Cell,
    },
    AuctionRun {
        open_tasks: usize,
        edges: usize,
        assigned: usize,
    },
    TaskAssigned {
        task: TaskId,
        agent: AgentId,
    },
    /// `to` is `None` when the task goes back to waiting unassigned.
    TaskReassigned {
        task: TaskId,
        from: AgentId,
        to: Option<AgentId>,
    },
    TaskPickedUp {
        task: TaskId,
        agent: AgentId,
    },
    TaskDelivered {
        task: TaskId,
        agent: AgentId,
    },
    AgentIdle {
        agent: AgentId,
    },
}

impl EventKind {
    pub fn task(&self) -> Option<TaskId> {
        match self {
            EventKind::TaskSpawned { task, .. }
            | EventKind::TaskAssigned { task, .. }
            | EventKind::TaskReassigned { task, .. }
            | EventKind::TaskPickedUp { task, .. }
            | EventKind::TaskDelivered { task, .. } => Some(*task),
            EventKind::AuctionRun { .. } | EventKind::AgentIdle { .. } => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EventKind::TaskSpawned { .. } => "TaskSpawned",
            EventKind::AuctionRun { .. } => "AuctionRun",
            EventKind::TaskAssigned { .. } => "TaskAssigned",
            EventKind::TaskReassigned { .. } => "TaskReassigned",
            EventKind::TaskPickedUp { .. } => "TaskPickedUp",
            EventKind::TaskDelivered { .. } => "TaskDelivered",
            EventKind::AgentIdle { .. } => "AgentIdle",
        }
    }
}
