//! Minimal reactive behavior trees: sequence, fallback, condition and action
//! nodes, plus the two trees every agent runs.
//!
//! Control nodes keep no memory between ticks. Each tick starts at the root,
//! so a condition that starts holding immediately skips its guarded action.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TickStatus {
    Success,
    Failure,
    Running,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    ItemPickedUp,
    ItemDelivered,
    AtHome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    FollowPathToPickup,
    FollowPathToDropoff,
    FollowPathHome,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BtError {
    #[error("no condition named {0:?}")]
    UnboundCondition(String),
    #[error("no action named {0:?}")]
    UnboundAction(String),
}

impl FromStr for Condition {
    type Err = BtError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ItemPickedUp" => Ok(Self::ItemPickedUp),
            "ItemDelivered" => Ok(Self::ItemDelivered),
            "AtHome" => Ok(Self::AtHome),
            _ => Err(BtError::UnboundCondition(s.to_owned())),
        }
    }
}

impl FromStr for Action {
    type Err = BtError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "FollowPathToPickup" => Ok(Self::FollowPathToPickup),
            "FollowPathToDropoff" => Ok(Self::FollowPathToDropoff),
            "FollowPathHome" => Ok(Self::FollowPathHome),
            _ => Err(BtError::UnboundAction(s.to_owned())),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// What the leaves of a tree act on.
pub trait AgentContext {
    fn check(&mut self, condition: Condition) -> bool;
    fn act(&mut self, action: Action) -> TickStatus;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BtNode {
    Sequence(Vec<BtNode>),
    Fallback(Vec<BtNode>),
    Condition(Condition),
    Action(Action),
}

impl BtNode {
    /// Binds a condition leaf by name.
    pub fn condition_named(name: &str) -> Result<Self, BtError> {
        name.parse().map(BtNode::Condition)
    }

    /// Binds an action leaf by name.
    pub fn action_named(name: &str) -> Result<Self, BtError> {
        name.parse().map(BtNode::Action)
    }

    pub fn tick<C: AgentContext + ?Sized>(&self, ctx: &mut C) -> TickStatus {
        match self {
            BtNode::Sequence(children) => {
                for child in children {
                    match child.tick(ctx) {
                        TickStatus::Success => continue,
                        other => return other,
                    }
                }
                TickStatus::Success
            }
            BtNode::Fallback(children) => {
                for child in children {
                    match child.tick(ctx) {
                        TickStatus::Failure => continue,
                        other => return other,
                    }
                }
                TickStatus::Failure
            }
            BtNode::Condition(c) => {
                if ctx.check(*c) {
                    TickStatus::Success
                } else {
                    TickStatus::Failure
                }
            }
            BtNode::Action(a) => ctx.act(*a),
        }
    }
}

/// `-> [ ?[ItemPickedUp, FollowPathToPickup], ?[ItemDelivered, FollowPathToDropoff] ]`
pub fn build_pickup_deliver_tree() -> BtNode {
    BtNode::Sequence(vec![
        BtNode::Fallback(vec![
            BtNode::Condition(Condition::ItemPickedUp),
            BtNode::Action(Action::FollowPathToPickup),
        ]),
        BtNode::Fallback(vec![
            BtNode::Condition(Condition::ItemDelivered),
            BtNode::Action(Action::FollowPathToDropoff),
        ]),
    ])
}

/// `?[AtHome, FollowPathHome]`: keep heading home until there.
pub fn build_go_home_tree() -> BtNode {
    BtNode::Fallback(vec![
        BtNode::Condition(Condition::AtHome),
        BtNode::Action(Action::FollowPathHome),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TreeKind {
    PickUpAndDeliver,
    GoHome,
}

/// Per-agent tree selection and the two task flags the conditions read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgentBtState {
    pub active_tree: TreeKind,
    pub item_picked_up: bool,
    pub item_delivered: bool,
}

impl AgentBtState {
    pub fn idle() -> Self {
        Self {
            active_tree: TreeKind::GoHome,
            item_picked_up: false,
            item_delivered: false,
        }
    }

    pub fn working(item_picked_up: bool) -> Self {
        Self {
            active_tree: TreeKind::PickUpAndDeliver,
            item_picked_up,
            item_delivered: false,
        }
    }
}
