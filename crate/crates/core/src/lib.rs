//! Reactive auction-based task allocation for agents serving several
//! pick-up-and-deliver task queues.
//!
//! Tasks arrive at stations, agents bid their path costs, and a central
//! allocator solves a small integer program that trades travel cost against
//! queue length and task waiting time. Agents execute their assignment with
//! behavior trees on a shared grid map.

pub mod auction;
pub mod bidding;
pub mod bt;
pub mod cli;
pub mod map;
pub mod metrics;
pub mod model;
pub mod planner;
pub mod sim;
