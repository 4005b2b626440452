//! Discrete-time reactive loop.
//!
//! Every tick runs three phases in order:
//! 1. arrivals: each station, in index order, may add a task while the number
//!    of undelivered tasks is below the global cap;
//! 2. allocation: if a task arrived or an agent became idle since the last
//!    round, agents bid, the allocator solves, and assignments (including
//!    reassignments of tasks not yet picked up) are applied;
//! 3. execution: each agent ticks its behavior tree once.

pub mod config;
pub mod events;
pub mod presets;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::auction::{solve, to_profits, Assignment, AssignmentProblem, AuctionError, CostEdge};
use crate::bidding::assemble_edges;
use crate::bt::{
    build_go_home_tree, build_pickup_deliver_tree, Action, AgentBtState, AgentContext, BtNode,
    Condition, TickStatus, TreeKind,
};
use crate::map::{Cell, MapError};
use crate::metrics::{FinalSummary, SimTrace};
use crate::model::{Agent, AgentId, ModelError, StationId, TaskState, WorldState};
use crate::planner::FieldCache;

pub use config::{AgentSpec, MapSpec, ScenarioConfig, StationSpec};
pub use events::{EventKind, SimEvent};
pub use presets::{preset, scenario_presets};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("invalid map: {0}")]
    Map(#[from] MapError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Auction(#[from] AuctionError),
    #[error("invariant violated at tick {tick}: {message}")]
    Invariant {
        tick: u64,
        message: String,
        events: Vec<SimEvent>,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Runs `config` for its full horizon.
pub fn run_scenario(config: &ScenarioConfig) -> Result<SimTrace, SimError> {
    Simulation::new(config)?.run()
}

pub struct Simulation {
    config: ScenarioConfig,
    world: WorldState,
    travel: FieldCache,
    pickup_tree: BtNode,
    home_tree: BtNode,
    station_rngs: Vec<ChaCha8Rng>,
    events: Vec<SimEvent>,
    live_queues: Vec<Vec<usize>>,
    idle_since_auction: bool,
}

impl Simulation {
    pub fn new(config: &ScenarioConfig) -> Result<Self, SimError> {
        let map = config.validate()?;
        let mut world = WorldState::new(map.clone());
        for s in &config.stations {
            world.add_station(s.location, s.arrival_prob, s.capacity_m)?;
        }
        for a in &config.agents {
            world.add_agent(a.home, a.speed)?;
        }
        let targets = config
            .stations
            .iter()
            .map(|s| s.location)
            .chain(config.dropoffs.iter().copied())
            .chain(config.agents.iter().map(|a| a.home));
        let travel = FieldCache::new(map, targets);
        let station_rngs = (0..config.stations.len())
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
                rng.set_stream(i as u64 + 1);
                rng
            })
            .collect();
        Ok(Self {
            config: config.clone(),
            world,
            travel,
            pickup_tree: build_pickup_deliver_tree(),
            home_tree: build_go_home_tree(),
            station_rngs,
            events: Vec::new(),
            live_queues: Vec::new(),
            idle_since_auction: false,
        })
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn events(&self) -> &[SimEvent] {
        &self.events
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn is_finished(&self) -> bool {
        self.world.clock >= self.config.horizon
    }

    pub fn run(mut self) -> Result<SimTrace, SimError> {
        while !self.is_finished() {
            self.step()?;
        }
        Ok(self.into_trace())
    }

    fn emit(&mut self, kind: EventKind) {
        self.events.push(SimEvent {
            time: self.world.clock,
            kind,
        });
    }

    fn spawn(&mut self, station: usize) -> Result<(), SimError> {
        let rng = &mut self.station_rngs[station];
        let dropoff = self.config.dropoffs[rng.random_range(0..self.config.dropoffs.len())];
        let task = self.world.spawn_task(StationId(station), dropoff)?;
        self.emit(EventKind::TaskSpawned {
            task,
            station: StationId(station),
            dropoff,
        });
        Ok(())
    }

    /// Advances one tick.
    pub fn step(&mut self) -> Result<(), SimError> {
        let mut spawned = false;
        if self.world.clock == 0 {
            for agent in 0..self.world.agents.len() {
                self.emit(EventKind::AgentIdle {
                    agent: AgentId(agent),
                });
            }
            self.idle_since_auction = true;
            for station in 0..self.config.stations.len() {
                for _ in 0..self.config.stations[station].initial_tasks {
                    self.spawn(station)?;
                    spawned = true;
                }
            }
        }
        for station in 0..self.config.stations.len() {
            let p = self.config.stations[station].arrival_prob;
            let draw: f64 = self.station_rngs[station].random();
            if draw < p && self.world.undelivered() < self.config.global_task_cap {
                self.spawn(station)?;
                spawned = true;
            }
        }

        if spawned || self.idle_since_auction {
            if self.world.open_tasks().next().is_some() {
                self.auction()?;
            }
            self.idle_since_auction = false;
        }

        for i in 0..self.world.agents.len() {
            self.tick_agent(i)?;
        }

        self.live_queues.push(self.world.queue_lengths());
        if let Err(message) = self.check() {
            return Err(SimError::Invariant {
                tick: self.world.clock,
                message,
                events: self.events.clone(),
            });
        }
        self.world.clock += 1;
        Ok(())
    }

    fn check(&self) -> Result<(), String> {
        self.world.check_invariants()?;
        let undelivered = self.world.undelivered();
        if undelivered > self.config.global_task_cap {
            return Err(format!(
                "{undelivered} undelivered tasks exceed the cap of {}",
                self.config.global_task_cap
            ));
        }
        Ok(())
    }

    /// The instance the allocator would solve right now.
    pub fn auction_problem(&self) -> Result<AssignmentProblem, SimError> {
        let edges = assemble_edges(&self.world, &self.config.penalty, &self.travel);
        let cost_edges: Vec<CostEdge> = edges.iter().map(CostEdge::from).collect();
        let table = to_profits(&cost_edges)?;
        let caps: BTreeMap<StationId, usize> = self
            .world
            .stations
            .iter()
            .map(|s| (s.id, s.capacity_m))
            .collect();
        Ok(AssignmentProblem::from_table(&table, caps)?)
    }

    fn auction(&mut self) -> Result<(), SimError> {
        let problem = self.auction_problem()?;
        let assignment = solve(&problem);
        let open_tasks = self.world.open_tasks().count();
        self.emit(EventKind::AuctionRun {
            open_tasks,
            edges: problem.edges().len(),
            assigned: assignment.len(),
        });
        let events = apply_assignment(&mut self.world, &assignment)?;
        for e in &events {
            if let EventKind::TaskAssigned { agent, .. }
            | EventKind::TaskReassigned {
                to: Some(agent), ..
            } = e.kind
            {
                self.world.agents[agent.0].current_path = None;
            }
        }
        self.events.extend(events);
        Ok(())
    }

    fn tick_agent(&mut self, index: usize) -> Result<(), SimError> {
        let agent = &self.world.agents[index];
        let job = agent.assigned_task.map(|id| {
            let t = &self.world.tasks[&id];
            (id, t.pickup, t.dropoff)
        });
        let bt = match job {
            Some(_) => AgentBtState::working(agent.carrying),
            None => AgentBtState::idle(),
        };
        let tree = match bt.active_tree {
            TreeKind::PickUpAndDeliver => &self.pickup_tree,
            TreeKind::GoHome => &self.home_tree,
        };
        let mut driver = Driver {
            agent: &mut self.world.agents[index],
            job: job.map(|(_, p, d)| (p, d)),
            bt,
            travel: &self.travel,
        };
        tree.tick(&mut driver);
        let after = driver.bt;
        let agent = AgentId(index);
        if let Some((task, _, _)) = job {
            if after.item_picked_up && !bt.item_picked_up {
                self.world.transition_task(task, TaskState::PickedUp)?;
                self.emit(EventKind::TaskPickedUp { task, agent });
            }
            if after.item_delivered {
                self.world.transition_task(task, TaskState::Delivered)?;
                self.emit(EventKind::TaskDelivered { task, agent });
                self.emit(EventKind::AgentIdle { agent });
                self.world.agents[index].current_path = None;
                self.idle_since_auction = true;
            }
        }
        Ok(())
    }

    pub fn into_trace(self) -> SimTrace {
        let w = &self.world;
        SimTrace {
            config: self.config.clone(),
            horizon: self.config.horizon,
            stations: w.stations.len(),
            summary: FinalSummary {
                spawned: w.spawned(),
                delivered: w.count_state(TaskState::Delivered),
                picked_up: w.count_state(TaskState::PickedUp),
                open: w.open_tasks().count(),
                final_queues: w.queue_lengths(),
            },
            events: self.events,
            live_queues: self.live_queues,
        }
    }
}

/// Applies an allocation to the world and reports what changed.
///
/// Tasks whose agent changes are reassigned (or returned to waiting), agents
/// left without a task go idle, and pairs already in place produce nothing.
/// A picked-up task can never change hands.
pub fn apply_assignment(
    world: &mut WorldState,
    assignment: &Assignment,
) -> Result<Vec<SimEvent>, SimError> {
    let time = world.clock;
    let violation = |message: String| SimError::Invariant {
        tick: time,
        message,
        events: Vec::new(),
    };
    let mut target: BTreeMap<AgentId, _> = BTreeMap::new();
    for &(agent, task) in &assignment.pairs {
        let a = world.agent(agent)?;
        let t = world.task(task)?;
        if t.state == TaskState::PickedUp && t.assignee != Some(agent) {
            return Err(violation(format!(
                "{task} is carried by {:?} but was allocated to {agent}",
                t.assignee
            )));
        }
        if a.carrying && a.assigned_task != Some(task) {
            return Err(violation(format!(
                "{agent} carries {:?} but was allocated {task}",
                a.assigned_task
            )));
        }
        if t.state == TaskState::Delivered {
            return Err(violation(format!("{task} is already delivered")));
        }
        if target.insert(agent, task).is_some() {
            return Err(violation(format!("{agent} allocated twice")));
        }
    }

    let mut events = Vec::new();
    let mut released = BTreeMap::new();
    let agents: Vec<(AgentId, Option<_>, bool)> = world
        .agents
        .iter()
        .map(|a| (a.id, a.assigned_task, a.carrying))
        .collect();
    for &(agent, held, carrying) in &agents {
        let Some(held) = held else { continue };
        if carrying || target.get(&agent) == Some(&held) {
            continue;
        }
        world.transition_task(held, TaskState::Queued)?;
        released.insert(held, agent);
    }
    for (&agent, &task) in &target {
        if world.agent(agent)?.assigned_task == Some(task) {
            continue;
        }
        world.assign_task(task, agent)?;
        let kind = match released.remove(&task) {
            Some(from) => EventKind::TaskReassigned {
                task,
                from,
                to: Some(agent),
            },
            None => EventKind::TaskAssigned { task, agent },
        };
        events.push(SimEvent { time, kind });
    }
    for (task, from) in released {
        events.push(SimEvent {
            time,
            kind: EventKind::TaskReassigned {
                task,
                from,
                to: None,
            },
        });
    }
    for &(agent, held, _) in &agents {
        if held.is_some() && world.agent(agent)?.assigned_task.is_none() {
            events.push(SimEvent {
                time,
                kind: EventKind::AgentIdle { agent },
            });
        }
    }
    Ok(events)
}

/// Binds an agent's tree leaves to its body and the shared map.
struct Driver<'a> {
    agent: &'a mut Agent,
    job: Option<(Cell, Cell)>,
    bt: AgentBtState,
    travel: &'a FieldCache,
}

impl Driver<'_> {
    /// Moves up to `speed` cells toward `target`; `None` if unreachable,
    /// otherwise whether the agent now stands on it.
    fn advance(&mut self, target: Cell) -> Option<bool> {
        let path = self.travel.path(self.agent.position, target)?;
        let steps = self.agent.speed.min(path.len() - 1);
        self.agent.position = path[steps];
        self.agent.current_path = Some(path[steps..].to_vec());
        Some(self.agent.position == target)
    }
}

impl AgentContext for Driver<'_> {
    fn check(&mut self, condition: Condition) -> bool {
        match condition {
            Condition::ItemPickedUp => self.bt.item_picked_up,
            Condition::ItemDelivered => self.bt.item_delivered,
            Condition::AtHome => self.agent.position == self.agent.home,
        }
    }

    /// Arriving is the whole tick's work: the handover happens and the
    /// action reports Running, so the tree moves on next tick.
    fn act(&mut self, action: Action) -> TickStatus {
        let target = match (action, self.job) {
            (Action::FollowPathToPickup, Some((pickup, _))) => pickup,
            (Action::FollowPathToDropoff, Some((_, dropoff))) => dropoff,
            (Action::FollowPathHome, _) => self.agent.home,
            (_, None) => return TickStatus::Failure,
        };
        match self.advance(target) {
            None => TickStatus::Failure,
            Some(arrived) => {
                if arrived {
                    match action {
                        Action::FollowPathToPickup => self.bt.item_picked_up = true,
                        Action::FollowPathToDropoff => self.bt.item_delivered = true,
                        Action::FollowPathHome => {}
                    }
                }
                TickStatus::Running
            }
        }
    }
}
