use std::collections::BTreeMap;

use proptest::prelude::*;
use qalloc::auction::{solve, Assignment};
use qalloc::bidding::PenaltyMode;
use qalloc::map::{Cell, GridMap};
use qalloc::model::{AgentId, StationId, TaskId, TaskState, WorldState};
use qalloc::sim::{
    apply_assignment, preset, run_scenario, scenario_presets, EventKind, SimError, Simulation,
};

fn small(name: &str, seed: u64, horizon: u64) -> qalloc::sim::ScenarioConfig {
    let mut c = preset(name).unwrap();
    c.rng_seed = seed;
    c.horizon = horizon;
    c
}

#[test]
fn presets_are_valid() {
    let all = scenario_presets();
    assert_eq!(
        all.keys().cloned().collect::<Vec<_>>(),
        ["S1", "S2", "S3", "S4", "S5"]
    );
    for (name, c) in &all {
        c.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(
            (c.stations.len(), c.agents.len(), c.dropoffs.len()),
            (3, 2, 3)
        );
        assert!(c.stations.iter().all(|s| s.capacity_m == 1));
    }
    let initial = |n: &str| {
        all[n]
            .stations
            .iter()
            .map(|s| s.initial_tasks)
            .collect::<Vec<_>>()
    };
    assert_eq!(initial("S1"), [10, 10, 10]);
    assert_eq!(initial("S2"), [10, 10, 15]);
    for n in ["S3", "S4", "S5"] {
        let p: Vec<f64> = all[n].stations.iter().map(|s| s.arrival_prob).collect();
        assert_eq!(p, [0.05, 0.15, 0.15]);
        assert_eq!(all[n].global_task_cap, 40);
    }
    assert_eq!(
        (all["S3"].penalty.q, all["S3"].penalty.tau),
        (10_000.0, 0.0)
    );
    assert_eq!(
        (all["S4"].penalty.q, all["S4"].penalty.tau),
        (10_000.0, 100.0)
    );
    assert_eq!(all["S5"].penalty.q, 0.0);
    assert_eq!(all["S1"].penalty.mode, PenaltyMode::Urgency);
}

#[test]
fn empty_workload_only_idles() {
    let mut c = small("S3", 0, 100);
    for s in &mut c.stations {
        s.arrival_prob = 0.0;
    }
    let trace = run_scenario(&c).unwrap();
    assert!(trace
        .events
        .iter()
        .all(|e| matches!(e.kind, EventKind::AgentIdle { .. })));
    assert_eq!(trace.events.len(), 2);
    assert_eq!(trace.summary.spawned, 0);
}

#[test]
fn scenario_one_delivers_everything() {
    let trace = run_scenario(&preset("S1").unwrap()).unwrap();
    assert_eq!(trace.summary.spawned, 30);
    assert_eq!(trace.summary.delivered, 30);
    assert_eq!(trace.summary.final_queues, vec![0, 0, 0]);
}

#[test]
fn same_seed_same_trace() {
    let c = small("S4", 42, 600);
    let a = run_scenario(&c).unwrap();
    let b = run_scenario(&c).unwrap();
    assert_eq!(a.events, b.events);
    assert_eq!(a.live_queues, b.live_queues);
    let other = run_scenario(&small("S4", 43, 600)).unwrap();
    assert_ne!(a.events, other.events);
}

#[test]
fn invalid_configs_are_rejected_up_front() {
    let mut c = small("S1", 0, 10);
    c.horizon = 0;
    assert!(matches!(run_scenario(&c), Err(SimError::Config(_))));
    let mut c = small("S3", 0, 10);
    c.stations[0].arrival_prob = 1.5;
    assert!(Simulation::new(&c).is_err());
    let mut c = small("S1", 0, 10);
    c.global_task_cap = 5;
    assert!(Simulation::new(&c).is_err());
}

/// Checks every rule that must hold over a whole event log.
fn audit(config: &qalloc::sim::ScenarioConfig) {
    let mut sim = Simulation::new(config).unwrap();
    let mut seen = 0;
    while !sim.is_finished() {
        let before: BTreeMap<TaskId, Option<AgentId>> = sim
            .world()
            .tasks
            .values()
            .filter(|t| t.state == TaskState::PickedUp)
            .map(|t| (t.id, t.assignee))
            .collect();
        sim.step().unwrap();
        let w = sim.world();
        let tick = w.clock - 1;

        // Conservation.
        let states = [
            TaskState::Queued,
            TaskState::Assigned,
            TaskState::PickedUp,
            TaskState::Delivered,
        ];
        let total: usize = states.iter().map(|s| w.count_state(*s)).sum();
        assert_eq!(total as u64, w.spawned());
        assert!(w.undelivered() <= config.global_task_cap);
        // Carried items stay with their carrier until delivered.
        for (task, carrier) in before {
            let t = &w.tasks[&task];
            match t.state {
                TaskState::PickedUp => assert_eq!(t.assignee, carrier),
                TaskState::Delivered => {}
                other => panic!("{task} went back to {other:?}"),
            }
        }

        let new = &sim.events()[seen..];
        assert!(new.iter().all(|e| e.time == tick));
        let spawned_now = new
            .iter()
            .any(|e| matches!(e.kind, EventKind::TaskSpawned { .. }));
        let auctions = new
            .iter()
            .filter(|e| matches!(e.kind, EventKind::AuctionRun { .. }))
            .count();
        assert!(auctions <= 1);
        if spawned_now {
            assert_eq!(auctions, 1, "tick {tick}: spawn without auction");
        }
        // Per-station assignment limit.
        let mut per_station: BTreeMap<StationId, usize> = BTreeMap::new();
        for t in w.tasks.values().filter(|t| t.state == TaskState::Assigned) {
            *per_station.entry(t.station).or_default() += 1;
        }
        for (s, n) in per_station {
            assert!(n <= w.stations[s.0].capacity_m, "{s} has {n} assigned");
        }
        seen = sim.events().len();
    }

    // Lifecycle order from the log alone.
    let trace = sim.into_trace();
    assert!(trace.events.windows(2).all(|w| w[0].time <= w[1].time));
    let mut phase: BTreeMap<TaskId, (u8, Option<AgentId>)> = BTreeMap::new();
    for e in &trace.events {
        match e.kind {
            EventKind::TaskSpawned { task, .. } => assert!(phase.insert(task, (0, None)).is_none()),
            EventKind::TaskAssigned { task, agent } => {
                let p = phase.get_mut(&task).unwrap();
                assert!(p.0 == 0);
                *p = (1, Some(agent));
            }
            EventKind::TaskReassigned { task, from, to } => {
                let p = phase.get_mut(&task).unwrap();
                assert_eq!(*p, (1, Some(from)), "reassigning {task}");
                *p = (if to.is_some() { 1 } else { 0 }, to);
            }
            EventKind::TaskPickedUp { task, agent } => {
                let p = phase.get_mut(&task).unwrap();
                assert_eq!(*p, (1, Some(agent)));
                p.0 = 2;
            }
            EventKind::TaskDelivered { task, agent } => {
                let p = phase.get_mut(&task).unwrap();
                assert_eq!(*p, (2, Some(agent)));
                p.0 = 3;
            }
            _ => {}
        }
    }
}

#[test]
fn presets_pass_the_audit() {
    for name in ["S1", "S2", "S3", "S4", "S5"] {
        audit(&small(name, 3, 800));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_scenarios_pass_the_audit(
        seed in any::<u64>(),
        probs in prop::array::uniform3(0.0f64..0.4),
        cap in 1usize..30,
        m in 1usize..3,
        additive in any::<bool>(),
    ) {
        let mut c = small("S4", seed, 300);
        c.global_task_cap = cap;
        for (s, p) in c.stations.iter_mut().zip(probs) {
            s.arrival_prob = p;
            s.capacity_m = m;
        }
        if additive {
            c.penalty.mode = PenaltyMode::Additive;
        }
        audit(&c);
    }
}

#[test]
fn auction_keeps_carriers_on_their_items() {
    let mut sim = Simulation::new(&small("S4", 9, 1500)).unwrap();
    let mut snapshots = 0;
    while !sim.is_finished() {
        sim.step().unwrap();
        let carried: Vec<_> = sim
            .world()
            .agents
            .iter()
            .filter(|a| a.carrying)
            .map(|a| (a.id, a.assigned_task.unwrap()))
            .collect();
        if carried.is_empty() {
            continue;
        }
        let a = solve(&sim.auction_problem().unwrap());
        for (agent, task) in carried {
            assert_eq!(a.task_of(agent), Some(task));
        }
        snapshots += 1;
    }
    assert!(snapshots > 100);
}

fn world() -> WorldState {
    let mut w = WorldState::new(GridMap::new(10, 10));
    w.add_station(Cell::new(0, 0), 0.0, 1).unwrap();
    w.add_station(Cell::new(0, 9), 0.0, 1).unwrap();
    w.add_agent(Cell::new(5, 5), 1).unwrap();
    w.add_agent(Cell::new(6, 6), 1).unwrap();
    w
}

fn assignment(pairs: &[(usize, u64)]) -> Assignment {
    Assignment {
        pairs: pairs
            .iter()
            .map(|&(a, t)| (AgentId(a), TaskId(t)))
            .collect(),
        objective: 0,
        total_cost: 0.0,
    }
}

#[test]
fn apply_assignment_cases() {
    let mut w = world();
    let t0 = w.spawn_task(StationId(0), Cell::new(9, 9)).unwrap();
    let t1 = w.spawn_task(StationId(1), Cell::new(9, 0)).unwrap();
    let kinds =
        |events: Vec<qalloc::sim::SimEvent>| events.into_iter().map(|e| e.kind).collect::<Vec<_>>();

    let got = kinds(apply_assignment(&mut w, &assignment(&[(0, 0)])).unwrap());
    assert_eq!(
        got,
        vec![EventKind::TaskAssigned {
            task: t0,
            agent: AgentId(0)
        }]
    );
    assert!(apply_assignment(&mut w, &assignment(&[(0, 0)]))
        .unwrap()
        .is_empty());

    // t0 moves to agent 1; agent 0 takes t1.
    let got = kinds(apply_assignment(&mut w, &assignment(&[(0, 1), (1, 0)])).unwrap());
    assert!(got.contains(&EventKind::TaskReassigned {
        task: t0,
        from: AgentId(0),
        to: Some(AgentId(1))
    }));
    assert!(got.contains(&EventKind::TaskAssigned {
        task: t1,
        agent: AgentId(0)
    }));
    assert_eq!(w.agents[1].assigned_task, Some(t0));

    // Agent 0 loses t1 and has nothing else: t1 goes back to waiting.
    let got = kinds(apply_assignment(&mut w, &assignment(&[(1, 0)])).unwrap());
    assert!(got.contains(&EventKind::TaskReassigned {
        task: t1,
        from: AgentId(0),
        to: None
    }));
    assert!(got.contains(&EventKind::AgentIdle { agent: AgentId(0) }));
    assert_eq!(w.tasks[&t1].state, TaskState::Queued);
    assert_eq!(w.agents[0].assigned_task, None);

    w.transition_task(t0, TaskState::PickedUp).unwrap();
    let err = apply_assignment(&mut w, &assignment(&[(0, 0)]));
    assert!(matches!(err, Err(SimError::Invariant { .. })));
    let err = apply_assignment(&mut w, &assignment(&[(1, 1)]));
    assert!(matches!(err, Err(SimError::Invariant { .. })));
    assert_eq!(w.tasks[&t0].assignee, Some(AgentId(1)));
}
