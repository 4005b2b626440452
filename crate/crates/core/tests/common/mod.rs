//! Oracles and generators shared by the integration tests. Nothing here calls
//! into the solver or planner internals it is used to check.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use qalloc::auction::{AssignmentProblem, CostEdge, Instance};
use qalloc::map::{Cell, GridMap};
use qalloc::model::{AgentId, StationId, TaskId};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random instance within the oracle's size guard: up to 5 agents, 8 tasks
/// and 3 stations with caps in {1, 2}. Costs come from a small set so ties
/// are common.
pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let agents = rng.random_range(1..=5usize);
    let tasks = rng.random_range(1..=8u64);
    let stations = rng.random_range(1..=3usize);
    let caps: BTreeMap<StationId, usize> = (0..stations)
        .map(|s| (StationId(s), rng.random_range(1..=2)))
        .collect();
    let task_station: Vec<Option<StationId>> = (0..tasks)
        .map(|_| {
            if rng.random_bool(0.1) {
                None
            } else {
                Some(StationId(rng.random_range(0..stations)))
            }
        })
        .collect();
    let density = rng.random_range(0.3..=1.0);
    let mut edges = Vec::new();
    for a in 0..agents {
        for t in 0..tasks {
            if rng.random_bool(density) {
                let cost = if rng.random_bool(0.5) {
                    rng.random_range(0..6) as f64 * 10.0
                } else {
                    (rng.random_range(0.0..100.0f64) * 100.0).round() / 100.0
                };
                edges.push(CostEdge {
                    agent: AgentId(a),
                    task: TaskId(t),
                    station: task_station[t as usize],
                    cost,
                });
            }
        }
    }
    edges.shuffle(rng);
    Instance { edges, caps }
}

/// Feasibility against the constraint families, written from scratch.
pub fn violations(problem: &AssignmentProblem, pairs: &[(AgentId, TaskId)]) -> Vec<String> {
    let mut out = Vec::new();
    let mut agents = BTreeSet::new();
    let mut tasks = BTreeSet::new();
    let mut load: BTreeMap<StationId, usize> = BTreeMap::new();
    for &(a, t) in pairs {
        if problem.edge(a, t).is_none() {
            out.push(format!("{a}->{t} not an edge"));
        }
        if !agents.insert(a) {
            out.push(format!("{a} twice"));
        }
        if !tasks.insert(t) {
            out.push(format!("{t} twice"));
        }
        if let Some(s) = problem
            .tasks()
            .iter()
            .find(|pt| pt.id == t)
            .and_then(|pt| pt.station)
        {
            *load.entry(s).or_default() += 1;
        }
    }
    for (s, n) in load {
        if n > problem.queue_caps()[&s] {
            out.push(format!("{s} holds {n}"));
        }
    }
    out
}

/// Best objective and largest pair count over all feasible assignments, by
/// plain recursion over agents.
pub fn enumerate_optimum(problem: &AssignmentProblem) -> (i64, usize) {
    fn go(
        problem: &AssignmentProblem,
        agent: usize,
        used: &mut BTreeSet<TaskId>,
        load: &mut BTreeMap<StationId, usize>,
        value: i64,
        count: usize,
        best: &mut (i64, usize),
    ) {
        if agent == problem.agents().len() {
            best.0 = best.0.max(value);
            best.1 = best.1.max(count);
            return;
        }
        go(problem, agent + 1, used, load, value, count, best);
        let a = problem.agents()[agent];
        for e in problem.edges().iter().filter(|e| e.agent == a) {
            if used.contains(&e.task) {
                continue;
            }
            let station = problem
                .tasks()
                .iter()
                .find(|t| t.id == e.task)
                .unwrap()
                .station;
            if let Some(s) = station {
                if load.get(&s).copied().unwrap_or(0) >= problem.queue_caps()[&s] {
                    continue;
                }
                *load.entry(s).or_default() += 1;
            }
            used.insert(e.task);
            go(
                problem,
                agent + 1,
                used,
                load,
                value + e.profit,
                count + 1,
                best,
            );
            used.remove(&e.task);
            if let Some(s) = station {
                *load.get_mut(&s).unwrap() -= 1;
            }
        }
    }
    let mut best = (0, 0);
    go(
        problem,
        0,
        &mut BTreeSet::new(),
        &mut BTreeMap::new(),
        0,
        0,
        &mut best,
    );
    best
}

/// Random map with at most `max_cells` cells and obstacle density `p`.
pub fn random_map(rng: &mut ChaCha8Rng, max_cells: usize, p: f64) -> GridMap {
    let width = rng.random_range(2..=20usize);
    let height = rng.random_range(1..=(max_cells / width).clamp(1, 20));
    let mut map = GridMap::new(width, height);
    for y in 0..height {
        for x in 0..width {
            if rng.random_bool(p) {
                map.set_occupied(Cell::new(x, y), true);
            }
        }
    }
    map
}

pub fn random_free_cell(rng: &mut ChaCha8Rng, map: &GridMap) -> Option<Cell> {
    let free: Vec<Cell> = map.cells().filter(|c| map.is_free(*c)).collect();
    free.choose(rng).copied()
}

/// Risk of every cell by scanning all obstacles.
pub fn risk_oracle(map: &GridMap, radius: usize, weight: f64) -> BTreeMap<Cell, f64> {
    let obstacles: Vec<Cell> = map.cells().filter(|c| map.is_occupied(*c)).collect();
    map.cells()
        .map(|c| {
            let risk = if map.is_occupied(c) {
                0.0
            } else {
                let d = obstacles
                    .iter()
                    .map(|o| c.x.abs_diff(o.x).max(c.y.abs_diff(o.y)))
                    .min();
                match d {
                    Some(d) if d < radius => weight * (radius - d) as f64,
                    _ => 0.0,
                }
            };
            (c, risk)
        })
        .collect()
}

/// Explicit weighted graph of a map: 8-connected free cells, diagonals only
/// when both orthogonal cells they pass are free. A step costs its length
/// plus the mean risk of its two ends.
pub struct Graph {
    pub nodes: Vec<Cell>,
    pub edges: BTreeMap<Cell, Vec<(Cell, f64)>>,
}

impl Graph {
    pub fn new(map: &GridMap, risk: &BTreeMap<Cell, f64>) -> Self {
        let free = |x: i64, y: i64| {
            x >= 0
                && y >= 0
                && (x as usize) < map.width()
                && (y as usize) < map.height()
                && !map.is_occupied(Cell::new(x as usize, y as usize))
        };
        let mut nodes = Vec::new();
        let mut edges = BTreeMap::new();
        for c in map.cells().filter(|c| !map.is_occupied(*c)) {
            nodes.push(c);
            let (x, y) = (c.x as i64, c.y as i64);
            let mut out = Vec::new();
            for (dx, dy) in [
                (-1, -1),
                (0, -1),
                (1, -1),
                (-1, 0),
                (1, 0),
                (-1, 1),
                (0, 1),
                (1, 1),
            ] {
                let (nx, ny) = (x + dx, y + dy);
                if !free(nx, ny) {
                    continue;
                }
                let diagonal = dx != 0 && dy != 0;
                if diagonal && !(free(x + dx, y) && free(x, y + dy)) {
                    continue;
                }
                let n = Cell::new(nx as usize, ny as usize);
                let len = if diagonal { 2f64.sqrt() } else { 1.0 };
                out.push((n, len + 0.5 * (risk[&c] + risk[&n])));
            }
            edges.insert(c, out);
        }
        Self { nodes, edges }
    }

    /// Textbook O(V^2) Dijkstra.
    pub fn dijkstra(&self, source: Cell) -> BTreeMap<Cell, f64> {
        let mut dist: BTreeMap<Cell, f64> = BTreeMap::new();
        let mut done = BTreeSet::new();
        dist.insert(source, 0.0);
        loop {
            let next = dist
                .iter()
                .filter(|(c, _)| !done.contains(*c))
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(c, d)| (*c, *d));
            let Some((c, d)) = next else { break };
            done.insert(c);
            for &(n, w) in &self.edges[&c] {
                let nd = d + w;
                if dist.get(&n).is_none_or(|&old| nd < old) {
                    dist.insert(n, nd);
                }
            }
        }
        dist
    }
}

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}
