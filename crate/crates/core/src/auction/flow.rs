//! Min-cost-flow view of the assignment program.
//!
//! source -> agent (cap 1) -> task (cap 1, cost -rho) -> station (cap 1)
//! -> sink (cap m_i). Tasks outside every queue go straight to the sink.
//! Successive shortest paths, stopping once no augmenting path has negative
//! cost, yield a maximum-profit flow of any size.

use super::{Assignment, AssignmentProblem};

#[derive(Debug, Clone, Copy)]
struct Arc {
    to: usize,
    cap: i64,
    cost: i64,
}

struct Network {
    arcs: Vec<Arc>,
    out: Vec<Vec<usize>>,
}

impl Network {
    fn new(nodes: usize) -> Self {
        Self {
            arcs: Vec::new(),
            out: vec![Vec::new(); nodes],
        }
    }

    fn add(&mut self, from: usize, to: usize, cap: i64, cost: i64) -> usize {
        let id = self.arcs.len();
        self.arcs.push(Arc { to, cap, cost });
        self.out[from].push(id);
        self.arcs.push(Arc {
            to: from,
            cap: 0,
            cost: -cost,
        });
        self.out[to].push(id + 1);
        id
    }

    /// Bellman-Ford shortest path from `s`; returns the arc used to reach
    /// each node.
    fn shortest(&self, s: usize) -> (Vec<i64>, Vec<Option<usize>>) {
        let n = self.out.len();
        let mut dist = vec![i64::MAX; n];
        let mut via = vec![None; n];
        dist[s] = 0;
        for _ in 0..n {
            let mut changed = false;
            for u in 0..n {
                if dist[u] == i64::MAX {
                    continue;
                }
                for &a in &self.out[u] {
                    let arc = self.arcs[a];
                    if arc.cap > 0 && dist[u] + arc.cost < dist[arc.to] {
                        dist[arc.to] = dist[u] + arc.cost;
                        via[arc.to] = Some(a);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        (dist, via)
    }

    /// Augments one unit at a time while the cheapest path is negative.
    fn run(&mut self, s: usize, t: usize) {
        loop {
            let (dist, via) = self.shortest(s);
            if dist[t] == i64::MAX || dist[t] >= 0 {
                return;
            }
            let mut v = t;
            while let Some(a) = via[v] {
                self.arcs[a].cap -= 1;
                self.arcs[a ^ 1].cap += 1;
                v = self.arcs[a ^ 1].to;
            }
        }
    }
}

fn flow_with(problem: &AssignmentProblem, profit: impl Fn(i64) -> i64) -> Vec<(usize, usize)> {
    let ix = problem.indexed();
    let n_agents = ix.adj.len();
    let n_tasks = ix.task_station.len();
    let n_stations = ix.caps.len();
    let source = 0;
    let agent_node = |a: usize| 1 + a;
    let task_node = |t: usize| 1 + n_agents + t;
    let station_node = |s: usize| 1 + n_agents + n_tasks + s;
    let sink = 1 + n_agents + n_tasks + n_stations;
    let mut net = Network::new(sink + 1);
    for a in 0..n_agents {
        net.add(source, agent_node(a), 1, 0);
    }
    let mut pair_arcs = Vec::new();
    for (a, edges) in ix.adj.iter().enumerate() {
        for &(t, p) in edges {
            let id = net.add(agent_node(a), task_node(t), 1, -profit(p));
            pair_arcs.push((id, a, t));
        }
    }
    for (t, station) in ix.task_station.iter().enumerate() {
        match station {
            Some(s) => net.add(task_node(t), station_node(*s), 1, 0),
            None => net.add(task_node(t), sink, 1, 0),
        };
    }
    for (s, cap) in ix.caps.iter().enumerate() {
        net.add(station_node(s), sink, *cap as i64, 0);
    }
    net.run(source, sink);
    pair_arcs
        .into_iter()
        .filter(|(id, _, _)| net.arcs[*id].cap == 0)
        .map(|(_, a, t)| (a, t))
        .collect()
}

/// Maximum-profit assignment from min-cost flow. Optimal in objective, but
/// ties are not broken canonically; [`super::solve`] does that.
pub fn solve_flow(problem: &AssignmentProblem) -> Assignment {
    let mut choice = vec![None; problem.agents().len()];
    for (a, t) in flow_with(problem, |p| p) {
        choice[a] = Some(t);
    }
    problem.assignment_from_indices(&choice)
}

/// Largest number of pairs any feasible assignment can hold (unit profits).
pub fn max_cardinality(problem: &AssignmentProblem) -> usize {
    flow_with(problem, |_| 1).len()
}
