//! Exact branch-and-bound over the binary assignment variables.
//!
//! Agents are branched in id order, each trying its tasks in id order and
//! then "no task". Only strict improvements replace the incumbent, so the
//! first optimum reached is the canonical one: the lexicographically
//! smallest per-agent task vector, with "no task" ordered last.

use super::flow::solve_flow;
use super::{Assignment, AssignmentProblem, Indexed};

/// Optimal assignment with canonical tie-breaking.
///
/// The min-cost-flow relaxation gives the optimal objective up front, and the
/// search stops at the first canonical solution reaching it.
pub fn solve(problem: &AssignmentProblem) -> Assignment {
    if problem.is_empty() {
        return Assignment::empty();
    }
    let target = solve_flow(problem).objective;
    let found = Search::new(problem.indexed(), Some(target)).run();
    match found {
        Some(choice) => problem.assignment_from_indices(&choice),
        None => {
            debug_assert!(false, "flow optimum {target} not reached by search");
            solve_branch_and_bound(problem)
        }
    }
}

/// The same search without the flow target; exhaustive up to pruning.
pub fn solve_branch_and_bound(problem: &AssignmentProblem) -> Assignment {
    let choice = Search::new(problem.indexed(), None)
        .run()
        .expect("empty assignment is always feasible");
    problem.assignment_from_indices(&choice)
}

struct Search {
    ix: Indexed,
    task_used: Vec<bool>,
    station_load: Vec<usize>,
    choice: Vec<Option<usize>>,
    best: Option<Vec<Option<usize>>>,
    best_value: i64,
    target: Option<i64>,
    done: bool,
}

impl Search {
    fn new(ix: Indexed, target: Option<i64>) -> Self {
        let n_agents = ix.adj.len();
        let n_tasks = ix.task_station.len();
        let n_stations = ix.caps.len();
        Self {
            ix,
            task_used: vec![false; n_tasks],
            station_load: vec![0; n_stations],
            choice: vec![None; n_agents],
            best: None,
            best_value: target.map_or(-1, |t| t - 1),
            target,
            done: false,
        }
    }

    fn run(mut self) -> Option<Vec<Option<usize>>> {
        self.dfs(0, 0);
        self.best
    }

    fn available(&self, task: usize) -> bool {
        !self.task_used[task]
            && self.ix.task_station[task].is_none_or(|s| self.station_load[s] < self.ix.caps[s])
    }

    /// Each remaining agent takes its best still-available edge, ignoring
    /// conflicts between them.
    fn bound(&self, from: usize) -> i64 {
        self.ix.adj[from..]
            .iter()
            .map(|edges| {
                edges
                    .iter()
                    .filter(|(t, _)| self.available(*t))
                    .map(|(_, p)| *p)
                    .max()
                    .unwrap_or(0)
            })
            .sum()
    }

    fn dfs(&mut self, agent: usize, value: i64) {
        if self.done {
            return;
        }
        if agent == self.choice.len() {
            if value > self.best_value {
                self.best_value = value;
                self.best = Some(self.choice.clone());
                if self.target == Some(value) {
                    self.done = true;
                }
            }
            return;
        }
        if value + self.bound(agent) <= self.best_value {
            return;
        }
        for i in 0..self.ix.adj[agent].len() {
            let (task, profit) = self.ix.adj[agent][i];
            if !self.available(task) {
                continue;
            }
            let station = self.ix.task_station[task];
            self.task_used[task] = true;
            if let Some(s) = station {
                self.station_load[s] += 1;
            }
            self.choice[agent] = Some(task);
            self.dfs(agent + 1, value + profit);
            self.choice[agent] = None;
            if let Some(s) = station {
                self.station_load[s] -= 1;
            }
            self.task_used[task] = false;
            if self.done {
                return;
            }
        }
        self.dfs(agent + 1, value);
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::auction::{to_profits, CostEdge, ProblemTask, ProfitEdge};
    use crate::model::{AgentId, StationId, TaskId};

    fn problem(edges: &[(usize, u64, usize, f64)], caps: &[(usize, usize)]) -> AssignmentProblem {
        let edges: Vec<CostEdge> = edges
            .iter()
            .map(|&(a, t, s, c)| CostEdge {
                agent: AgentId(a),
                task: TaskId(t),
                station: Some(StationId(s)),
                cost: c,
            })
            .collect();
        let caps = caps.iter().map(|&(s, m)| (StationId(s), m)).collect();
        AssignmentProblem::from_table(&to_profits(&edges).unwrap(), caps).unwrap()
    }

    #[test]
    fn single_pair() {
        let p = problem(&[(0, 0, 0, 3.0)], &[(0, 1)]);
        let a = solve(&p);
        assert_eq!(a.pairs, vec![(AgentId(0), TaskId(0))]);
        assert_eq!(a.total_cost, 3.0);
    }

    #[test]
    fn station_cap_of_one() {
        // Options: {R0-T0} profit B-4, {R0-T1} B-9, {R1-T0} B-6, {R1-T1} B-2.
        // Both tasks sit at S0 with m = 1, so only one pair survives: R1-T1.
        let p = problem(
            &[
                (0, 0, 0, 4.0),
                (0, 1, 0, 9.0),
                (1, 0, 0, 6.0),
                (1, 1, 0, 2.0),
            ],
            &[(0, 1)],
        );
        let a = solve(&p);
        assert_eq!(a.pairs, vec![(AgentId(1), TaskId(1))]);
        assert_eq!(solve_branch_and_bound(&p), a);
    }

    #[test]
    fn ties_pick_canonical_pairs() {
        let p = problem(
            &[
                (0, 0, 0, 1.0),
                (0, 1, 1, 1.0),
                (1, 0, 0, 1.0),
                (1, 1, 1, 1.0),
            ],
            &[(0, 1), (1, 1)],
        );
        let a = solve(&p);
        assert_eq!(
            a.pairs,
            vec![(AgentId(0), TaskId(0)), (AgentId(1), TaskId(1))]
        );
    }

    #[test]
    fn uncapped_carried_task() {
        let tasks = [
            ProblemTask {
                id: TaskId(0),
                station: None,
            },
            ProblemTask {
                id: TaskId(1),
                station: Some(StationId(0)),
            },
        ];
        let edges = [
            ProfitEdge {
                agent: AgentId(0),
                task: TaskId(0),
                profit: 10,
                cost: 0.0,
            },
            ProfitEdge {
                agent: AgentId(1),
                task: TaskId(1),
                profit: 4,
                cost: 6.0,
            },
        ];
        let caps = BTreeMap::from([(StationId(0), 1)]);
        let p = AssignmentProblem::new([AgentId(0), AgentId(1)], tasks, edges, caps).unwrap();
        let a = solve(&p);
        assert_eq!(a.len(), 2);
        assert_eq!(a.objective, 14);
    }
}
