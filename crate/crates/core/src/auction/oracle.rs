//! Exhaustive reference solver for small instances.

use super::{Assignment, AssignmentProblem, AuctionError};

pub const ORACLE_MAX_AGENTS: usize = 5;
pub const ORACLE_MAX_TASKS: usize = 8;

/// Enumerates every pair set (each agent takes one of its tasks or none),
/// discards the infeasible ones, and returns the most profitable. Enumeration
/// runs in canonical order and keeps only strict improvements, matching the
/// tie-breaking of [`super::solve`].
pub fn brute_force_oracle(problem: &AssignmentProblem) -> Result<Assignment, AuctionError> {
    let agents = problem.agents().len();
    let tasks = problem.tasks().len();
    if agents > ORACLE_MAX_AGENTS || tasks > ORACLE_MAX_TASKS {
        return Err(AuctionError::OracleTooLarge { agents, tasks });
    }
    let ix = problem.indexed();
    let mut choice = vec![None; agents];
    let mut best: Option<(i64, Vec<Option<usize>>)> = None;
    enumerate(&ix.adj, 0, &mut choice, &mut |choice| {
        let mut used = vec![false; tasks];
        let mut load = vec![0usize; ix.caps.len()];
        let mut value = 0;
        for (a, t) in choice.iter().enumerate() {
            let Some(t) = *t else { continue };
            if used[t] {
                return;
            }
            used[t] = true;
            if let Some(s) = ix.task_station[t] {
                load[s] += 1;
                if load[s] > ix.caps[s] {
                    return;
                }
            }
            value += ix.adj[a].iter().find(|(tt, _)| *tt == t).unwrap().1;
        }
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, choice.to_vec()));
        }
    });
    let (_, choice) = best.expect("the empty assignment is enumerated");
    Ok(problem.assignment_from_indices(&choice))
}

fn enumerate(
    adj: &[Vec<(usize, i64)>],
    agent: usize,
    choice: &mut Vec<Option<usize>>,
    visit: &mut impl FnMut(&[Option<usize>]),
) {
    if agent == adj.len() {
        visit(choice);
        return;
    }
    for &(t, _) in &adj[agent] {
        choice[agent] = Some(t);
        enumerate(adj, agent + 1, choice, visit);
    }
    choice[agent] = None;
    enumerate(adj, agent + 1, choice, visit);
}
