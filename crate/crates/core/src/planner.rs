//! Risk-aware grid planning.
//!
//! Cost of a path is `dist + risk`: `dist` counts straight steps as 1 and
//! diagonal steps as sqrt(2), `risk` charges every step the mean risk of the
//! two cells it joins. Charging the mean keeps costs symmetric and makes a
//! zero-length path free.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use thiserror::Error;

use crate::map::{Cell, GridMap};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("cell {0} is occupied or outside the map")]
    Occupied(Cell),
    #[error("no path from {start} to {goal}")]
    Unreachable { start: Cell, goal: Cell },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub path: Vec<Cell>,
    pub dist_cost: f64,
    pub risk_cost: f64,
    pub total_cost: f64,
}

/// Anything that can price a trip between two cells.
pub trait TravelCost {
    /// `None` when `to` cannot be reached from `from`.
    fn travel_cost(&self, from: Cell, to: Cell) -> Option<f64>;
}

impl TravelCost for GridMap {
    fn travel_cost(&self, from: Cell, to: Cell) -> Option<f64> {
        path_cost(self, from, to).ok()
    }
}

/// Returns a copy of `map` whose risk layer is
/// `risk_weight * max(0, inflation_radius - d)`, with `d` the Chebyshev
/// distance to the nearest occupied cell. Occupied cells carry zero risk.
pub fn build_risk_layer(map: &GridMap, inflation_radius: usize, risk_weight: f64) -> GridMap {
    let mut out = map.clone();
    let dist = obstacle_distance(map);
    for (i, r) in out.risk_mut().iter_mut().enumerate() {
        let cell = map.cell_at(i);
        *r = match dist[i] {
            Some(d) if map.is_free(cell) && d < inflation_radius => {
                risk_weight * (inflation_radius - d) as f64
            }
            _ => 0.0,
        };
    }
    out
}

/// Chebyshev distance from each cell to the nearest occupied cell, via a
/// multi-source BFS over the 8-neighborhood (obstacles do not block it).
fn obstacle_distance(map: &GridMap) -> Vec<Option<usize>> {
    let mut dist = vec![None; map.len()];
    let mut frontier = VecDeque::new();
    for cell in map.occupied_cells() {
        dist[map.index(cell)] = Some(0);
        frontier.push_back(cell);
    }
    while let Some(cell) = frontier.pop_front() {
        let d = dist[map.index(cell)].unwrap();
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                let (Some(x), Some(y)) =
                    (cell.x.checked_add_signed(dx), cell.y.checked_add_signed(dy))
                else {
                    continue;
                };
                let next = Cell::new(x, y);
                if !map.in_bounds(next) {
                    continue;
                }
                let i = map.index(next);
                if dist[i].is_none() {
                    dist[i] = Some(d + 1);
                    frontier.push_back(next);
                }
            }
        }
    }
    dist
}

/// Cost of the single step `from -> to` between adjacent free cells.
pub fn step_cost(map: &GridMap, from: Cell, to: Cell, length: f64) -> f64 {
    length + 0.5 * (map.risk(from) + map.risk(to))
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    priority: f64,
    cell: Cell,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Min-heap on (priority, cell).
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .priority
            .total_cmp(&self.priority)
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

fn octile(a: Cell, b: Cell) -> f64 {
    let dx = a.x.abs_diff(b.x) as f64;
    let dy = a.y.abs_diff(b.y) as f64;
    let (lo, hi) = if dx < dy { (dx, dy) } else { (dy, dx) };
    hi - lo + lo * std::f64::consts::SQRT_2
}

/// Minimum-cost 8-connected path from `start` to `goal` (A* with the octile
/// heuristic). Ties go to the lexicographically smaller cell.
pub fn plan(map: &GridMap, start: Cell, goal: Cell) -> Result<PlanResult, PlanError> {
    for cell in [start, goal] {
        if map.is_occupied(cell) {
            return Err(PlanError::Occupied(cell));
        }
    }
    let mut g = vec![f64::INFINITY; map.len()];
    let mut parent: Vec<Option<usize>> = vec![None; map.len()];
    let mut closed = vec![false; map.len()];
    let mut heap = BinaryHeap::new();
    g[map.index(start)] = 0.0;
    heap.push(Entry {
        priority: octile(start, goal),
        cell: start,
    });
    while let Some(Entry { cell, .. }) = heap.pop() {
        let ci = map.index(cell);
        if closed[ci] {
            continue;
        }
        closed[ci] = true;
        if cell == goal {
            break;
        }
        for (next, len) in map.neighbors(cell) {
            let ni = map.index(next);
            if closed[ni] {
                continue;
            }
            let cand = g[ci] + step_cost(map, cell, next, len);
            if cand < g[ni] {
                g[ni] = cand;
                parent[ni] = Some(ci);
                heap.push(Entry {
                    priority: cand + octile(next, goal),
                    cell: next,
                });
            }
        }
    }
    if !closed[map.index(goal)] {
        return Err(PlanError::Unreachable { start, goal });
    }
    let mut path = vec![goal];
    let mut cur = map.index(goal);
    while let Some(p) = parent[cur] {
        path.push(map.cell_at(p));
        cur = p;
    }
    path.reverse();
    Ok(summarize(map, path))
}

/// Splits a path's cost into its distance and risk parts.
pub fn summarize(map: &GridMap, path: Vec<Cell>) -> PlanResult {
    let mut dist_cost = 0.0;
    let mut risk_cost = 0.0;
    for w in path.windows(2) {
        let diagonal = w[0].x != w[1].x && w[0].y != w[1].y;
        dist_cost += if diagonal {
            std::f64::consts::SQRT_2
        } else {
            1.0
        };
        risk_cost += 0.5 * (map.risk(w[0]) + map.risk(w[1]));
    }
    PlanResult {
        path,
        dist_cost,
        risk_cost,
        total_cost: dist_cost + risk_cost,
    }
}

/// `plan(map, start, goal)?.total_cost`.
pub fn path_cost(map: &GridMap, start: Cell, goal: Cell) -> Result<f64, PlanError> {
    plan(map, start, goal).map(|r| r.total_cost)
}

/// Single-source Dijkstra tree over the whole map.
///
/// Costs are symmetric, so `cost(c)` is also the cost of travelling from `c`
/// to the source and [`DistanceField::path_from`] walks the tree toward it.
#[derive(Debug, Clone)]
pub struct DistanceField {
    source: Cell,
    width: usize,
    cost: Vec<f64>,
    parent: Vec<Option<usize>>,
}

impl DistanceField {
    pub fn compute(map: &GridMap, source: Cell) -> Self {
        let mut cost = vec![f64::INFINITY; map.len()];
        let mut parent = vec![None; map.len()];
        if map.is_free(source) {
            let mut closed = vec![false; map.len()];
            let mut heap = BinaryHeap::new();
            cost[map.index(source)] = 0.0;
            heap.push(Entry {
                priority: 0.0,
                cell: source,
            });
            while let Some(Entry { cell, .. }) = heap.pop() {
                let ci = map.index(cell);
                if closed[ci] {
                    continue;
                }
                closed[ci] = true;
                for (next, len) in map.neighbors(cell) {
                    let ni = map.index(next);
                    let cand = cost[ci] + step_cost(map, cell, next, len);
                    if !closed[ni] && cand < cost[ni] {
                        cost[ni] = cand;
                        parent[ni] = Some(ci);
                        heap.push(Entry {
                            priority: cand,
                            cell: next,
                        });
                    }
                }
            }
        }
        Self {
            source,
            width: map.width(),
            cost,
            parent,
        }
    }

    pub fn source(&self) -> Cell {
        self.source
    }

    fn index(&self, cell: Cell) -> Option<usize> {
        let i = cell.y.checked_mul(self.width)? + cell.x;
        (cell.x < self.width && i < self.cost.len()).then_some(i)
    }

    pub fn cost(&self, cell: Cell) -> Option<f64> {
        let c = self.cost[self.index(cell)?];
        c.is_finite().then_some(c)
    }

    /// Path from `cell` to the source, both ends included.
    pub fn path_from(&self, cell: Cell) -> Option<Vec<Cell>> {
        self.cost(cell)?;
        let mut cur = self.index(cell)?;
        let mut path = vec![cell];
        while let Some(p) = self.parent[cur] {
            path.push(Cell::new(p % self.width, p / self.width));
            cur = p;
        }
        Some(path)
    }
}

/// Distance fields for a fixed set of targets, falling back to A* for any
/// other pair.
#[derive(Debug, Clone)]
pub struct FieldCache {
    map: GridMap,
    fields: BTreeMap<Cell, DistanceField>,
}

impl FieldCache {
    pub fn new(map: GridMap, targets: impl IntoIterator<Item = Cell>) -> Self {
        let fields = targets
            .into_iter()
            .map(|t| (t, DistanceField::compute(&map, t)))
            .collect();
        Self { map, fields }
    }

    pub fn map(&self) -> &GridMap {
        &self.map
    }

    /// Cells from `from` to `to`, both included.
    pub fn path(&self, from: Cell, to: Cell) -> Option<Vec<Cell>> {
        match self.fields.get(&to) {
            Some(field) => field.path_from(from),
            None => plan(&self.map, from, to).ok().map(|r| r.path),
        }
    }
}

impl TravelCost for FieldCache {
    fn travel_cost(&self, from: Cell, to: Cell) -> Option<f64> {
        if let Some(field) = self.fields.get(&to) {
            return field.cost(from);
        }
        if let Some(field) = self.fields.get(&from) {
            return field.cost(to);
        }
        path_cost(&self.map, from, to).ok()
    }
}
