//! Occupancy grid shared by every agent.
//!
//! The text format is one row per line, `#` for an occupied cell and `.` for a
//! free one. Row 0 is the first line. Blank trailing lines are ignored.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A grid cell, ordered lexicographically by `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    /// Chebyshev distance.
    pub fn chebyshev(self, other: Cell) -> usize {
        self.x.abs_diff(other.x).max(self.y.abs_diff(other.y))
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MapError {
    #[error("map is empty")]
    Empty,
    #[error("row {row} has width {found}, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("unexpected character {ch:?} at row {row}, column {col}")]
    BadChar { ch: char, row: usize, col: usize },
}

/// Occupancy grid with a per-cell risk layer.
///
/// The risk layer starts at zero; see [`crate::planner::build_risk_layer`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    width: usize,
    height: usize,
    occupied: Vec<bool>,
    risk: Vec<f64>,
}

impl GridMap {
    /// An obstacle-free map.
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            occupied: vec![false; width * height],
            risk: vec![0.0; width * height],
        }
    }

    pub fn from_text(text: &str) -> Result<Self, MapError> {
        let rows: Vec<&str> = text
            .lines()
            .map(|l| l.trim_end_matches('\r'))
            .collect::<Vec<_>>();
        let last = rows.iter().rposition(|r| !r.trim().is_empty());
        let rows = match last {
            Some(i) => &rows[..=i],
            None => return Err(MapError::Empty),
        };
        let width = rows[0].chars().count();
        if width == 0 {
            return Err(MapError::Empty);
        }
        let mut map = GridMap::new(width, rows.len());
        for (y, row) in rows.iter().enumerate() {
            let found = row.chars().count();
            if found != width {
                return Err(MapError::RaggedRow {
                    row: y,
                    found,
                    expected: width,
                });
            }
            for (x, ch) in row.chars().enumerate() {
                match ch {
                    '#' => map.set_occupied(Cell::new(x, y), true),
                    '.' => {}
                    _ => return Err(MapError::BadChar { ch, row: y, col: x }),
                }
            }
        }
        Ok(map)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                out.push(if self.is_occupied(Cell::new(x, y)) {
                    '#'
                } else {
                    '.'
                });
            }
            out.push('\n');
        }
        out
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.x < self.width && cell.y < self.height
    }

    pub fn index(&self, cell: Cell) -> usize {
        debug_assert!(self.in_bounds(cell));
        cell.y * self.width + cell.x
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index % self.width, index / self.width)
    }

    /// Out-of-bounds cells count as occupied.
    pub fn is_occupied(&self, cell: Cell) -> bool {
        !self.in_bounds(cell) || self.occupied[self.index(cell)]
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        !self.is_occupied(cell)
    }

    pub fn set_occupied(&mut self, cell: Cell, occupied: bool) {
        let i = self.index(cell);
        self.occupied[i] = occupied;
    }

    pub fn risk(&self, cell: Cell) -> f64 {
        self.risk[self.index(cell)]
    }

    pub(crate) fn risk_mut(&mut self) -> &mut [f64] {
        &mut self.risk
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height).flat_map(move |y| (0..self.width).map(move |x| Cell::new(x, y)))
    }

    pub fn occupied_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.cells().filter(|c| self.is_occupied(*c))
    }

    /// Free 8-connected neighbors of `cell` paired with the step length.
    ///
    /// A diagonal step is only allowed when both orthogonal cells it passes
    /// between are free, so paths never clip an obstacle corner.
    pub fn neighbors(&self, cell: Cell) -> impl Iterator<Item = (Cell, f64)> + '_ {
        const OFFSETS: [(isize, isize); 8] = [
            (-1, -1),
            (-1, 0),
            (-1, 1),
            (0, -1),
            (0, 1),
            (1, -1),
            (1, 0),
            (1, 1),
        ];
        OFFSETS.iter().filter_map(move |&(dx, dy)| {
            let nx = cell.x.checked_add_signed(dx)?;
            let ny = cell.y.checked_add_signed(dy)?;
            let next = Cell::new(nx, ny);
            if self.is_occupied(next) {
                return None;
            }
            if dx != 0 && dy != 0 {
                let side_a = Cell::new(nx, cell.y);
                let side_b = Cell::new(cell.x, ny);
                if self.is_occupied(side_a) || self.is_occupied(side_b) {
                    return None;
                }
                Some((next, std::f64::consts::SQRT_2))
            } else {
                Some((next, 1.0))
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_text_grid() {
        let map = GridMap::from_text("..#\n#..\n").unwrap();
        assert_eq!(map.width(), 3);
        assert_eq!(map.height(), 2);
        assert!(map.is_occupied(Cell::new(2, 0)));
        assert!(map.is_occupied(Cell::new(0, 1)));
        assert!(map.is_free(Cell::new(1, 1)));
        assert_eq!(map.to_text(), "..#\n#..\n");
    }

    #[test]
    fn rejects_bad_maps() {
        assert_eq!(GridMap::from_text("\n\n"), Err(MapError::Empty));
        assert!(matches!(
            GridMap::from_text("...\n..\n"),
            Err(MapError::RaggedRow { row: 1, .. })
        ));
        assert!(matches!(
            GridMap::from_text("..x\n"),
            Err(MapError::BadChar { ch: 'x', .. })
        ));
    }

    #[test]
    fn diagonal_blocked_by_corner() {
        let map = GridMap::from_text("..\n#.\n").unwrap();
        let n: Vec<_> = map.neighbors(Cell::new(0, 0)).map(|(c, _)| c).collect();
        assert_eq!(n, vec![Cell::new(1, 0)]);
    }
}
