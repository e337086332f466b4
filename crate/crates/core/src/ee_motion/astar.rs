//! 8-connected weighted A* over a [`WeightMap`].
//!
//! Edge costs are fixed-point integers so that every optimal path has one
//! exactly representable cost independent of summation order.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::{MotionError, WeightMap};

/// Fixed-point units per cell of travel.
pub const COST_SCALE: f64 = 1_000_000.0;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// How a cell weight enters the cost of a move into that cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// `length * (1 + w)`
    #[default]
    PerCellScaled,
    /// `length + w`
    PerCellFlat,
}

/// Cost of moving into a cell of weight `weight` with a step of `length`
/// cells (1 or sqrt 2).
#[inline]
pub fn edge_cost(length: f64, weight: f64, mode: WeightMode) -> u64 {
    let c = match mode {
        WeightMode::PerCellScaled => length * (1.0 + weight),
        WeightMode::PerCellFlat => length + weight,
    };
    (c * COST_SCALE).round() as u64
}

/// Cells visited from start to goal and the total fixed-point cost.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub cells: Vec<(usize, usize)>,
    pub cost: u64,
}

impl GridPath {
    /// Cost in cell-length units.
    pub fn cost_cells(&self) -> f64 {
        self.cost as f64 / COST_SCALE
    }
}

pub(crate) const NEIGHBORS: [(i64, i64); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

/// Whether the move `(x, y) -> (x + dx, y + dy)` exists in the search graph.
/// Diagonal moves may not cut the corner of a blocked cell.
#[inline]
pub(crate) fn move_allowed(
    blocked: &[bool],
    width: usize,
    x: usize,
    y: usize,
    dx: i64,
    dy: i64,
) -> bool {
    let nx = (x as i64 + dx) as usize;
    let ny = (y as i64 + dy) as usize;
    if blocked[ny * width + nx] {
        return false;
    }
    if dx != 0 && dy != 0 {
        return !blocked[y * width + nx] && !blocked[ny * width + x];
    }
    true
}

/// Minimum-cost path between two traversable cells.
///
/// The heuristic is the octile distance with unit cell cost, which is
/// admissible and consistent for nonnegative weights. Ties on `f` are broken
/// by lower `g`, then lower cell index.
pub fn plan_cells(
    weights: &WeightMap,
    start: (usize, usize),
    goal: (usize, usize),
    mode: WeightMode,
) -> Result<GridPath, MotionError> {
    let geom = weights.geometry();
    let (w, h) = (geom.width, geom.height);
    if start.0 >= w || start.1 >= h || goal.0 >= w || goal.1 >= h {
        return Err(MotionError::OutOfMap);
    }
    let blocked = weights.blocked();
    let si = geom.index(start.0, start.1);
    let gi = geom.index(goal.0, goal.1);
    if blocked[si] || blocked[gi] {
        return Err(MotionError::BlockedEndpoint);
    }

    let straight = COST_SCALE as u64;
    let diagonal = (SQRT2 * COST_SCALE).floor() as u64;
    let heuristic = |i: usize| -> u64 {
        let (x, y) = (i % w, i / w);
        let dx = x.abs_diff(goal.0) as u64;
        let dy = y.abs_diff(goal.1) as u64;
        let (lo, hi) = if dx < dy { (dx, dy) } else { (dy, dx) };
        straight * (hi - lo) + diagonal * lo
    };

    let n = w * h;
    let mut g = vec![u64::MAX; n];
    let mut parent = vec![u32::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    g[si] = 0;
    open.push(Reverse((heuristic(si), 0u64, si as u32)));
    let cell_weights = weights.weights();

    while let Some(Reverse((_, gc, i))) = open.pop() {
        let i = i as usize;
        if closed[i] || gc > g[i] {
            continue;
        }
        if i == gi {
            let mut cells = vec![(i % w, i / w)];
            let mut cur = i;
            while cur != si {
                cur = parent[cur] as usize;
                cells.push((cur % w, cur / w));
            }
            cells.reverse();
            return Ok(GridPath { cells, cost: gc });
        }
        closed[i] = true;
        let (x, y) = (i % w, i / w);
        for (dx, dy) in NEIGHBORS {
            let nx = x as i64 + dx;
            let ny = y as i64 + dy;
            if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                continue;
            }
            if !move_allowed(blocked, w, x, y, dx, dy) {
                continue;
            }
            let j = ny as usize * w + nx as usize;
            if closed[j] {
                continue;
            }
            let len = if dx != 0 && dy != 0 { SQRT2 } else { 1.0 };
            let ng = gc + edge_cost(len, cell_weights[j], mode);
            if ng < g[j] {
                g[j] = ng;
                parent[j] = i as u32;
                open.push(Reverse((ng + heuristic(j), ng, j as u32)));
            }
        }
    }
    Err(MotionError::NoPath)
}

/// Path between two world points; endpoints snap to their containing cells.
pub fn plan_path(
    weights: &WeightMap,
    start: [f64; 2],
    goal: [f64; 2],
    mode: WeightMode,
) -> Result<(GridPath, Vec<[f64; 2]>), MotionError> {
    let geom = weights.geometry();
    let s = geom
        .world_to_cell(start[0], start[1])
        .ok_or(MotionError::OutOfMap)?;
    let g = geom
        .world_to_cell(goal[0], goal[1])
        .ok_or(MotionError::OutOfMap)?;
    let path = plan_cells(weights, s, g, mode)?;
    let waypoints = path
        .cells
        .iter()
        .map(|&(x, y)| {
            let (cx, cy) = geom.cell_center(x, y);
            [cx, cy]
        })
        .collect();
    Ok((path, waypoints))
}
