//! Cost layer for the end-effector planner: a constant penalty near tall
//! obstacles and outside the corridor around the base path.

use super::astar::{plan_cells, GridPath, WeightMode};
use super::{MotionError, PlannerConfig, RobotPlanning};
use crate::geometry::{Pose2, Pose3};
use crate::gridmap::{
    squared_distance_field, within_radius, BinaryGrid, GridGeometry, OccupancyGrid,
};

/// Per-cell nonnegative cost plus the cells the search may not enter.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMap {
    geometry: GridGeometry,
    weights: Vec<f64>,
    blocked: Vec<bool>,
}

impl WeightMap {
    pub fn new(geometry: GridGeometry, weights: Vec<f64>, blocked: Vec<bool>) -> Self {
        assert_eq!(weights.len(), geometry.len());
        assert_eq!(blocked.len(), geometry.len());
        debug_assert!(weights.iter().all(|w| *w >= 0.0 && w.is_finite()));
        Self {
            geometry,
            weights,
            blocked,
        }
    }

    /// All-zero weights over free space, blocking the given cells.
    pub fn uniform(mask: &BinaryGrid) -> Self {
        Self::new(
            *mask.geometry(),
            vec![0.0; mask.cells().len()],
            mask.cells().to_vec(),
        )
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn blocked(&self) -> &[bool] {
        &self.blocked
    }

    pub fn weight(&self, ix: usize, iy: usize) -> f64 {
        self.weights[self.geometry.index(ix, iy)]
    }

    pub fn is_blocked(&self, ix: usize, iy: usize) -> bool {
        self.blocked[self.geometry.index(ix, iy)]
    }

    /// Blocked status of the cell under a world point; off-map counts as blocked.
    pub fn is_blocked_world(&self, x: f64, y: f64) -> bool {
        match self.geometry.world_to_cell(x, y) {
            Some((ix, iy)) => self.is_blocked(ix, iy),
            None => true,
        }
    }
}

/// Weight layer together with the base path it was derived from.
#[derive(Debug, Clone)]
pub struct WeightLayers {
    pub weights: WeightMap,
    pub base_path: GridPath,
    /// Cells within `d_ee` of an obstacle taller than `max_z`.
    pub ee_inflated: BinaryGrid,
    /// Cells within `d_base` of the base path.
    pub corridor: BinaryGrid,
}

/// Builds the planner weights
/// `w = c * 1[inflate(tall, d_ee) or not inflate(base_path, d_base)]`,
/// with cells near tall obstacles (closer than the collision margin) blocked.
///
/// The base path is the shortest path on the map inflated by the base
/// footprint, from `base_start` to the free cell nearest the goal (within
/// `d_base`).
pub fn build_weights(
    world: &OccupancyGrid,
    base_start: &Pose2,
    goal: &Pose3,
    robot: &RobotPlanning,
    cfg: &PlannerConfig,
) -> Result<WeightLayers, MotionError> {
    let geom = *world.geometry();
    let res = geom.resolution;

    let footprint = footprint_mask(world, robot.footprint_radius);
    let base_free = WeightMap::uniform(&footprint);
    let start = geom
        .world_to_cell(base_start.x, base_start.y)
        .ok_or(MotionError::BasePathInfeasible)?;
    if base_free.is_blocked(start.0, start.1) {
        return Err(MotionError::BasePathInfeasible);
    }
    let base_goal = nearest_free_cell(&footprint, goal.position.x, goal.position.y, robot.d_base)
        .ok_or(MotionError::BasePathInfeasible)?;
    let base_path = plan_cells(&base_free, start, base_goal, WeightMode::PerCellScaled)
        .map_err(|_| MotionError::BasePathInfeasible)?;

    let tall: Vec<bool> = world.cells().iter().map(|h| *h > robot.max_z).collect();
    let tall_field = squared_distance_field(&tall, geom.width, geom.height);
    let mut path_mask = vec![false; geom.len()];
    for &(x, y) in &base_path.cells {
        path_mask[geom.index(x, y)] = true;
    }
    let path_field = squared_distance_field(&path_mask, geom.width, geom.height);

    let n = geom.len();
    let mut weights = vec![0.0; n];
    let mut blocked = vec![false; n];
    let mut ee_inflated = vec![false; n];
    let mut corridor = vec![false; n];
    for i in 0..n {
        let near_tall = within_radius(tall_field[i], cfg.d_ee, res);
        let in_corridor = within_radius(path_field[i], robot.d_base, res);
        ee_inflated[i] = near_tall;
        corridor[i] = in_corridor;
        if near_tall || !in_corridor {
            weights[i] = cfg.weight_factor;
        }
        blocked[i] = tall[i] || within_radius(tall_field[i], cfg.collision_margin, res);
    }
    Ok(WeightLayers {
        weights: WeightMap::new(geom, weights, blocked),
        base_path,
        ee_inflated: BinaryGrid::new(geom, ee_inflated),
        corridor: BinaryGrid::new(geom, corridor),
    })
}

/// Cells the base center may not occupy: any obstacle within the footprint radius.
pub(crate) fn footprint_mask(world: &OccupancyGrid, radius: f64) -> BinaryGrid {
    crate::gridmap::inflate(world, radius, 0.0)
}

/// Free cell closest (by center distance) to a world point, searching within
/// `max_dist`; ties go to the lower cell index.
pub(crate) fn nearest_free_cell(
    mask: &BinaryGrid,
    x: f64,
    y: f64,
    max_dist: f64,
) -> Option<(usize, usize)> {
    let geom = mask.geometry();
    if let Some((ix, iy)) = geom.world_to_cell(x, y) {
        if !mask.get(ix, iy) {
            return Some((ix, iy));
        }
    }
    let (cx, cy) = geom.world_to_cell_signed(x, y);
    let r = (max_dist / geom.resolution).ceil() as i64 + 1;
    let mut best: Option<(f64, usize, (usize, usize))> = None;
    for iy in (cy - r)..=(cy + r) {
        for ix in (cx - r)..=(cx + r) {
            let Some((ux, uy)) = geom.checked(ix, iy) else {
                continue;
            };
            if mask.get(ux, uy) {
                continue;
            }
            let (px, py) = geom.cell_center(ux, uy);
            let d = (px - x).hypot(py - y);
            if d > max_dist {
                continue;
            }
            let idx = geom.index(ux, uy);
            let better = match best {
                None => true,
                Some((bd, bi, _)) => d < bd || (d == bd && idx < bi),
            };
            if better {
                best = Some((d, idx, (ux, uy)));
            }
        }
    }
    best.map(|b| b.2)
}
