use super::{DynamicObstacle, OccupancyGrid};
use crate::geometry::Pose2;

/// Cells per side of both local crops.
pub const LOCAL_CELLS: usize = 30;
/// Coarse crop resolution; 30 cells span 3 m.
pub const COARSE_RESOLUTION: f64 = 0.1;
/// Fine crop resolution; 30 cells span 0.75 m.
pub const FINE_RESOLUTION: f64 = 0.025;

/// Square binary crop centered on and aligned with the base. Cell `(ix, iy)`
/// is stored at `iy * side + ix`; `ix` grows along the base's forward axis and
/// `iy` along its left axis.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMap {
    pub side: usize,
    pub resolution: f64,
    pub cells: Vec<bool>,
}

impl LocalMap {
    pub fn get(&self, ix: usize, iy: usize) -> bool {
        self.cells[iy * self.side + ix]
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|c| **c).count()
    }

    /// Base-frame coordinates of a crop cell center.
    pub fn cell_center(&self, ix: usize, iy: usize) -> (f64, f64) {
        let half = self.side as f64 / 2.0;
        (
            (ix as f64 + 0.5 - half) * self.resolution,
            (iy as f64 + 0.5 - half) * self.resolution,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalMapPair {
    pub coarse: LocalMap,
    pub fine: LocalMap,
}

/// Coarse and fine crops around `base`. Each crop cell samples the global cell
/// containing its world-frame center; cells off the map are occupied and
/// dynamic obstacles count where they cover that global cell's center.
pub fn extract_local(
    grid: &OccupancyGrid,
    dynamics: &[DynamicObstacle],
    base: &Pose2,
) -> LocalMapPair {
    LocalMapPair {
        coarse: crop(grid, dynamics, base, COARSE_RESOLUTION),
        fine: crop(grid, dynamics, base, FINE_RESOLUTION),
    }
}

fn crop(
    grid: &OccupancyGrid,
    dynamics: &[DynamicObstacle],
    base: &Pose2,
    resolution: f64,
) -> LocalMap {
    let geom = grid.geometry();
    let mut map = LocalMap {
        side: LOCAL_CELLS,
        resolution,
        cells: vec![false; LOCAL_CELLS * LOCAL_CELLS],
    };
    let reach = resolution * LOCAL_CELLS as f64;
    let nearby: Vec<&DynamicObstacle> = dynamics
        .iter()
        .filter(|d| (d.pose.x - base.x).hypot(d.pose.y - base.y) <= reach + d.shape.circumradius())
        .collect();
    for iy in 0..LOCAL_CELLS {
        for ix in 0..LOCAL_CELLS {
            let (lx, ly) = map.cell_center(ix, iy);
            let (wx, wy) = base.transform_point(lx, ly);
            let occupied = match geom.world_to_cell(wx, wy) {
                None => true,
                Some((gx, gy)) => {
                    if grid.height_at(gx, gy) > 0.0 {
                        true
                    } else if nearby.is_empty() {
                        false
                    } else {
                        let (cx, cy) = geom.cell_center(gx, gy);
                        nearby.iter().any(|d| d.contains(cx, cy))
                    }
                }
            };
            map.cells[iy * LOCAL_CELLS + ix] = occupied;
        }
    }
    map
}
