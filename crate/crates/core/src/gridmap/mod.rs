//! Occupancy/height grids, shape rasterization, Euclidean inflation, local
//! map crops and moving obstacles.

mod distance;
mod dynamics;
mod local;
mod shapes;
mod world_file;

pub use distance::{inflate, inflate_mask, squared_distance_field, within_radius};
pub use dynamics::{advance_dynamics, DynamicObstacle};
pub use local::{
    extract_local, LocalMap, LocalMapPair, COARSE_RESOLUTION, FINE_RESOLUTION, LOCAL_CELLS,
};
pub use shapes::{rasterize, PlacedShape, ShapeKind};
pub use world_file::WorldFile;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Pose2;

/// Default global map resolution in meters per cell.
pub const DEFAULT_RESOLUTION: f64 = 0.025;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("world file: {0}")]
    Parse(String),
}

/// Axis-aligned rectangular region of the world plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Bounds {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Self {
            min_x,
            min_y,
            max_x,
            max_y,
        }
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }

    pub fn is_valid(&self) -> bool {
        self.max_x > self.min_x && self.max_y > self.min_y
    }
}

/// Placement of a regular grid in the world: the origin is the pose of the
/// outer corner of cell `(0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub resolution: f64,
    pub origin: Pose2,
    pub width: usize,
    pub height: usize,
}

impl GridGeometry {
    pub fn new(
        resolution: f64,
        origin: Pose2,
        width: usize,
        height: usize,
    ) -> Result<Self, GridError> {
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(GridError::InvalidGrid(format!(
                "resolution {resolution} must be positive"
            )));
        }
        Ok(Self {
            resolution,
            origin,
            width,
            height,
        })
    }

    /// Grid covering `bounds` with an axis-aligned origin at its minimum corner.
    pub fn covering(bounds: &Bounds, resolution: f64) -> Result<Self, GridError> {
        if !bounds.is_valid() {
            return Err(GridError::InvalidGrid(format!("empty bounds {bounds:?}")));
        }
        if !(resolution > 0.0) {
            return Err(GridError::InvalidGrid(format!(
                "resolution {resolution} must be positive"
            )));
        }
        let width = (bounds.width() / resolution - 1e-9).ceil().max(1.0) as usize;
        let height = (bounds.height() / resolution - 1e-9).ceil().max(1.0) as usize;
        Self::new(
            resolution,
            Pose2::new(bounds.min_x, bounds.min_y, 0.0),
            width,
            height,
        )
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.width + ix
    }

    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.width, index / self.width)
    }

    /// World coordinates of a cell center.
    pub fn cell_center(&self, ix: usize, iy: usize) -> (f64, f64) {
        let r = self.resolution;
        self.origin
            .transform_point((ix as f64 + 0.5) * r, (iy as f64 + 0.5) * r)
    }

    /// Possibly out-of-range cell coordinates containing a world point.
    pub fn world_to_cell_signed(&self, x: f64, y: f64) -> (i64, i64) {
        let (lx, ly) = self.origin.inverse_transform_point(x, y);
        (
            (lx / self.resolution).floor() as i64,
            (ly / self.resolution).floor() as i64,
        )
    }

    pub fn world_to_cell(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let (ix, iy) = self.world_to_cell_signed(x, y);
        self.checked(ix, iy)
    }

    pub fn checked(&self, ix: i64, iy: i64) -> Option<(usize, usize)> {
        if ix < 0 || iy < 0 || ix >= self.width as i64 || iy >= self.height as i64 {
            None
        } else {
            Some((ix as usize, iy as usize))
        }
    }

    /// World-plane extent covered by the grid, when it is axis aligned.
    pub fn bounds(&self) -> Bounds {
        let (x0, y0) = (self.origin.x, self.origin.y);
        Bounds::new(
            x0,
            y0,
            x0 + self.width as f64 * self.resolution,
            y0 + self.height as f64 * self.resolution,
        )
    }
}

/// Rasterized world: per-cell obstacle height in meters, zero meaning free.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    geometry: GridGeometry,
    cells: Vec<f64>,
}

impl OccupancyGrid {
    pub fn empty(geometry: GridGeometry) -> Self {
        Self {
            cells: vec![0.0; geometry.len()],
            geometry,
        }
    }

    pub fn from_cells(geometry: GridGeometry, cells: Vec<f64>) -> Result<Self, GridError> {
        if cells.len() != geometry.len() {
            return Err(GridError::InvalidGrid(format!(
                "{} cells for a {}x{} grid",
                cells.len(),
                geometry.width,
                geometry.height
            )));
        }
        if let Some(bad) = cells.iter().find(|h| !(**h >= 0.0) || !h.is_finite()) {
            return Err(GridError::InvalidGrid(format!("invalid cell height {bad}")));
        }
        Ok(Self { geometry, cells })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn height_at(&self, ix: usize, iy: usize) -> f64 {
        self.cells[self.geometry.index(ix, iy)]
    }

    /// Height under a world point; `None` outside the grid.
    pub fn height_at_world(&self, x: f64, y: f64) -> Option<f64> {
        self.geometry
            .world_to_cell(x, y)
            .map(|(ix, iy)| self.height_at(ix, iy))
    }

    pub fn set_height(&mut self, ix: usize, iy: usize, h: f64) {
        let i = self.geometry.index(ix, iy);
        self.cells[i] = h.max(0.0);
    }

    pub fn max_height(&self) -> f64 {
        self.cells.iter().copied().fold(0.0, f64::max)
    }

    /// Mask of cells satisfying a height predicate.
    pub fn mask(&self, pred: impl Fn(f64) -> bool) -> BinaryGrid {
        BinaryGrid {
            geometry: self.geometry,
            cells: self.cells.iter().map(|h| pred(*h)).collect(),
        }
    }

    /// Occupancy (height > 0) as a binary grid.
    pub fn occupied(&self) -> BinaryGrid {
        self.mask(|h| h > 0.0)
    }

    /// Copy with dynamic obstacles stamped in at their current pose.
    pub fn with_dynamics(&self, dynamics: &[DynamicObstacle]) -> OccupancyGrid {
        let mut out = self.clone();
        for d in dynamics {
            d.as_shape().stamp(&mut out);
        }
        out
    }

    /// Translated copy (the cell contents are unchanged).
    pub fn translated(&self, dx: f64, dy: f64) -> OccupancyGrid {
        let mut geometry = self.geometry;
        geometry.origin = Pose2::new(
            geometry.origin.x + dx,
            geometry.origin.y + dy,
            geometry.origin.theta(),
        );
        OccupancyGrid {
            geometry,
            cells: self.cells.clone(),
        }
    }

    pub(crate) fn cells_mut(&mut self) -> &mut [f64] {
        &mut self.cells
    }
}

/// Binary layer over a grid geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryGrid {
    geometry: GridGeometry,
    cells: Vec<bool>,
}

impl BinaryGrid {
    pub fn new(geometry: GridGeometry, cells: Vec<bool>) -> Self {
        assert_eq!(cells.len(), geometry.len(), "binary grid size mismatch");
        Self { geometry, cells }
    }

    pub fn filled(geometry: GridGeometry, value: bool) -> Self {
        Self {
            cells: vec![value; geometry.len()],
            geometry,
        }
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn get(&self, ix: usize, iy: usize) -> bool {
        self.cells[self.geometry.index(ix, iy)]
    }

    pub fn set(&mut self, ix: usize, iy: usize, v: bool) {
        let i = self.geometry.index(ix, iy);
        self.cells[i] = v;
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|c| **c).count()
    }

    /// Occupancy at a world point, with everything outside the grid occupied.
    pub fn get_world(&self, x: f64, y: f64) -> bool {
        match self.geometry.world_to_cell(x, y) {
            Some((ix, iy)) => self.get(ix, iy),
            None => true,
        }
    }

    pub fn is_subset_of(&self, other: &BinaryGrid) -> bool {
        self.cells.iter().zip(&other.cells).all(|(a, b)| !*a || *b)
    }
}
