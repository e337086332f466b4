use serde::{Deserialize, Serialize};

use super::{Bounds, GridError, GridGeometry, OccupancyGrid};

/// Slack on the containment tests so cell centers lying exactly on a shape
/// boundary count as covered.
const CONTAINMENT_SLACK: f64 = 1e-9;

/// Elementary obstacle footprint, expressed in its own frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ShapeKind {
    /// Full side lengths along the shape's local x and y axes.
    Rectangle { width: f64, breadth: f64 },
    /// Semi-axes along the shape's local x and y axes.
    Ellipse { semi_x: f64, semi_y: f64 },
}

impl ShapeKind {
    fn validate(&self) -> Result<(), GridError> {
        let (a, b) = match *self {
            ShapeKind::Rectangle { width, breadth } => (width, breadth),
            ShapeKind::Ellipse { semi_x, semi_y } => (semi_x, semi_y),
        };
        if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(GridError::InvalidShape(format!(
                "non-positive extent in {self:?}"
            )));
        }
        Ok(())
    }

    /// Radius of the circle around the local origin enclosing the shape.
    pub fn circumradius(&self) -> f64 {
        match *self {
            ShapeKind::Rectangle { width, breadth } => 0.5 * width.hypot(breadth),
            ShapeKind::Ellipse { semi_x, semi_y } => semi_x.max(semi_y),
        }
    }

    fn contains_local(&self, lx: f64, ly: f64) -> bool {
        match *self {
            ShapeKind::Rectangle { width, breadth } => {
                lx.abs() <= 0.5 * width + CONTAINMENT_SLACK
                    && ly.abs() <= 0.5 * breadth + CONTAINMENT_SLACK
            }
            ShapeKind::Ellipse { semi_x, semi_y } => {
                let u = lx / semi_x;
                let v = ly / semi_y;
                u * u + v * v <= 1.0 + CONTAINMENT_SLACK
            }
        }
    }
}

/// A shape placed in the world with an obstacle height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacedShape {
    #[serde(flatten)]
    pub kind: ShapeKind,
    pub center: [f64; 2],
    /// Rotation of the shape's local x-axis, radians.
    pub rotation: f64,
    pub height: f64,
}

impl PlacedShape {
    pub fn rectangle(
        center: [f64; 2],
        width: f64,
        breadth: f64,
        rotation: f64,
        height: f64,
    ) -> Self {
        Self {
            kind: ShapeKind::Rectangle { width, breadth },
            center,
            rotation,
            height,
        }
    }

    pub fn ellipse(center: [f64; 2], semi_x: f64, semi_y: f64, rotation: f64, height: f64) -> Self {
        Self {
            kind: ShapeKind::Ellipse { semi_x, semi_y },
            center,
            rotation,
            height,
        }
    }

    pub fn validate(&self) -> Result<(), GridError> {
        self.kind.validate()?;
        if !(self.height > 0.0) || !self.height.is_finite() {
            return Err(GridError::InvalidShape(format!(
                "non-positive height {}",
                self.height
            )));
        }
        Ok(())
    }

    /// Whether a world point lies inside (boundary inclusive).
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let dx = x - self.center[0];
        let dy = y - self.center[1];
        let (s, c) = self.rotation.sin_cos();
        self.kind.contains_local(c * dx + s * dy, -s * dx + c * dy)
    }

    /// Raises every covered cell to at least this shape's height.
    pub(crate) fn stamp(&self, grid: &mut OccupancyGrid) {
        let geom = *grid.geometry();
        let r = self.kind.circumradius() + geom.resolution;
        let Some((x0, x1, y0, y1)) = cell_window(&geom, self.center, r) else {
            return;
        };
        let cells = grid.cells_mut();
        for iy in y0..=y1 {
            for ix in x0..=x1 {
                let (cx, cy) = geom.cell_center(ix, iy);
                if self.contains(cx, cy) {
                    let i = geom.index(ix, iy);
                    if cells[i] < self.height {
                        cells[i] = self.height;
                    }
                }
            }
        }
    }
}

/// In-bounds cell index window covering a disc, or `None` when it misses the grid.
pub(crate) fn cell_window(
    geom: &GridGeometry,
    center: [f64; 2],
    radius: f64,
) -> Option<(usize, usize, usize, usize)> {
    // Corners of the disc's bounding box mapped into the grid frame; with a
    // rotated origin the box is enlarged to stay conservative.
    let (lx, ly) = geom.origin.inverse_transform_point(center[0], center[1]);
    let rr = radius * std::f64::consts::SQRT_2;
    let res = geom.resolution;
    let x0 = ((lx - rr) / res).floor() as i64;
    let x1 = ((lx + rr) / res).floor() as i64;
    let y0 = ((ly - rr) / res).floor() as i64;
    let y1 = ((ly + rr) / res).floor() as i64;
    if x1 < 0 || y1 < 0 || x0 >= geom.width as i64 || y0 >= geom.height as i64 {
        return None;
    }
    Some((
        x0.max(0) as usize,
        x1.min(geom.width as i64 - 1) as usize,
        y0.max(0) as usize,
        y1.min(geom.height as i64 - 1) as usize,
    ))
}

/// Rasterizes shapes onto a grid covering `bounds`. Each cell takes the
/// maximum height among shapes containing its center; parts of shapes outside
/// the bounds are clipped.
pub fn rasterize(
    shapes: &[PlacedShape],
    resolution: f64,
    bounds: &Bounds,
) -> Result<OccupancyGrid, GridError> {
    let geom = GridGeometry::covering(bounds, resolution)?;
    rasterize_on(shapes, geom)
}

pub(crate) fn rasterize_on(
    shapes: &[PlacedShape],
    geom: GridGeometry,
) -> Result<OccupancyGrid, GridError> {
    for s in shapes {
        s.validate()?;
    }
    let mut grid = OccupancyGrid::empty(geom);
    for s in shapes {
        s.stamp(&mut grid);
    }
    Ok(grid)
}
