use serde::{Deserialize, Serialize};

use super::shapes::rasterize_on;
use super::{Bounds, DynamicObstacle, GridError, GridGeometry, OccupancyGrid, PlacedShape};

/// Text description of a world: the raster is derived, never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldFile {
    pub bounds: Bounds,
    pub resolution: f64,
    #[serde(default, rename = "shape")]
    pub shapes: Vec<PlacedShape>,
    #[serde(default, rename = "dynamic")]
    pub dynamics: Vec<DynamicObstacle>,
}

impl WorldFile {
    pub fn geometry(&self) -> Result<GridGeometry, GridError> {
        GridGeometry::covering(&self.bounds, self.resolution)
    }

    pub fn rasterize(&self) -> Result<OccupancyGrid, GridError> {
        rasterize_on(&self.shapes, self.geometry()?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("world file is always representable")
    }

    pub fn from_toml(text: &str) -> Result<Self, GridError> {
        let w: WorldFile = toml::from_str(text).map_err(|e| GridError::Parse(e.to_string()))?;
        w.geometry()?;
        for s in &w.shapes {
            s.validate()?;
        }
        Ok(w)
    }

    /// Same world shifted by `(dx, dy)`.
    pub fn translated(&self, dx: f64, dy: f64) -> WorldFile {
        let mut out = self.clone();
        out.bounds = Bounds::new(
            self.bounds.min_x + dx,
            self.bounds.min_y + dy,
            self.bounds.max_x + dx,
            self.bounds.max_y + dy,
        );
        for s in &mut out.shapes {
            s.center = [s.center[0] + dx, s.center[1] + dy];
        }
        for d in &mut out.dynamics {
            d.pose = crate::geometry::Pose2::new(d.pose.x + dx, d.pose.y + dy, d.pose.theta());
        }
        out
    }
}
