use serde::{Deserialize, Serialize};

use super::{Bounds, PlacedShape, ShapeKind};
use crate::geometry::Pose2;

/// Moving obstacle with constant speed, bouncing off the map boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicObstacle {
    pub shape: ShapeKind,
    pub pose: Pose2,
    /// m/s in the world frame.
    pub velocity: [f64; 2],
    pub height: f64,
}

impl DynamicObstacle {
    pub fn speed(&self) -> f64 {
        self.velocity[0].hypot(self.velocity[1])
    }

    pub fn as_shape(&self) -> PlacedShape {
        PlacedShape {
            kind: self.shape,
            center: [self.pose.x, self.pose.y],
            rotation: self.pose.theta(),
            height: self.height,
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.as_shape().contains(x, y)
    }
}

/// Euler step of every obstacle. When the center leaves `bounds` it is put
/// back on the boundary and the velocity component normal to it is negated.
pub fn advance_dynamics(
    dynamics: &[DynamicObstacle],
    dt: f64,
    bounds: &Bounds,
) -> Vec<DynamicObstacle> {
    dynamics
        .iter()
        .map(|d| {
            let mut next = *d;
            let mut x = d.pose.x + d.velocity[0] * dt;
            let mut y = d.pose.y + d.velocity[1] * dt;
            if x <= bounds.min_x && next.velocity[0] < 0.0
                || x >= bounds.max_x && next.velocity[0] > 0.0
            {
                next.velocity[0] = -next.velocity[0];
                x = x.clamp(bounds.min_x, bounds.max_x);
            }
            if y <= bounds.min_y && next.velocity[1] < 0.0
                || y >= bounds.max_y && next.velocity[1] > 0.0
            {
                next.velocity[1] = -next.velocity[1];
                y = y.clamp(bounds.min_y, bounds.max_y);
            }
            next.pose = Pose2::new(x, y, d.pose.theta());
            next
        })
        .collect()
}
