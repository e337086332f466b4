use serde::{Deserialize, Serialize};

use super::{Drive, RobotModel};
use crate::geometry::Pose2;
use crate::gridmap::{DynamicObstacle, OccupancyGrid};

/// Base and torso velocities in the base frame.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct VelocityCommand {
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
    pub torso: Option<f64>,
}

impl VelocityCommand {
    /// Applies the drive constraint and the platform limits: the linear
    /// velocity norm and the angular rate are scaled down, never rejected.
    pub fn clamped(&self, model: &RobotModel) -> VelocityCommand {
        let c = &model.constraints;
        let (mut vx, mut vy) = (finite(self.vx), finite(self.vy));
        if model.drive == Drive::Differential {
            vy = 0.0;
        }
        let norm = vx.hypot(vy);
        if norm > c.max_velocity {
            vx *= c.max_velocity / norm;
            vy *= c.max_velocity / norm;
        }
        let torso = match (self.torso, model.torso_index()) {
            (Some(v), Some(i)) => {
                let vmax = model.joints[i].max_velocity;
                Some(finite(v).clamp(-vmax, vmax))
            }
            _ => None,
        };
        VelocityCommand {
            vx,
            vy,
            omega: finite(self.omega).clamp(-c.max_rotation, c.max_rotation),
            torso,
        }
    }
}

fn finite(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

/// Integrates a constant body-frame twist over `dt` exactly (SE(2)
/// exponential) after clamping the command.
pub fn integrate_base(model: &RobotModel, base: &Pose2, cmd: &VelocityCommand, dt: f64) -> Pose2 {
    let c = cmd.clamped(model);
    let dtheta = c.omega * dt;
    let (dx, dy) = if dtheta.abs() < 1e-9 {
        // Second-order series of the exponential near zero rotation.
        let (s, k) = (1.0 - dtheta * dtheta / 6.0, dtheta / 2.0);
        ((c.vx * s - c.vy * k) * dt, (c.vx * k + c.vy * s) * dt)
    } else {
        let s = dtheta.sin() / c.omega;
        let k = (1.0 - dtheta.cos()) / c.omega;
        (c.vx * s - c.vy * k, c.vx * k + c.vy * s)
    };
    let (sin, cos) = base.theta().sin_cos();
    Pose2::new(
        base.x + cos * dx - sin * dy,
        base.y + sin * dx + cos * dy,
        base.theta() + dtheta,
    )
}

/// True iff an occupied cell (static height > 0, or a cell whose center a
/// dynamic obstacle covers) intersects the footprint disc. Cells are squares;
/// off-map space is free.
pub fn check_base_collision(
    model: &RobotModel,
    base: &Pose2,
    world: &OccupancyGrid,
    dynamics: &[DynamicObstacle],
) -> bool {
    let g = world.geometry();
    let r = model.footprint_radius;
    let half = g.resolution / 2.0;
    let (lo_x, lo_y) = g.world_to_cell_signed(base.x - r, base.y - r);
    let (hi_x, hi_y) = g.world_to_cell_signed(base.x + r, base.y + r);
    let nearby: Vec<&DynamicObstacle> = dynamics
        .iter()
        .filter(|d| {
            (d.pose.x - base.x).hypot(d.pose.y - base.y)
                <= r + d.shape.circumradius() + g.resolution
        })
        .collect();
    for iy in lo_y..=hi_y {
        for ix in lo_x..=hi_x {
            let Some((ux, uy)) = g.checked(ix, iy) else {
                continue;
            };
            let (cx, cy) = g.cell_center(ux, uy);
            let occupied =
                world.height_at(ux, uy) > 0.0 || nearby.iter().any(|d| d.contains(cx, cy));
            if !occupied {
                continue;
            }
            // Distance from the disc center to the cell square.
            let dx = ((base.x - cx).abs() - half).max(0.0);
            let dy = ((base.y - cy).abs() - half).max(0.0);
            if dx * dx + dy * dy <= r * r {
                return true;
            }
        }
    }
    false
}
