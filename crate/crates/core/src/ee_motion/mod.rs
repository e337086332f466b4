//! End-effector motion generation: weighted A* over the obstacle map, a
//! first-order smoothing of the waypoints, height and orientation profiles,
//! spline motions, and the per-step velocity query used by the environment.

mod astar;
mod orient;
mod plan;
mod smooth;
mod spline;
mod weights;

pub use astar::{edge_cost, plan_cells, plan_path, GridPath, WeightMode, COST_SCALE};
pub use orient::orientation_fwd;
pub use plan::{next_velocity, EEMotionPlan, MotionKind, MotionQuery, MotionStep};
pub use smooth::smooth_and_lift;
pub use spline::{spline_motion, spline_waypoints, HermiteSpline};
pub use weights::{build_weights, WeightLayers, WeightMap};

#[allow(unused_imports)]
pub(crate) use weights::{footprint_mask, nearest_free_cell};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Pose2, Pose3};
use crate::gridmap::OccupancyGrid;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MotionError {
    #[error("no base path from the start pose to the goal")]
    BasePathInfeasible,
    #[error("no end-effector path to the goal")]
    NoPath,
    #[error("path endpoint lies in a blocked cell")]
    BlockedEndpoint,
    #[error("point lies outside the map")]
    OutOfMap,
    #[error("query pose is {distance:.3} m from the motion plan")]
    OffPlan { distance: f64 },
    #[error("invalid motion request: {0}")]
    Invalid(String),
}

/// Planner tuning shared by all robots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    /// Clearance kept from obstacles the end-effector cannot pass over (m).
    pub d_ee: f64,
    /// Clearance above obstacles the end-effector passes over (m).
    pub height_margin: f64,
    /// Constant `c` of the weight layer, in units of one cell of travel.
    pub weight_factor: f64,
    /// Cells this close to a tall obstacle are never entered (m).
    pub collision_margin: f64,
    pub weight_mode: WeightMode,
    /// Gain of the first-order waypoint tracker (1/s).
    pub smoothing_gain: f64,
    /// Nominal speed at which the tracker's target moves along the waypoints (m/s).
    pub smoothing_speed: f64,
    /// Arc-length spacing of plan samples (m).
    pub resample_step: f64,
    /// Arc length over which forward-facing orientations blend into the
    /// start and goal orientations (m).
    pub fwd_blend: f64,
    /// Arc-length distance of the observed intermediate goal (m).
    pub lookahead: f64,
    /// Inter-waypoint distance range of spline motions (m).
    pub spline_distance: [f64; 2],
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            d_ee: 0.15,
            height_margin: 0.05,
            weight_factor: 10.0,
            collision_margin: 0.05,
            weight_mode: WeightMode::PerCellScaled,
            smoothing_gain: 5.0,
            smoothing_speed: 0.2,
            resample_step: 0.01,
            fwd_blend: 0.3,
            lookahead: 1.5,
            spline_distance: [1.0, 3.0],
        }
    }
}

/// Robot quantities the planner needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotPlanning {
    pub footprint_radius: f64,
    /// Allowed end-effector distance from the base path; the arm's reach.
    pub d_base: f64,
    /// Obstacles taller than this cannot be passed over.
    pub max_z: f64,
    /// Goal height range used to clamp spline waypoints.
    pub height_range: [f64; 2],
}

/// Plans an obstacle-aware motion from `ee_start` to `goal` with the given
/// orientation profile. Spline motions ignore the map and `goal`, drawing
/// their waypoints from `seed` instead.
#[allow(clippy::too_many_arguments)]
pub fn build_motion(
    kind: MotionKind,
    world: &OccupancyGrid,
    base_start: &Pose2,
    ee_start: &Pose3,
    goal: &Pose3,
    robot: &RobotPlanning,
    cfg: &PlannerConfig,
    seed: u64,
) -> Result<EEMotionPlan, MotionError> {
    match kind {
        MotionKind::Spline => spline_motion(ee_start, 5, seed, robot.height_range, cfg),
        MotionKind::Slerp | MotionKind::Fwd => {
            let layers = build_weights(world, base_start, goal, robot, cfg)?;
            let start = [ee_start.position.x, ee_start.position.y];
            let target = [goal.position.x, goal.position.y];
            let (_, waypoints) = plan_path(&layers.weights, start, target, cfg.weight_mode)?;
            let plan = smooth_and_lift(
                &waypoints,
                ee_start,
                goal,
                world,
                Some(&layers.weights),
                cfg,
            )?;
            Ok(if kind == MotionKind::Fwd {
                orientation_fwd(&plan, cfg)
            } else {
                plan
            })
        }
    }
}

/// Rebuilds a map-aware motion from the current end-effector pose against the
/// current (dynamic-stamped) world. The caller keeps its previous plan on error.
pub fn replan(
    plan: &EEMotionPlan,
    world_now: &OccupancyGrid,
    base_now: &Pose2,
    ee_now: &Pose3,
    robot: &RobotPlanning,
    cfg: &PlannerConfig,
) -> Result<EEMotionPlan, MotionError> {
    let kind = match plan.kind() {
        MotionKind::Spline => {
            return Err(MotionError::Invalid(
                "spline motions are not replanned".into(),
            ))
        }
        k => k,
    };
    build_motion(
        kind,
        world_now,
        base_now,
        ee_now,
        plan.goal(),
        robot,
        cfg,
        0,
    )
}
