use nalgebra::UnitQuaternion;

use super::{EEMotionPlan, MotionKind, PlannerConfig};
use crate::geometry::{slerp, yaw_quaternion};

/// Half-width of the finite-difference window for the path tangent (m).
const TANGENT_HALF_WINDOW: f64 = 0.05;

/// Re-orients a plan to face its direction of travel.
///
/// Away from the ends the orientation is a pure yaw along the horizontal
/// tangent. Within `fwd_blend` of the start it blends from the start
/// orientation, and within `fwd_blend` of the goal it slerps into the goal
/// orientation, so the first and last poses are unchanged.
pub fn orientation_fwd(plan: &EEMotionPlan, cfg: &PlannerConfig) -> EEMotionPlan {
    let poses = plan.poses();
    let arc = plan.arc_lengths();
    let total = plan.length();
    if poses.len() < 2 || total <= 0.0 {
        return plan.with_orientations(|i, _| poses[i].orientation, MotionKind::Fwd);
    }
    let blend = cfg.fwd_blend.min(total / 2.0).max(1e-9);

    let facing: Vec<UnitQuaternion<f64>> = (0..poses.len())
        .map(|i| {
            let s = arc[i];
            let a = plan.pose_at(s - TANGENT_HALF_WINDOW).position;
            let b = plan.pose_at(s + TANGENT_HALF_WINDOW).position;
            let d = b - a;
            yaw_quaternion(d.y.atan2(d.x))
        })
        .collect();
    let blend_start = total - blend;
    let facing_at_blend = {
        let d = plan.pose_at(blend_start + TANGENT_HALF_WINDOW).position
            - plan.pose_at(blend_start - TANGENT_HALF_WINDOW).position;
        yaw_quaternion(d.y.atan2(d.x))
    };
    let start_q = plan.start().orientation;
    let goal_q = plan.goal().orientation;
    let last = poses.len() - 1;

    plan.with_orientations(
        |i, s| {
            if i == 0 {
                start_q
            } else if i == last {
                goal_q
            } else if s >= blend_start {
                slerp(&facing_at_blend, &goal_q, (s - blend_start) / blend)
            } else if s < blend {
                slerp(&start_q, &facing[i], s / blend)
            } else {
                facing[i]
            }
        },
        MotionKind::Fwd,
    )
}
