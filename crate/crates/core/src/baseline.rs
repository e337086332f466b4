//! Scripted greedy policy. Each step it solves one damped least-squares
//! problem over the arm joints and the base for the end-effector twist that
//! follows the plan, with a secondary preference that drives the base so the
//! hand stays at a comfortable offset and the base faces the intermediate
//! goal. The base (and torso) part of the solution is the action.

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::env::{Action, Observation, Policy};
use crate::geometry::{rotation_vector, wrap_angle, Pose2, Pose3};
use crate::robot::{forward_kinematics, jacobian, Drive, JointKind, RobotModel};

const DAMPING: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GreedyConfig {
    /// Preferred base velocity per meter of hand offset from rest (1/s).
    pub linear_gain: f64,
    /// Preferred base rate per radian of heading error to the intermediate goal (1/s).
    pub angular_gain: f64,
    /// Largest share of the base speed the preferred turn may sweep at the hand.
    pub turn_share: f64,
    /// Differential drives stop the hand and turn beyond this heading error (rad).
    pub turn_in_place: f64,
    /// Correction rate of the achieved hand pose toward the desired one (1/s).
    pub tracking_gain: f64,
    /// Preferred joint rate toward mid-range per radian or meter of offset (1/s).
    pub centering_gain: f64,
    /// Hand speed starts to drop at this offset from rest (m) ...
    pub slow_error: f64,
    /// ... and reaches zero at this one (m).
    pub stop_error: f64,
    /// Hand speed starts to drop at this tracking error (m) ...
    pub slow_deviation: f64,
    /// ... and reaches zero at this one (m).
    pub stop_deviation: f64,
    /// Occupied coarse cells closer than this to the footprint slow the hand (m).
    pub obstacle_clearance: f64,
    /// Hand speed factor near obstacles.
    pub obstacle_slowdown: f64,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        Self {
            linear_gain: 1.0,
            angular_gain: 0.5,
            turn_share: 0.3,
            turn_in_place: 0.8,
            tracking_gain: 3.0,
            centering_gain: 0.5,
            slow_error: 0.2,
            stop_error: 0.5,
            slow_deviation: 0.02,
            stop_deviation: 0.07,
            obstacle_clearance: 0.2,
            obstacle_slowdown: 0.5,
        }
    }
}

impl GreedyConfig {
    pub fn validate(&self) -> Result<(), String> {
        let gains = [
            self.linear_gain,
            self.angular_gain,
            self.tracking_gain,
            self.turn_share,
        ];
        if gains.iter().any(|g| !(*g > 0.0)) {
            return Err("greedy gains must be positive".into());
        }
        if !(self.stop_error > self.slow_error && self.slow_error >= 0.0) {
            return Err("greedy needs 0 <= slow_error < stop_error".into());
        }
        if !(self.stop_deviation > self.slow_deviation && self.slow_deviation >= 0.0) {
            return Err("greedy needs 0 <= slow_deviation < stop_deviation".into());
        }
        if !(self.centering_gain >= 0.0) {
            return Err("greedy centering_gain must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.obstacle_slowdown) {
            return Err("greedy obstacle_slowdown must be in [0, 1]".into());
        }
        Ok(())
    }
}

fn cap_norm(v: Vector3<f64>, cap: f64) -> Vector3<f64> {
    let n = v.norm();
    if n > cap {
        v * (cap / n)
    } else {
        v
    }
}

/// 1 below `slow`, 0 above `stop`, linear in between.
fn ramp(x: f64, slow: f64, stop: f64) -> f64 {
    1.0 - ((x - slow) / (stop - slow)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone)]
pub struct GreedyPolicy {
    cfg: GreedyConfig,
    robot: RobotModel,
    /// Mid-range joint values (zero for unbounded joints).
    mid: Vec<f64>,
    /// Hand position at `mid`, base frame; the base keeps the desired hand
    /// position near its horizontal part.
    rest: Vector3<f64>,
    v_ee_max: f64,
}

impl GreedyPolicy {
    pub fn new(robot: &RobotModel, v_ee_max: f64, cfg: GreedyConfig) -> GreedyPolicy {
        let mid = robot.mid_joints();
        let rest = forward_kinematics(robot, &Pose2::identity(), &mid)
            .expect("mid-range joints match the model")
            .position;
        GreedyPolicy {
            cfg,
            robot: robot.clone(),
            mid,
            rest,
            v_ee_max,
        }
    }

    fn obstacle_near(&self, obs: &Observation) -> bool {
        let limit = self.robot.footprint_radius + self.cfg.obstacle_clearance;
        let map = &obs.maps.coarse;
        (0..map.side).any(|iy| {
            (0..map.side).any(|ix| {
                let (x, y) = map.cell_center(ix, iy);
                map.get(ix, iy) && x.hypot(y) < limit
            })
        })
    }

    /// Velocity scale that fades a joint out as it moves into a nearby limit.
    fn limit_scale(&self, i: usize, q: f64, dq: f64) -> f64 {
        let j = &self.robot.joints[i];
        if !j.is_bounded() || dq == 0.0 {
            return 1.0;
        }
        let room = if dq > 0.0 {
            j.limits[1] - q
        } else {
            q - j.limits[0]
        };
        let band = match j.kind {
            JointKind::Prismatic => 0.05,
            _ => 0.3,
        };
        (room / band).clamp(0.02, 1.0)
    }

    /// Greedy action for one observation; always inside the action box.
    pub fn act(&self, obs: &Observation) -> Action {
        let c = &self.cfg;
        let robot = &self.robot;
        let limits = &robot.constraints;
        let n = robot.dof();
        let Ok(hand) = forward_kinematics(robot, &Pose2::identity(), &obs.joints) else {
            return Action::default();
        };
        let Ok(jac) = jacobian(robot, &Pose2::identity(), &obs.joints) else {
            return Action::default();
        };
        let desired: &Pose3 = &obs.desired_pose;
        let p = desired.position;
        let g = obs.intermediate_goal.position;

        // Hand speed along the plan.
        let offset = Vector3::new(p.x - self.rest.x, p.y - self.rest.y, 0.0);
        let deviation = (p - hand.position).norm();
        let mut speed = ramp(offset.norm(), c.slow_error, c.stop_error)
            * ramp(deviation, c.slow_deviation, c.stop_deviation);
        if self.obstacle_near(obs) {
            speed *= c.obstacle_slowdown;
        }

        // Preferred base motion: carry the hand's feed-forward, close the
        // offset from rest and turn toward the intermediate goal.
        let to_goal = Vector3::new(g.x - self.rest.x, g.y - self.rest.y, 0.0);
        let heading = if to_goal.norm() > 1e-6 {
            wrap_angle(to_goal.y.atan2(to_goal.x))
        } else {
            0.0
        };
        let fade = (to_goal.norm() / 0.5).min(1.0);
        let lever = p.x.hypot(p.y).max(0.1);
        let cap = (c.turn_share * limits.max_velocity / lever).min(limits.max_rotation);
        let omega_pref = (c.angular_gain * heading * fade).clamp(-cap, cap);
        let differential = robot.drive == Drive::Differential;
        if differential && heading.abs() * fade > c.turn_in_place {
            speed = 0.0;
        }
        let feedforward = obs.linear_velocity() * speed;
        let v_pref = cap_norm(offset * c.linear_gain, limits.max_velocity) + feedforward;

        // Whole-body task: follow the plan and correct the tracking error.
        // The correction is capped at what the base preference plus a
        // tracking margin can deliver, so a far-off desired pose is reached by
        // driving instead of a saturated whole-body sprint.
        let cap_p = limits.max_velocity + c.tracking_gain * c.stop_deviation;
        let cap_r = c.tracking_gain * c.stop_deviation.sqrt();
        let fix_p = cap_norm((p - hand.position) * c.tracking_gain, cap_p);
        let fix_r = cap_norm(
            rotation_vector(&(desired.orientation * hand.orientation.inverse())) * c.tracking_gain,
            cap_r,
        );
        let mut twist = DVector::zeros(6);
        for d in 0..3 {
            twist[d] = obs.ee_velocity[d] * speed + fix_p[d];
            twist[3 + d] = obs.ee_velocity[3 + d] * speed + fix_r[d];
        }

        // Columns: arm joints, then base vx, (vy,) omega in the base frame.
        let base_cols = if differential { 2 } else { 3 };
        let m = n + base_cols;
        let mut full = DMatrix::zeros(6, m);
        full.view_mut((0, 0), (6, n)).copy_from(&jac);
        let h = hand.position;
        full[(0, n)] = 1.0;
        if !differential {
            full[(1, n + 1)] = 1.0;
        }
        let w = n + base_cols - 1;
        full[(0, w)] = -h.y;
        full[(1, w)] = h.x;
        full[(5, w)] = 1.0;

        let mut base_w = DVector::zeros(m);
        for (i, j) in robot.joints.iter().enumerate() {
            base_w[i] = j.max_velocity;
        }
        base_w[n] = limits.max_velocity;
        if !differential {
            base_w[n + 1] = limits.max_velocity;
        }
        base_w[w] = limits.max_rotation;

        let mut z = DVector::zeros(m);
        for (i, j) in robot.joints.iter().enumerate() {
            if j.is_bounded() {
                z[i] = c.centering_gain * (self.mid[i] - obs.joints[i]);
            }
        }
        z[n] = v_pref.x;
        if !differential {
            z[n + 1] = v_pref.y;
        }
        z[w] = omega_pref;

        // Solve once with full weights, then again with joints that head
        // into a nearby limit slowed down.
        let Some(first) = weighted_solve(&full, &base_w, &twist, &z) else {
            return Action::default();
        };
        let mut winv = base_w.clone();
        for i in 0..n {
            winv[i] *= self.limit_scale(i, obs.joints[i], first[i]);
        }
        let Some(mut dq) = weighted_solve(&full, &winv, &twist, &z) else {
            return Action::default();
        };
        // Keep every joint within its speed limit by slowing the whole body.
        let over = (0..n).fold(1.0f64, |m, i| {
            m.max(dq[i].abs() / robot.joints[i].max_velocity)
        });
        dq /= over;

        let (vx, vy) = (dq[n], if differential { 0.0 } else { dq[n + 1] });
        let torso = robot
            .agent_torso()
            .map(|i| (dq[i] / robot.joints[i].max_velocity).clamp(-1.0, 1.0));
        Action {
            linear: [
                (vx / limits.max_velocity).clamp(-1.0, 1.0),
                (vy / limits.max_velocity).clamp(-1.0, 1.0),
            ],
            angular: (dq[w] / limits.max_rotation).clamp(-1.0, 1.0),
            torso,
            a_ee: (self.v_ee_max * speed).clamp(0.0, self.v_ee_max),
        }
    }
}

/// `z + W J^T (J W J^T + damping)^-1 (t - J z)`: the preference `z`
/// modified only as much as the task `t` requires, `W` the diagonal `winv`.
fn weighted_solve(
    jac: &DMatrix<f64>,
    winv: &DVector<f64>,
    twist: &DVector<f64>,
    z: &DVector<f64>,
) -> Option<DVector<f64>> {
    let mut jw = jac.clone();
    for k in 0..jac.ncols() {
        jw.column_mut(k).scale_mut(winv[k]);
    }
    let mut a = &jw * jac.transpose();
    for d in 0..a.nrows() {
        a[(d, d)] += DAMPING;
    }
    let chol = a.cholesky()?;
    Some(jw.transpose() * chol.solve(&(twist - jac * z)) + z)
}

impl Policy for GreedyPolicy {
    fn act(&mut self, obs: &Observation) -> Action {
        GreedyPolicy::act(self, obs)
    }
}
