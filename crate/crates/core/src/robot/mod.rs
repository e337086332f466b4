//! Parametric mobile manipulators: base drive, torso and a serial arm, with
//! forward kinematics, base integration, footprint collision checks and a
//! velocity-limited inverse kinematics solver.

mod base;
mod ik;
mod kinematics;

pub use base::{check_base_collision, integrate_base, VelocityCommand};
pub use ik::{
    solve_ik, solve_ik_seeded, IkResult, IK_DAMPING, IK_MAX_ITERATIONS, IK_POSITION_TOLERANCE,
    IK_ROTATION_TOLERANCE,
};
pub use kinematics::{forward_kinematics, jacobian};

use nalgebra::{Isometry3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ee_motion::{PlannerConfig, RobotPlanning};
use crate::geometry::Pose3;

/// Joint values in chain order (rad or m).
pub type JointState = Vec<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RobotError {
    #[error("robot config: {0}")]
    Config(String),
    #[error("expected {expected} joint values, got {got}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Drive {
    Omni,
    Differential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointKind {
    Revolute,
    Prismatic,
    Continuous,
}

/// One joint of the chain. `xyz`/`rpy` place the joint frame in its parent
/// link; the joint then rotates about or slides along `axis`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    pub name: String,
    pub kind: JointKind,
    #[serde(default)]
    pub xyz: [f64; 3],
    #[serde(default)]
    pub rpy: [f64; 3],
    pub axis: [f64; 3],
    /// Position limits; ignored for continuous joints.
    #[serde(default)]
    pub limits: [f64; 2],
    pub max_velocity: f64,
    /// Marks the torso lift joint.
    #[serde(default)]
    pub torso: bool,
}

impl Joint {
    pub fn origin(&self) -> Isometry3<f64> {
        frame(self.xyz, self.rpy)
    }

    pub fn axis(&self) -> Vector3<f64> {
        Vector3::from(self.axis).normalize()
    }

    pub fn is_bounded(&self) -> bool {
        self.kind != JointKind::Continuous
    }

    /// Motion of the joint at value `q` relative to its origin frame.
    pub fn motion(&self, q: f64) -> Isometry3<f64> {
        match self.kind {
            JointKind::Prismatic => Isometry3::from_parts(
                Translation3::from(self.axis() * q),
                UnitQuaternion::identity(),
            ),
            JointKind::Revolute | JointKind::Continuous => Isometry3::from_parts(
                Translation3::identity(),
                UnitQuaternion::from_scaled_axis(self.axis() * q),
            ),
        }
    }

    pub fn clamp(&self, q: f64) -> f64 {
        if self.is_bounded() {
            q.clamp(self.limits[0], self.limits[1])
        } else {
            q
        }
    }
}

/// Fixed transform from translation and roll-pitch-yaw.
pub fn frame(xyz: [f64; 3], rpy: [f64; 3]) -> Isometry3<f64> {
    Isometry3::from_parts(
        Translation3::new(xyz[0], xyz[1], xyz[2]),
        UnitQuaternion::from_euler_angles(rpy[0], rpy[1], rpy[2]),
    )
}

/// Velocity and pose limits of a platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraints {
    /// Base linear speed limit (m/s).
    pub max_velocity: f64,
    /// Base angular speed limit (rad/s).
    pub max_rotation: f64,
    /// End-effector motion rotation limit (rad/s); recorded, not enforced.
    pub ee_max_rotation: f64,
    /// End-effector goal heights (m).
    pub goal_height: [f64; 2],
    /// Goal heights away from the workspace edges (m).
    pub restricted_height: [f64; 2],
}

/// Pose of a fixed frame, used for the home end-effector pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FramePose {
    pub xyz: [f64; 3],
    #[serde(default)]
    pub rpy: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotModel {
    pub name: String,
    pub drive: Drive,
    /// Radius of the base collision disc (m).
    pub footprint_radius: f64,
    pub base_diagonal: f64,
    /// Reach of the arm (m); bounds how far the end-effector may stray from the base path.
    pub arm_reach: f64,
    /// Whether the torso joint is driven by the agent rather than the IK solver.
    pub torso_action: bool,
    pub ee_offset: FramePose,
    /// End-effector pose at zero joints with the base at the origin.
    pub home_ee: FramePose,
    pub constraints: Constraints,
    #[serde(rename = "joint")]
    pub joints: Vec<Joint>,
}

const PR2_TOML: &str = include_str!("../../configs/pr2.toml");
const HSR_TOML: &str = include_str!("../../configs/hsr.toml");
const TIAGO_TOML: &str = include_str!("../../configs/tiago.toml");

impl RobotModel {
    pub fn from_toml(text: &str) -> Result<Self, RobotError> {
        let model: RobotModel =
            toml::from_str(text).map_err(|e| RobotError::Config(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("robot model serializes")
    }

    /// Built-in model by name: `pr2`, `hsr` or `tiago`.
    pub fn builtin(name: &str) -> Result<Self, RobotError> {
        let text = match name {
            "pr2" | "pr2-like" => PR2_TOML,
            "hsr" | "hsr-like" => HSR_TOML,
            "tiago" | "tiago-like" => TIAGO_TOML,
            other => {
                return Err(RobotError::Config(format!(
                    "unknown built-in robot {other:?}"
                )))
            }
        };
        Self::from_toml(text)
    }

    pub fn pr2() -> Self {
        Self::builtin("pr2").expect("bundled config")
    }

    pub fn hsr() -> Self {
        Self::builtin("hsr").expect("bundled config")
    }

    pub fn tiago() -> Self {
        Self::builtin("tiago").expect("bundled config")
    }

    pub fn validate(&self) -> Result<(), RobotError> {
        let err = |m: String| Err(RobotError::Config(m));
        if !(self.footprint_radius > 0.0) || !(self.arm_reach > 0.0) {
            return err("footprint radius and arm reach must be positive".into());
        }
        if self.joints.is_empty() {
            return err("robot has no joints".into());
        }
        for j in &self.joints {
            if !(j.max_velocity > 0.0) {
                return err(format!("joint {}: max velocity must be positive", j.name));
            }
            if j.is_bounded() && !(j.limits[0] < j.limits[1]) {
                return err(format!("joint {}: limits must satisfy min < max", j.name));
            }
            if Vector3::from(j.axis).norm() < 1e-9 {
                return err(format!("joint {}: zero axis", j.name));
            }
        }
        if self.joints.iter().filter(|j| j.torso).count() > 1 {
            return err("more than one torso joint".into());
        }
        if self.torso_action && self.torso_index().is_none() {
            return err("torso_action set but no torso joint".into());
        }
        let c = &self.constraints;
        if !(c.max_velocity > 0.0 && c.max_rotation > 0.0) {
            return err("velocity limits must be positive".into());
        }
        if !(c.goal_height[0] < c.goal_height[1])
            || !(c.restricted_height[0] < c.restricted_height[1])
        {
            return err("height ranges must satisfy min < max".into());
        }
        Ok(())
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn torso_index(&self) -> Option<usize> {
        self.joints.iter().position(|j| j.torso)
    }

    /// Torso joint driven by the agent, if any.
    pub fn agent_torso(&self) -> Option<usize> {
        if self.torso_action {
            self.torso_index()
        } else {
            None
        }
    }

    pub fn max_velocities(&self) -> Vec<f64> {
        self.joints.iter().map(|j| j.max_velocity).collect()
    }

    /// Middle of every joint range; zero for continuous joints.
    pub fn mid_joints(&self) -> Vec<f64> {
        self.joints
            .iter()
            .map(|j| {
                if j.is_bounded() {
                    0.5 * (j.limits[0] + j.limits[1])
                } else {
                    0.0
                }
            })
            .collect()
    }

    pub fn home_pose(&self) -> Pose3 {
        Pose3::from_isometry(&frame(self.home_ee.xyz, self.home_ee.rpy))
    }

    pub fn ee_offset(&self) -> Isometry3<f64> {
        frame(self.ee_offset.xyz, self.ee_offset.rpy)
    }

    pub fn check_dimension(&self, joints: &[f64]) -> Result<(), RobotError> {
        if joints.len() != self.dof() {
            return Err(RobotError::Dimension {
                expected: self.dof(),
                got: joints.len(),
            });
        }
        Ok(())
    }

    pub fn clamp_joints(&self, joints: &mut [f64]) {
        for (q, j) in joints.iter_mut().zip(&self.joints) {
            *q = j.clamp(*q);
        }
    }

    /// Base commands available to the agent: two linear components for an
    /// omnidirectional base, one for a differential drive.
    pub fn linear_dims(&self) -> usize {
        match self.drive {
            Drive::Omni => 2,
            Drive::Differential => 1,
        }
    }

    /// Planner inputs: the base corridor width is the arm reach and tall
    /// obstacles start just below the highest reachable goal.
    pub fn planning(&self, cfg: &PlannerConfig) -> RobotPlanning {
        RobotPlanning {
            footprint_radius: self.footprint_radius,
            d_base: self.arm_reach,
            max_z: self.constraints.goal_height[1] - cfg.height_margin,
            height_range: self.constraints.goal_height,
        }
    }
}
