use serde::{Deserialize, Serialize};

use super::EnvError;
use crate::robot::{Drive, RobotModel, VelocityCommand};

/// Agent action. Base and torso components are normalized to `[-1, 1]`;
/// `a_ee` is the end-effector speed in m/s, in `[0, v_ee_max]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Action {
    /// Forward and lateral base velocity; the lateral entry is ignored for a
    /// differential drive.
    pub linear: [f64; 2],
    pub angular: f64,
    /// Torso velocity; ignored for robots without an agent-driven torso.
    pub torso: Option<f64>,
    pub a_ee: f64,
}

fn unit(v: f64) -> f64 {
    if v.is_finite() {
        v.clamp(-1.0, 1.0)
    } else {
        0.0
    }
}

impl Action {
    /// Number of flat components for `robot`: linear (1 or 2), angular,
    /// torso (if agent-driven) and `a_ee`.
    pub fn flat_len(robot: &RobotModel) -> usize {
        robot.linear_dims() + 1 + usize::from(robot.agent_torso().is_some()) + 1
    }

    /// Names of the flat components, in order.
    pub fn flat_names(robot: &RobotModel) -> Vec<&'static str> {
        let mut names = vec!["linear_x"];
        if robot.drive == Drive::Omni {
            names.push("linear_y");
        }
        names.push("angular");
        if robot.agent_torso().is_some() {
            names.push("torso");
        }
        names.push("a_ee");
        names
    }

    /// Every component inside its box; components the robot lacks are dropped.
    pub fn clamped(&self, robot: &RobotModel, v_ee_max: f64) -> Action {
        let lateral = if robot.drive == Drive::Omni {
            unit(self.linear[1])
        } else {
            0.0
        };
        Action {
            linear: [unit(self.linear[0]), lateral],
            angular: unit(self.angular),
            torso: robot.agent_torso().map(|_| unit(self.torso.unwrap_or(0.0))),
            a_ee: if self.a_ee.is_finite() {
                self.a_ee.clamp(0.0, v_ee_max)
            } else {
                0.0
            },
        }
    }

    pub fn to_flat(&self, robot: &RobotModel) -> Vec<f64> {
        let mut out = vec![self.linear[0]];
        if robot.drive == Drive::Omni {
            out.push(self.linear[1]);
        }
        out.push(self.angular);
        if robot.agent_torso().is_some() {
            out.push(self.torso.unwrap_or(0.0));
        }
        out.push(self.a_ee);
        out
    }

    /// Parses a flat action; the length must match [`Action::flat_len`].
    pub fn from_flat(robot: &RobotModel, flat: &[f64]) -> Result<Action, EnvError> {
        let expected = Self::flat_len(robot);
        if flat.len() != expected {
            return Err(EnvError::ActionLength {
                expected,
                got: flat.len(),
            });
        }
        let mut it = flat.iter().copied();
        let mut next = || it.next().expect("length checked");
        let x = next();
        let y = if robot.drive == Drive::Omni {
            next()
        } else {
            0.0
        };
        let angular = next();
        let torso = robot.agent_torso().map(|_| next());
        Ok(Action {
            linear: [x, y],
            angular,
            torso,
            a_ee: next(),
        })
    }

    /// Physical base and torso velocities of a clamped action.
    pub fn velocity_command(&self, robot: &RobotModel) -> VelocityCommand {
        let c = &robot.constraints;
        VelocityCommand {
            vx: self.linear[0] * c.max_velocity,
            vy: self.linear[1] * c.max_velocity,
            omega: self.angular * c.max_rotation,
            torso: match (self.torso, robot.agent_torso()) {
                (Some(t), Some(i)) => Some(t * robot.joints[i].max_velocity),
                _ => None,
            },
        }
    }
}
