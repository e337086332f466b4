use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::Action;
use crate::geometry::{to_wxyz, Pose3};
use crate::gridmap::{LocalMapPair, LOCAL_CELLS};
use crate::robot::RobotModel;

/// What the agent sees after a reset or step. Poses and velocities are in
/// the robot's base frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub maps: LocalMapPair,
    pub joints: Vec<f64>,
    /// Desired end-effector velocity at full speed: linear then angular.
    pub ee_velocity: [f64; 6],
    pub desired_pose: Pose3,
    pub intermediate_goal: Pose3,
    /// Zero before the first step.
    pub previous_action: Vec<f64>,
}

/// Named slice of the flat observation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

/// Offsets of every component in [`Observation::flatten`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationLayout {
    pub segments: Vec<Segment>,
    pub len: usize,
}

impl ObservationLayout {
    pub fn for_robot(robot: &RobotModel) -> ObservationLayout {
        let cells = LOCAL_CELLS * LOCAL_CELLS;
        let parts = [
            ("coarse_map", cells),
            ("fine_map", cells),
            ("joints", robot.dof()),
            ("ee_velocity", 6),
            ("desired_pose", 7),
            ("intermediate_goal", 7),
            ("previous_action", Action::flat_len(robot)),
        ];
        let mut offset = 0;
        let segments = parts
            .iter()
            .map(|(name, len)| {
                let s = Segment {
                    name: name.to_string(),
                    offset,
                    len: *len,
                };
                offset += len;
                s
            })
            .collect();
        ObservationLayout {
            segments,
            len: offset,
        }
    }

    pub fn segment(&self, name: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.name == name)
    }
}

fn push_pose(out: &mut Vec<f64>, p: &Pose3) {
    out.extend_from_slice(p.position.as_slice());
    out.extend_from_slice(&to_wxyz(&p.orientation));
}

impl Observation {
    /// Flat vector in the order of [`ObservationLayout::for_robot`]; map
    /// cells are 1.0 when occupied. Poses are position then `(w, x, y, z)`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * LOCAL_CELLS * LOCAL_CELLS + 64);
        for map in [&self.maps.coarse, &self.maps.fine] {
            out.extend(map.cells.iter().map(|c| if *c { 1.0 } else { 0.0 }));
        }
        out.extend_from_slice(&self.joints);
        out.extend_from_slice(&self.ee_velocity);
        push_pose(&mut out, &self.desired_pose);
        push_pose(&mut out, &self.intermediate_goal);
        out.extend_from_slice(&self.previous_action);
        out
    }

    pub fn linear_velocity(&self) -> Vector3<f64> {
        Vector3::new(
            self.ee_velocity[0],
            self.ee_velocity[1],
            self.ee_velocity[2],
        )
    }
}
