use nalgebra::{DMatrix, Isometry3, Point3, Vector3};

use super::{JointKind, RobotError, RobotModel};
use crate::geometry::{Pose2, Pose3};

/// World-frame joint axes and anchor points plus the end-effector frame.
pub(crate) struct ChainFrames {
    pub axes: Vec<Vector3<f64>>,
    pub anchors: Vec<Point3<f64>>,
    pub ee: Isometry3<f64>,
}

pub(crate) fn chain_frames(model: &RobotModel, base: &Pose2, joints: &[f64]) -> ChainFrames {
    let mut t = base.to_isometry();
    let mut axes = Vec::with_capacity(model.dof());
    let mut anchors = Vec::with_capacity(model.dof());
    for (j, q) in model.joints.iter().zip(joints) {
        t *= j.origin();
        axes.push(t.rotation * j.axis());
        anchors.push(Point3::from(t.translation.vector));
        t *= j.motion(*q);
    }
    ChainFrames {
        axes,
        anchors,
        ee: t * model.ee_offset(),
    }
}

/// End-effector pose in the world frame.
pub fn forward_kinematics(
    model: &RobotModel,
    base: &Pose2,
    joints: &[f64],
) -> Result<Pose3, RobotError> {
    model.check_dimension(joints)?;
    Ok(Pose3::from_isometry(&chain_frames(model, base, joints).ee))
}

/// Geometric 6xN Jacobian (linear rows first) in the world frame.
pub fn jacobian(
    model: &RobotModel,
    base: &Pose2,
    joints: &[f64],
) -> Result<DMatrix<f64>, RobotError> {
    model.check_dimension(joints)?;
    Ok(jacobian_of(model, &chain_frames(model, base, joints)))
}

pub(crate) fn jacobian_of(model: &RobotModel, frames: &ChainFrames) -> DMatrix<f64> {
    let p = frames.ee.translation.vector;
    let mut jac = DMatrix::zeros(6, model.dof());
    for (i, j) in model.joints.iter().enumerate() {
        let a = frames.axes[i];
        let (lin, ang) = match j.kind {
            JointKind::Prismatic => (a, Vector3::zeros()),
            JointKind::Revolute | JointKind::Continuous => {
                (a.cross(&(p - frames.anchors[i].coords)), a)
            }
        };
        jac.fixed_view_mut::<3, 1>(0, i).copy_from(&lin);
        jac.fixed_view_mut::<3, 1>(3, i).copy_from(&ang);
    }
    jac
}
