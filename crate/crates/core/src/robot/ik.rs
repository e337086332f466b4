//! Velocity-limited inverse kinematics with a minimum-displacement regularizer.
//!
//! Each iteration takes a damped least-squares step under the metric
//! `W = diag(1 / v_max)`, so slow joints are moved reluctantly, and adds the
//! null-space component of the pull back toward the previous configuration.
//! At a converged solution of a redundant chain this leaves the weighted
//! displacement locally minimal. Every iterate stays inside the box
//! `[q0 - v_max dt, q0 + v_max dt]` intersected with the joint limits: joints
//! resting on a face and pushing outward are frozen for the step, the rest
//! are re-solved, and the step is shortened to the first face it reaches.

use nalgebra::{DMatrix, DVector, Matrix6, Vector6};

use super::kinematics::{chain_frames, jacobian_of};
use super::{JointState, RobotError, RobotModel};
use crate::geometry::{d_rot, rotation_vector, Pose2, Pose3};

pub const IK_DAMPING: f64 = 1e-3;
pub const IK_MAX_ITERATIONS: usize = 100;
/// Acceptance thresholds for the `ok` flag.
pub const IK_POSITION_TOLERANCE: f64 = 1e-3;
pub const IK_ROTATION_TOLERANCE: f64 = 1e-3;

/// 6D error norm treated as an exact solution.
const CONVERGED: f64 = 1e-10;
/// Iteration stops once no joint moves by more than this.
const STEP_CONVERGED: f64 = 1e-12;
/// A joint this close to a face of its box counts as resting on it.
const FACE_TOLERANCE: f64 = 1e-12;
/// Restarts are tried for 6D errors in this range.
const RETRY_ABOVE: f64 = 1e-4;
const RETRY_BELOW: f64 = 0.05;
/// Relative singular-value cutoff of the null-space projector.
const NULLSPACE_RCOND: f64 = 1e-9;
/// An iteration stops when its residual shrank by less than this factor over
/// the last window of iterations.
const STALL_WINDOW: usize = 10;
const STALL_RATIO: f64 = 0.99;
/// Residuals within this relative margin count as equal, so rounding noise
/// never decides between equivalent solutions.
const TIE: f64 = 1e-9;
/// Offsets of the restart seeds, as fractions of each joint's box half-width.
const RETRY_SEEDS: [f64; 8] = [0.5, 0.5, 0.9, 0.9, 0.5, 0.5, 0.9, 0.9];

#[derive(Debug, Clone, PartialEq)]
pub struct IkResult {
    pub joints: JointState,
    /// Forward kinematics of `joints`.
    pub achieved: Pose3,
    pub ok: bool,
    pub position_error: f64,
    pub rotation_error: f64,
    pub iterations: usize,
}

/// Solves for the joints after one control step of length `dt`.
///
/// With `torso_cmd` the torso integrates that velocity and is excluded from
/// the solve; otherwise every joint is solved for. Never fails for unreachable
/// targets: the best iterate is returned with `ok = false`.
pub fn solve_ik(
    model: &RobotModel,
    base_next: &Pose2,
    joints_now: &[f64],
    torso_cmd: Option<f64>,
    target: &Pose3,
    dt: f64,
) -> Result<IkResult, RobotError> {
    solve_ik_seeded(
        model, base_next, joints_now, torso_cmd, target, dt, joints_now,
    )
}

/// [`solve_ik`] starting the iteration from `seed` instead of `joints_now`.
/// The regularizer and the step box still refer to `joints_now`.
#[allow(clippy::too_many_arguments)]
pub fn solve_ik_seeded(
    model: &RobotModel,
    base_next: &Pose2,
    joints_now: &[f64],
    torso_cmd: Option<f64>,
    target: &Pose3,
    dt: f64,
    seed: &[f64],
) -> Result<IkResult, RobotError> {
    model.check_dimension(joints_now)?;
    model.check_dimension(seed)?;
    let n = model.dof();
    let vmax = model.max_velocities();

    let mut lo = vec![0.0; n];
    let mut hi = vec![0.0; n];
    let mut free = vec![true; n];
    for (i, j) in model.joints.iter().enumerate() {
        let (mut a, mut b) = (joints_now[i] - vmax[i] * dt, joints_now[i] + vmax[i] * dt);
        if j.is_bounded() {
            a = a.max(j.limits[0]);
            b = b.min(j.limits[1]);
        }
        lo[i] = a.min(b);
        hi[i] = b.max(a);
    }
    let q0 = joints_now.to_vec();
    let mut q: Vec<f64> = (0..n).map(|i| seed[i].clamp(lo[i], hi[i])).collect();
    if let (Some(v), Some(t)) = (torso_cmd, model.torso_index()) {
        let v = v.clamp(-vmax[t], vmax[t]);
        let next = model.joints[t].clamp(joints_now[t] + v * dt);
        lo[t] = next;
        hi[t] = next;
        q[t] = next;
        free[t] = false;
    }

    let error = |q: &[f64]| -> (Vector6<f64>, Pose3) {
        let frames = chain_frames(model, base_next, q);
        let pose = Pose3::from_isometry(&frames.ee);
        let dp = target.position - pose.position;
        let dr = rotation_vector(&(target.orientation * pose.orientation.inverse()));
        (Vector6::new(dp.x, dp.y, dp.z, dr.x, dr.y, dr.z), pose)
    };

    let mut best = iterate(
        &error, model, base_next, &q, &q0, &lo, &hi, &free, &vmax, true,
    );
    // The pulled iteration can settle in a local minimum (typically a wrist
    // singularity) close to the target; restart from fixed offsets inside the
    // box if so, first with the pull, then pose-only. Clearly unreachable
    // targets are not retried.
    let mut retried = false;
    for (k, &offset) in RETRY_SEEDS.iter().enumerate() {
        if best.0 <= RETRY_ABOVE || best.0 > RETRY_BELOW {
            break;
        }
        let seed: Vec<f64> = (0..n)
            .map(|i| {
                let sign = if (i + k) % 2 == 0 { 1.0 } else { -1.0 };
                let mid = 0.5 * (lo[i] + hi[i]);
                (mid + sign * offset * 0.5 * (hi[i] - lo[i])).clamp(lo[i], hi[i])
            })
            .collect();
        let retry = iterate(
            &error,
            model,
            base_next,
            &seed,
            &q0,
            &lo,
            &hi,
            &free,
            &vmax,
            k < RETRY_SEEDS.len() / 2,
        );
        if retry.0 < best.0 * (1.0 - TIE) {
            best = retry;
            retried = true;
        }
    }
    if retried {
        // A restart lands anywhere on the solution set; pull it back toward
        // the previous configuration.
        let refined = iterate(
            &error, model, base_next, &best.1, &q0, &lo, &hi, &free, &vmax, true,
        );
        if refined.0 <= (best.0 * (1.0 + TIE)).max(CONVERGED) {
            best = refined;
        }
    }
    let (_, joints, achieved, iterations) = best;
    let position_error = (target.position - achieved.position).norm();
    let rotation_error = d_rot(&target.orientation, &achieved.orientation);
    Ok(IkResult {
        ok: position_error < IK_POSITION_TOLERANCE && rotation_error < IK_ROTATION_TOLERANCE,
        joints,
        achieved,
        position_error,
        rotation_error,
        iterations,
    })
}

#[allow(clippy::too_many_arguments)]
fn iterate(
    error: &impl Fn(&[f64]) -> (Vector6<f64>, Pose3),
    model: &RobotModel,
    base_next: &Pose2,
    seed: &[f64],
    q0: &[f64],
    lo: &[f64],
    hi: &[f64],
    free: &[bool],
    vmax: &[f64],
    mut pull: bool,
) -> (f64, Vec<f64>, Pose3, usize) {
    let n = seed.len();
    let mut q = seed.to_vec();
    let (mut err, pose) = error(&q);
    let mut best = (err.norm(), q.clone(), pose);
    let mut iterations = 0;
    let mut reference = best.0;
    while iterations < IK_MAX_ITERATIONS {
        iterations += 1;
        // Give up on a residual that has stopped shrinking.
        if iterations % STALL_WINDOW == 0 {
            let now = err.norm();
            if now > CONVERGED && now > STALL_RATIO * reference {
                break;
            }
            reference = now;
        }
        let jac = jacobian_of(model, &chain_frames(model, base_next, &q));
        let anchor = if pull { q0 } else { &q[..] };
        let step = constrained_step(&jac, &err, &q, anchor, lo, hi, free, vmax);
        let size = step.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        if size < STEP_CONVERGED {
            if !pull || err.norm() <= CONVERGED {
                break;
            }
            pull = false;
            continue;
        }
        for i in 0..n {
            q[i] = (q[i] + step[i]).clamp(lo[i], hi[i]);
        }
        let (e, pose) = error(&q);
        err = e;
        // Later converged iterates carry less displacement; prefer them.
        if err.norm() <= (best.0 * (1.0 + TIE)).max(CONVERGED) {
            best = (err.norm(), q.clone(), pose);
        }
    }
    (best.0, best.1, best.2, iterations)
}

/// One damped, weighted least-squares step with box handling: joints on a
/// face of the box whose step points outward are frozen and the rest
/// re-solved; the step is then shortened so no joint leaves the box.
#[allow(clippy::too_many_arguments)]
fn constrained_step(
    jac: &DMatrix<f64>,
    err: &Vector6<f64>,
    q: &[f64],
    q0: &[f64],
    lo: &[f64],
    hi: &[f64],
    free: &[bool],
    vmax: &[f64],
) -> Vec<f64> {
    let n = q.len();
    let mut active: Vec<bool> = free.to_vec();
    loop {
        if !active.iter().any(|a| *a) {
            return vec![0.0; n];
        }
        let winv: Vec<f64> = (0..n)
            .map(|i| if active[i] { vmax[i] } else { 0.0 })
            .collect();
        let step = weighted_dls(jac, err, &winv, q, q0, &active);
        let mut changed = false;
        for i in 0..n {
            let outward = (q[i] >= hi[i] - FACE_TOLERANCE && step[i] > 0.0)
                || (q[i] <= lo[i] + FACE_TOLERANCE && step[i] < 0.0);
            if active[i] && outward {
                active[i] = false;
                changed = true;
            }
        }
        if changed {
            continue;
        }
        let mut alpha: f64 = 1.0;
        for i in 0..n {
            if !active[i] || step[i] == 0.0 {
                continue;
            }
            let room = if step[i] > 0.0 {
                hi[i] - q[i]
            } else {
                lo[i] - q[i]
            };
            alpha = alpha.min(room / step[i]);
        }
        let alpha = alpha.max(0.0);
        return (0..n)
            .map(|i| if active[i] { step[i] * alpha } else { 0.0 })
            .collect();
    }
}

/// `J# e + N z` with the damped weighted pseudo-inverse
/// `J# = W^-1 J^T (J W^-1 J^T + lambda I)^-1`, `z` the pull toward `q0` over
/// the active joints, and `N` the exact `W`-orthogonal null-space projector
/// of `J`, so the pull never disturbs the pose to first order.
fn weighted_dls(
    jac: &DMatrix<f64>,
    e: &Vector6<f64>,
    winv: &[f64],
    q: &[f64],
    q0: &[f64],
    active: &[bool],
) -> Vec<f64> {
    let n = q.len();
    let mut jw = jac.clone();
    for (i, w) in winv.iter().enumerate() {
        jw.column_mut(i).scale_mut(*w);
    }
    let a0: Matrix6<f64> = (&jw * jac.transpose())
        .fixed_view::<6, 6>(0, 0)
        .into_owned();
    let mut a = a0;
    for d in 0..6 {
        a[(d, d)] += IK_DAMPING;
    }
    let Some(chol) = a.cholesky() else {
        return vec![0.0; n];
    };
    let y = chol.solve(e);
    let mut dq = jw.transpose() * DVector::from_column_slice(y.as_slice());

    let z = DVector::from_iterator(
        n,
        (0..n).map(|i| if active[i] { q0[i] - q[i] } else { 0.0 }),
    );
    if z.amax() > 0.0 {
        let jz: Vector6<f64> = (jac * &z).fixed_rows::<6>(0).into_owned();
        let svd = a0.svd(true, true);
        let cutoff = svd.singular_values.max() * NULLSPACE_RCOND;
        if let Ok(yz) = svd.solve(&jz, cutoff) {
            dq += z - jw.transpose() * DVector::from_column_slice(yz.as_slice());
        }
    }
    dq.iter().copied().collect()
}
