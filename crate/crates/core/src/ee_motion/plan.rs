use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::MotionError;
use crate::geometry::{rotation_vector, slerp, to_wxyz, Pose3};

/// Orientation profile / generator of a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionKind {
    /// A* positions, orientation slerped from start to goal.
    Slerp,
    /// A* positions, orientation facing the direction of travel.
    Fwd,
    /// Cubic spline through random waypoints.
    Spline,
}

impl fmt::Display for MotionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MotionKind::Slerp => "slerp",
            MotionKind::Fwd => "fwd",
            MotionKind::Spline => "spline",
        })
    }
}

impl FromStr for MotionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "slerp" => Ok(MotionKind::Slerp),
            "fwd" => Ok(MotionKind::Fwd),
            "spline" => Ok(MotionKind::Spline),
            other => Err(format!(
                "unknown motion kind '{other}' (expected slerp, fwd or spline)"
            )),
        }
    }
}

/// Time-free dense sequence of end-effector poses with cumulative arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct EEMotionPlan {
    poses: Vec<Pose3>,
    arc: Vec<f64>,
    kind: MotionKind,
    goal: Pose3,
}

impl EEMotionPlan {
    /// Builds a plan from its samples; the last pose is the goal.
    pub fn from_poses(poses: Vec<Pose3>, kind: MotionKind) -> Result<Self, MotionError> {
        if poses.is_empty() {
            return Err(MotionError::Invalid("empty plan".into()));
        }
        let mut arc = Vec::with_capacity(poses.len());
        let mut s = 0.0;
        arc.push(0.0);
        for w in poses.windows(2) {
            s += (w[1].position - w[0].position).norm();
            arc.push(s);
        }
        let goal = *poses.last().unwrap();
        Ok(Self {
            poses,
            arc,
            kind,
            goal,
        })
    }

    pub fn poses(&self) -> &[Pose3] {
        &self.poses
    }

    pub fn arc_lengths(&self) -> &[f64] {
        &self.arc
    }

    pub fn kind(&self) -> MotionKind {
        self.kind
    }

    pub fn goal(&self) -> &Pose3 {
        &self.goal
    }

    pub fn start(&self) -> &Pose3 {
        &self.poses[0]
    }

    pub fn length(&self) -> f64 {
        *self.arc.last().unwrap()
    }

    /// Largest distance between consecutive samples.
    pub fn max_gap(&self) -> f64 {
        self.arc.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    pub(crate) fn with_orientations(
        &self,
        orientations: impl Fn(usize, f64) -> nalgebra::UnitQuaternion<f64>,
        kind: MotionKind,
    ) -> Self {
        let poses = self
            .poses
            .iter()
            .enumerate()
            .map(|(i, p)| Pose3::new(p.position, orientations(i, self.arc[i])))
            .collect();
        let mut out = Self::from_poses(poses, kind).expect("nonempty");
        out.arc = self.arc.clone();
        out
    }

    /// Pose at arc length `s` (clamped), interpolating between samples.
    pub fn pose_at(&self, s: f64) -> Pose3 {
        let total = self.length();
        if s <= 0.0 || self.poses.len() == 1 {
            return self.poses[0];
        }
        if s >= total {
            return self.goal;
        }
        let k = self.arc.partition_point(|a| *a <= s).saturating_sub(1);
        let k = k.min(self.poses.len() - 2);
        let span = self.arc[k + 1] - self.arc[k];
        if span <= 0.0 {
            return self.poses[k + 1];
        }
        let t = (s - self.arc[k]) / span;
        let a = &self.poses[k];
        let b = &self.poses[k + 1];
        Pose3::new(
            a.position + (b.position - a.position) * t,
            slerp(&a.orientation, &b.orientation, t),
        )
    }

    /// Arc length of the point on the plan closest to `point`, with its
    /// distance. When `window` is given only that arc interval is searched.
    pub fn closest_arc(&self, point: &Vector3<f64>, window: Option<(f64, f64)>) -> (f64, f64) {
        if self.poses.len() == 1 {
            return (0.0, (self.poses[0].position - point).norm());
        }
        let (lo, hi) = match window {
            Some((a, b)) => {
                let lo = self.arc.partition_point(|s| *s < a).saturating_sub(1);
                let hi = self
                    .arc
                    .partition_point(|s| *s <= b)
                    .min(self.poses.len() - 1);
                (lo, hi.max(lo + 1))
            }
            None => (0, self.poses.len() - 1),
        };
        let mut best = (0.0, f64::INFINITY);
        for k in lo..hi {
            let a = self.poses[k].position;
            let b = self.poses[k + 1].position;
            let ab = b - a;
            let len2 = ab.norm_squared();
            let t = if len2 > 0.0 {
                ((point - a).dot(&ab) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let d = (a + ab * t - point).norm();
            if d < best.1 {
                best = (self.arc[k] + t * (self.arc[k + 1] - self.arc[k]), d);
            }
        }
        best
    }

    /// JSON-lines export: one record per sample.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for (p, s) in self.poses.iter().zip(&self.arc) {
            let rec = PlanRecord {
                arc_length: *s,
                position: p.position.into(),
                quaternion: to_wxyz(&p.orientation),
            };
            out.push_str(&serde_json::to_string(&rec).expect("plain data"));
            out.push('\n');
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct PlanRecord {
    arc_length: f64,
    position: [f64; 3],
    quaternion: [f64; 4],
}

/// Input of a velocity query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionQuery {
    pub current: Pose3,
    pub velocity: Vector3<f64>,
    /// Distance to advance along the plan this step (m), `a_ee * dt`.
    pub step_length: f64,
    /// Known arc position of `current`; restricts the closest-point search.
    pub arc_hint: Option<f64>,
}

/// Output of a velocity query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionStep {
    /// Linear velocity (m/s).
    pub velocity: Vector3<f64>,
    /// Angular velocity taking the current orientation to the next one (rad/s).
    pub angular_velocity: Vector3<f64>,
    /// Arc position the query was projected to.
    pub arc: f64,
    /// Arc position after advancing.
    pub next_arc: f64,
    pub next_pose: Pose3,
    pub intermediate_goal: Pose3,
}

/// Next-step end-effector velocity along `plan`.
///
/// The query pose is projected onto the plan; the velocity points from that
/// point toward the point one step length further along the arc and has
/// magnitude `step / dt` (shorter only where the plan ends). The intermediate
/// goal is the plan pose `lookahead` ahead, or the goal when nearer.
pub fn next_velocity(
    plan: &EEMotionPlan,
    q: &MotionQuery,
    dt: f64,
    lookahead: f64,
    tracking_threshold: f64,
) -> Result<MotionStep, MotionError> {
    if !(q.step_length >= 0.0) || !(dt > 0.0) {
        return Err(MotionError::Invalid(format!(
            "step length {} and dt {dt} must be nonnegative and positive",
            q.step_length
        )));
    }
    let (arc, distance) = match q.arc_hint {
        Some(h) if (plan.pose_at(h).position - q.current.position).norm() <= 1e-9 => {
            (h.clamp(0.0, plan.length()), 0.0)
        }
        Some(h) => plan.closest_arc(
            &q.current.position,
            Some((h - 0.5, h + 0.5 + q.step_length)),
        ),
        None => plan.closest_arc(&q.current.position, None),
    };
    if distance > tracking_threshold {
        return Err(MotionError::OffPlan { distance });
    }
    let next_arc = (arc + q.step_length).min(plan.length());
    let here = plan.pose_at(arc);
    let next_pose = plan.pose_at(next_arc);
    let chord = next_pose.position - here.position;
    let advance = next_arc - arc;
    let velocity = if advance > 0.0 && chord.norm() > 0.0 {
        chord.normalize() * (advance / dt)
    } else {
        Vector3::zeros()
    };
    let rel = next_pose.orientation * here.orientation.inverse();
    let angular_velocity = rotation_vector(&rel) / dt;
    Ok(MotionStep {
        velocity,
        angular_velocity,
        arc,
        next_arc,
        next_pose,
        intermediate_goal: plan.pose_at(arc + lookahead),
    })
}
