//! Waypoint smoothing and the height/orientation profiles of A* motions.

use nalgebra::{Vector2, Vector3};

use super::{EEMotionPlan, MotionError, MotionKind, PlannerConfig, WeightMap};
use crate::geometry::{slerp, Pose3};
use crate::gridmap::OccupancyGrid;

/// Residual distance at which the tracker is considered to have reached the goal.
const SETTLE_DISTANCE: f64 = 1e-4;

/// Turns grid waypoints into a dense plan.
///
/// Positions follow a first-order tracker `x' = k (c - x)` whose target `c`
/// slides along the waypoint polyline at the configured nominal speed; the
/// result is resampled at uniform arc length. If `blocked` is given and the
/// smoothed path would touch a blocked cell, the unsmoothed polyline is used.
///
/// Heights ramp linearly from the start height toward
/// `max(next obstacle height + margin, goal height)` for each obstacle crossed,
/// never dropping below the clearance over an obstacle, and end at the goal
/// height. Orientations are slerped over normalized arc length.
pub fn smooth_and_lift(
    waypoints: &[[f64; 2]],
    start: &Pose3,
    goal: &Pose3,
    world: &OccupancyGrid,
    blocked: Option<&WeightMap>,
    cfg: &PlannerConfig,
) -> Result<EEMotionPlan, MotionError> {
    if waypoints.is_empty() {
        return Err(MotionError::Invalid("no waypoints".into()));
    }
    let ds = cfg.resample_step;
    if !(ds > 0.0) {
        return Err(MotionError::Invalid(format!("resample step {ds}")));
    }
    let start_xy = Vector2::new(start.position.x, start.position.y);
    let goal_xy = Vector2::new(goal.position.x, goal.position.y);

    let mut polyline = Vec::with_capacity(waypoints.len() + 2);
    polyline.push(start_xy);
    if waypoints.len() > 2 {
        polyline.extend(
            waypoints[1..waypoints.len() - 1]
                .iter()
                .map(|w| Vector2::new(w[0], w[1])),
        );
    }
    polyline.push(goal_xy);
    polyline.dedup_by(|a, b| (*a - *b).norm() < 1e-12);

    let carrots = resample_polyline(&polyline, ds);
    let smoothed = track(
        &carrots,
        goal_xy,
        cfg.smoothing_gain * ds / cfg.smoothing_speed.max(1e-9),
    );
    let mut points = lift(&smoothed, start, goal, world, cfg);
    if let Some(wm) = blocked {
        if points.iter().any(|p| wm.is_blocked_world(p.x, p.y)) {
            points = lift(&carrots, start, goal, world, cfg);
        }
    }

    let arc = cumulative3(&points);
    let total = *arc.last().unwrap();
    let poses = points
        .iter()
        .zip(&arc)
        .enumerate()
        .map(|(i, (p, s))| {
            let q = if i == 0 {
                start.orientation
            } else if i + 1 == points.len() {
                goal.orientation
            } else {
                slerp(
                    &start.orientation,
                    &goal.orientation,
                    if total > 0.0 { s / total } else { 1.0 },
                )
            };
            Pose3::new(*p, q)
        })
        .collect();
    EEMotionPlan::from_poses(poses, MotionKind::Slerp)
}

/// 3D samples at uniform arc spacing over an xy path, with the height profile.
fn lift(
    path: &[Vector2<f64>],
    start: &Pose3,
    goal: &Pose3,
    world: &OccupancyGrid,
    cfg: &PlannerConfig,
) -> Vec<Vector3<f64>> {
    let xy = resample_polyline(path, cfg.resample_step);
    let xy_arc = cumulative(&xy);
    let z = height_profile(
        &xy,
        &xy_arc,
        start.position.z,
        goal.position.z,
        world,
        cfg.height_margin,
    );
    let points: Vec<Vector3<f64>> = xy
        .iter()
        .zip(&z)
        .map(|(p, z)| Vector3::new(p.x, p.y, *z))
        .collect();
    let mut points = resample_polyline3(&points, cfg.resample_step);
    *points.first_mut().unwrap() = start.position;
    *points.last_mut().unwrap() = goal.position;
    points
}

/// First-order tracker over a sequence of targets; runs until it settles on `goal`.
fn track(targets: &[Vector2<f64>], goal: Vector2<f64>, alpha: f64) -> Vec<Vector2<f64>> {
    let alpha = alpha.clamp(1e-3, 1.0);
    let mut x = targets[0];
    let mut out = Vec::with_capacity(targets.len() + 64);
    out.push(x);
    for c in &targets[1..] {
        x += (c - x) * alpha;
        out.push(x);
    }
    while (goal - x).norm() > SETTLE_DISTANCE {
        x += (goal - x) * alpha;
        out.push(x);
    }
    out.push(goal);
    out
}

fn cumulative(points: &[Vector2<f64>]) -> Vec<f64> {
    let mut arc = Vec::with_capacity(points.len());
    let mut s = 0.0;
    arc.push(0.0);
    for w in points.windows(2) {
        s += (w[1] - w[0]).norm();
        arc.push(s);
    }
    arc
}

pub(crate) fn cumulative3(points: &[Vector3<f64>]) -> Vec<f64> {
    let mut arc = Vec::with_capacity(points.len());
    let mut s = 0.0;
    arc.push(0.0);
    for w in points.windows(2) {
        s += (w[1] - w[0]).norm();
        arc.push(s);
    }
    arc
}

/// Points on a polyline at uniform arc-length spacing of at most `ds`,
/// always including both endpoints.
pub(crate) fn resample_polyline(points: &[Vector2<f64>], ds: f64) -> Vec<Vector2<f64>> {
    let arc = cumulative(points);
    resample_generic(points, &arc, ds, |a, b, t| a + (b - a) * t)
}

pub(crate) fn resample_polyline3(points: &[Vector3<f64>], ds: f64) -> Vec<Vector3<f64>> {
    let arc = cumulative3(points);
    resample_generic(points, &arc, ds, |a, b, t| a + (b - a) * t)
}

pub(crate) fn resample_generic<T: Copy>(
    points: &[T],
    arc: &[f64],
    ds: f64,
    lerp: impl Fn(T, T, f64) -> T,
) -> Vec<T> {
    let total = *arc.last().unwrap();
    if points.len() == 1 || total <= 0.0 {
        return vec![points[0], *points.last().unwrap()];
    }
    let n = (total / ds).ceil().max(1.0) as usize;
    let step = total / n as f64;
    let mut out = Vec::with_capacity(n + 1);
    let mut k = 0;
    for i in 0..=n {
        if i == n {
            out.push(*points.last().unwrap());
            break;
        }
        let s = i as f64 * step;
        while k + 2 < points.len() && arc[k + 1] <= s {
            k += 1;
        }
        let span = arc[k + 1] - arc[k];
        let t = if span > 0.0 {
            ((s - arc[k]) / span).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(lerp(points[k], points[k + 1], t));
    }
    out
}

/// Piecewise-linear height over the path (see [`smooth_and_lift`]).
pub(crate) fn height_profile(
    xy: &[Vector2<f64>],
    arc: &[f64],
    start_z: f64,
    goal_z: f64,
    world: &OccupancyGrid,
    margin: f64,
) -> Vec<f64> {
    let heights: Vec<f64> = xy
        .iter()
        .map(|p| world.height_at_world(p.x, p.y).unwrap_or(0.0))
        .collect();

    // Obstacle runs, widened by one sample on each side so every segment
    // touching an obstacle sample is held at the clearance height; runs that
    // end up adjacent are merged.
    let last = heights.len() - 1;
    let mut runs: Vec<(usize, usize, f64)> = Vec::new();
    let mut i = 0;
    while i < heights.len() {
        if heights[i] > 0.0 {
            let a = i;
            let mut top: f64 = 0.0;
            while i < heights.len() && heights[i] > 0.0 {
                top = top.max(heights[i]);
                i += 1;
            }
            let (a, b) = (a.saturating_sub(1), i.min(last));
            match runs.last_mut() {
                Some(prev) if prev.1 >= a => {
                    prev.1 = b;
                    prev.2 = prev.2.max(top);
                }
                _ => runs.push((a, b, top)),
            }
        } else {
            i += 1;
        }
    }
    let mut anchors: Vec<(f64, f64)> = vec![(0.0, start_z)];
    for (a, b, top) in runs {
        let z = (top + margin).max(goal_z);
        anchors.push((arc[a], z));
        anchors.push((arc[b], z));
    }
    anchors.push((arc[last], goal_z));

    let mut out = Vec::with_capacity(xy.len());
    let mut k = 0;
    for (j, s) in arc.iter().enumerate() {
        while k + 2 < anchors.len() && anchors[k + 1].0 < *s {
            k += 1;
        }
        let (s0, z0) = anchors[k];
        let (s1, z1) = anchors[k + 1];
        let mut z = if s1 > s0 {
            z0 + (z1 - z0) * ((s - s0) / (s1 - s0)).clamp(0.0, 1.0)
        } else {
            z1
        };
        if heights[j] > 0.0 {
            z = z.max(heights[j] + margin);
        }
        out.push(z);
    }
    if let Some(last) = out.last_mut() {
        *last = goal_z;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::yaw_quaternion;
    use crate::gridmap::{rasterize, Bounds, PlacedShape};
    use nalgebra::UnitQuaternion;

    fn pose(x: f64, y: f64, z: f64, yaw: f64) -> Pose3 {
        Pose3::new(Vector3::new(x, y, z), yaw_quaternion(yaw))
    }

    fn line_waypoints(x0: f64, x1: f64, y: f64, res: f64) -> Vec<[f64; 2]> {
        let n = ((x1 - x0) / res).round() as usize;
        (0..=n).map(|i| [x0 + i as f64 * res, y]).collect()
    }

    #[test]
    fn flat_map_interpolates_height_linearly() {
        let world = rasterize(&[], 0.05, &Bounds::new(-1.0, -1.0, 4.0, 1.0)).unwrap();
        let start = pose(0.0, 0.0, 0.5, 0.0);
        let goal = pose(3.0, 0.0, 1.1, 1.0);
        let plan = smooth_and_lift(
            &line_waypoints(0.0, 3.0, 0.0, 0.05),
            &start,
            &goal,
            &world,
            None,
            &PlannerConfig::default(),
        )
        .unwrap();
        assert_eq!(plan.start(), &start);
        assert_eq!(plan.goal(), &goal);
        for p in plan.poses() {
            let expect = 0.5 + 0.6 * p.position.x / 3.0;
            assert!(
                (p.position.z - expect).abs() < 1e-9,
                "{} vs {}",
                p.position.z,
                expect
            );
            assert!(p.position.y.abs() < 1e-12);
        }
        assert!(plan.max_gap() <= 0.01 + 1e-12);
    }

    #[test]
    fn lifts_over_obstacle() {
        let obstacle = PlacedShape::rectangle([1.5, 0.0], 0.4, 1.0, 0.0, 0.6);
        let world = rasterize(&[obstacle], 0.05, &Bounds::new(-1.0, -1.0, 4.0, 1.0)).unwrap();
        let start = pose(0.0, 0.0, 0.4, 0.0);
        let goal = pose(3.0, 0.0, 0.5, 0.0);
        let cfg = PlannerConfig {
            height_margin: 0.1,
            ..PlannerConfig::default()
        };
        let plan = smooth_and_lift(
            &line_waypoints(0.0, 3.0, 0.0, 0.05),
            &start,
            &goal,
            &world,
            None,
            &cfg,
        )
        .unwrap();
        let mut over = 0;
        for p in plan.poses() {
            if let Some(h) = world.height_at_world(p.position.x, p.position.y) {
                if h > 0.0 {
                    over += 1;
                    assert!(
                        p.position.z >= 0.7 - 1e-12,
                        "x={} z={}",
                        p.position.x,
                        p.position.z
                    );
                }
            }
            assert!(p.position.z <= 0.7 + 1e-12);
        }
        assert!(over > 30);
        assert_eq!(plan.goal().position.z, 0.5);
    }

    #[test]
    fn orientation_endpoints_exact() {
        let world = rasterize(&[], 0.05, &Bounds::new(-1.0, -1.0, 4.0, 1.0)).unwrap();
        let start = Pose3::new(
            Vector3::new(0.0, 0.0, 0.5),
            UnitQuaternion::from_euler_angles(0.3, 0.1, -0.4),
        );
        let goal = Pose3::new(
            Vector3::new(2.0, 0.2, 0.9),
            UnitQuaternion::from_euler_angles(-1.0, 0.5, 2.0),
        );
        let wps = vec![[0.025, 0.025], [0.075, 0.025], [1.975, 0.175]];
        let plan =
            smooth_and_lift(&wps, &start, &goal, &world, None, &PlannerConfig::default()).unwrap();
        assert_eq!(plan.poses()[0].orientation, start.orientation);
        assert_eq!(plan.goal().orientation, goal.orientation);
    }

    #[test]
    fn single_waypoint_goes_straight() {
        let world = rasterize(&[], 0.05, &Bounds::new(-1.0, -1.0, 1.0, 1.0)).unwrap();
        let start = pose(0.01, 0.01, 0.5, 0.0);
        let goal = pose(0.02, 0.03, 0.5, 0.0);
        let plan = smooth_and_lift(
            &[[0.025, 0.025]],
            &start,
            &goal,
            &world,
            None,
            &PlannerConfig::default(),
        )
        .unwrap();
        assert_eq!(plan.start(), &start);
        assert_eq!(plan.goal(), &goal);
        assert!(
            smooth_and_lift(&[], &start, &goal, &world, None, &PlannerConfig::default()).is_err()
        );
    }

    #[test]
    fn resample_spacing() {
        let pts = vec![
            Vector2::new(0.0, 0.0),
            Vector2::new(1.0, 0.0),
            Vector2::new(1.0, 0.5),
        ];
        let r = resample_polyline(&pts, 0.01);
        assert_eq!(r.len(), 151);
        assert_eq!(*r.last().unwrap(), Vector2::new(1.0, 0.5));
        for w in r.windows(2) {
            assert!((w[1] - w[0]).norm() <= 0.01 + 1e-12);
        }
    }
}
