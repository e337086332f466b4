//! Random-waypoint motions through a C1 cubic Hermite spline.

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::smooth::{cumulative3, resample_generic};
use super::{EEMotionPlan, MotionError, MotionKind, PlannerConfig};
use crate::geometry::{slerp, Pose3};

/// Samples per spline segment used before arc-length resampling.
const DENSE_SAMPLES: usize = 400;

/// Chord-length parameterized cubic Hermite spline with Catmull-Rom tangents
/// (one-sided at the ends). Passes through every knot and is C1.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteSpline {
    knots: Vec<Vector3<f64>>,
    params: Vec<f64>,
    tangents: Vec<Vector3<f64>>,
}

impl HermiteSpline {
    pub fn new(knots: Vec<Vector3<f64>>) -> Result<Self, MotionError> {
        if knots.len() < 2 {
            return Err(MotionError::Invalid(
                "spline needs at least two waypoints".into(),
            ));
        }
        let mut params = vec![0.0];
        for w in knots.windows(2) {
            let h = (w[1] - w[0]).norm();
            if h <= 0.0 {
                return Err(MotionError::Invalid("repeated spline waypoint".into()));
            }
            params.push(params.last().unwrap() + h);
        }
        let n = knots.len();
        let tangents = (0..n)
            .map(|k| {
                let (a, b) = (k.saturating_sub(1), (k + 1).min(n - 1));
                (knots[b] - knots[a]) / (params[b] - params[a])
            })
            .collect();
        Ok(Self {
            knots,
            params,
            tangents,
        })
    }

    pub fn knots(&self) -> &[Vector3<f64>] {
        &self.knots
    }

    pub fn segments(&self) -> usize {
        self.knots.len() - 1
    }

    /// Position on segment `k` at local parameter `u` in `[0, 1]`.
    pub fn eval(&self, k: usize, u: f64) -> Vector3<f64> {
        let h = self.params[k + 1] - self.params[k];
        let (u2, u3) = (u * u, u * u * u);
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        self.knots[k] * h00
            + self.tangents[k] * (h10 * h)
            + self.knots[k + 1] * h01
            + self.tangents[k + 1] * (h11 * h)
    }

    /// Derivative with respect to the chord-length parameter.
    pub fn derivative(&self, k: usize, u: f64) -> Vector3<f64> {
        let h = self.params[k + 1] - self.params[k];
        let u2 = u * u;
        let d00 = 6.0 * u2 - 6.0 * u;
        let d10 = 3.0 * u2 - 4.0 * u + 1.0;
        let d01 = -6.0 * u2 + 6.0 * u;
        let d11 = 3.0 * u2 - 2.0 * u;
        (self.knots[k] * d00 + self.knots[k + 1] * d01) / h
            + self.tangents[k] * d10
            + self.tangents[k + 1] * d11
    }
}

/// Draws `n` waypoints starting at `start`: each next one lies 1-3 m (the
/// configured range) from the previous, with a height inside `height_range`
/// and a uniformly random orientation.
pub fn spline_waypoints(
    start: &Pose3,
    n: usize,
    seed: u64,
    height_range: [f64; 2],
    cfg: &PlannerConfig,
) -> Vec<Pose3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [dmin, dmax] = cfg.spline_distance;
    let mut out = vec![*start];
    while out.len() < n {
        let prev = out.last().unwrap().position;
        let d: f64 = rng.gen_range(dmin..=dmax);
        let z: f64 = rng.gen_range(height_range[0]..=height_range[1]);
        let dz = z - prev.z;
        if dz.abs() >= d {
            continue;
        }
        let heading: f64 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let r = (d * d - dz * dz).sqrt();
        let position = Vector3::new(prev.x + r * heading.cos(), prev.y + r * heading.sin(), z);
        out.push(Pose3::new(position, random_orientation(&mut rng)));
    }
    out
}

/// Uniformly distributed rotation (normalized 4D Gaussian).
pub(crate) fn random_orientation(rng: &mut impl Rng) -> UnitQuaternion<f64> {
    loop {
        let q = Quaternion::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        if q.norm() > 1e-6 {
            return UnitQuaternion::new_normalize(q);
        }
    }
}

/// Motion through `n_waypoints` random waypoints: positions follow a
/// [`HermiteSpline`], orientations are slerped segment by segment.
pub fn spline_motion(
    start: &Pose3,
    n_waypoints: usize,
    seed: u64,
    height_range: [f64; 2],
    cfg: &PlannerConfig,
) -> Result<EEMotionPlan, MotionError> {
    if n_waypoints < 2 {
        return Err(MotionError::Invalid(
            "spline motion needs at least two waypoints".into(),
        ));
    }
    let waypoints = spline_waypoints(start, n_waypoints, seed, height_range, cfg);
    plan_through(&waypoints, cfg.resample_step)
}

/// Dense plan through given waypoint poses.
pub(crate) fn plan_through(waypoints: &[Pose3], ds: f64) -> Result<EEMotionPlan, MotionError> {
    let spline = HermiteSpline::new(waypoints.iter().map(|p| p.position).collect())?;
    let mut dense = Vec::new();
    let mut dense_tag = Vec::new();
    for k in 0..spline.segments() {
        for j in 0..DENSE_SAMPLES {
            let u = j as f64 / DENSE_SAMPLES as f64;
            dense.push(spline.eval(k, u));
            dense_tag.push(k as f64 + u);
        }
    }
    dense.push(*spline.knots().last().unwrap());
    dense_tag.push(spline.segments() as f64);

    // Carry the segment parameter through the resampling as a fourth coordinate.
    let tagged: Vec<nalgebra::Vector4<f64>> = dense
        .iter()
        .zip(&dense_tag)
        .map(|(p, t)| nalgebra::Vector4::new(p.x, p.y, p.z, *t))
        .collect();
    let arc = cumulative3(&dense);
    let resampled = resample_generic(&tagged, &arc, ds, |a, b, t| a + (b - a) * t);
    let positions: Vec<Vector3<f64>> = resampled.iter().map(|v| v.xyz()).collect();
    let tags: Vec<f64> = resampled.iter().map(|v| v.w).collect();

    let last = positions.len() - 1;
    let poses = positions
        .iter()
        .zip(&tags)
        .enumerate()
        .map(|(i, (p, tag))| {
            if i == 0 {
                return waypoints[0];
            }
            if i == last {
                return *waypoints.last().unwrap();
            }
            let k = (tag.floor() as usize).min(waypoints.len() - 2);
            let u = tag - k as f64;
            Pose3::new(
                *p,
                slerp(&waypoints[k].orientation, &waypoints[k + 1].orientation, u),
            )
        })
        .collect();
    EEMotionPlan::from_poses(poses, MotionKind::Spline)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn start() -> Pose3 {
        Pose3::new(Vector3::new(0.0, 0.0, 0.8), UnitQuaternion::identity())
    }

    #[test]
    fn two_collinear_waypoints_are_straight() {
        let wps = vec![
            start(),
            Pose3::new(Vector3::new(2.0, 0.0, 0.8), UnitQuaternion::identity()),
        ];
        let plan = plan_through(&wps, 0.01).unwrap();
        for p in plan.poses() {
            assert!(p.position.y.abs() < 1e-12);
            assert!((p.position.z - 0.8).abs() < 1e-12);
        }
        assert!((plan.length() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn spline_interpolates_knots() {
        let cfg = PlannerConfig::default();
        let wps = spline_waypoints(&start(), 5, 9, [0.2, 1.5], &cfg);
        let spline = HermiteSpline::new(wps.iter().map(|p| p.position).collect()).unwrap();
        for k in 0..spline.segments() {
            assert!((spline.eval(k, 0.0) - wps[k].position).norm() < 1e-9);
            assert!((spline.eval(k, 1.0) - wps[k + 1].position).norm() < 1e-9);
        }
        // C1 at interior knots.
        for k in 1..spline.segments() {
            assert!((spline.derivative(k - 1, 1.0) - spline.derivative(k, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn waypoint_spacing_and_heights() {
        let cfg = PlannerConfig::default();
        for seed in 0..50 {
            let wps = spline_waypoints(&start(), 5, seed, [0.2, 1.5], &cfg);
            assert_eq!(wps.len(), 5);
            for w in wps.windows(2) {
                let d = (w[1].position - w[0].position).norm();
                assert!((1.0 - 1e-9..=3.0 + 1e-9).contains(&d));
                assert!((0.2..=1.5).contains(&w[1].position.z));
            }
        }
    }

    #[test]
    fn plan_endpoints_and_orientations() {
        let cfg = PlannerConfig::default();
        let plan = spline_motion(&start(), 5, 3, [0.2, 1.5], &cfg).unwrap();
        let wps = spline_waypoints(&start(), 5, 3, [0.2, 1.5], &cfg);
        assert_eq!(plan.start(), &wps[0]);
        assert_eq!(plan.goal(), &wps[4]);
        assert_eq!(plan.kind(), MotionKind::Spline);
        assert!(plan.max_gap() <= 0.01 + 1e-12);
        assert!(spline_motion(&start(), 1, 3, [0.2, 1.5], &cfg).is_err());
    }
}
