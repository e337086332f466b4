//! Procedural training worlds: elementary shapes on a jittered grid, plus
//! start, initial joints and end-effector goal drawn by rejection sampling.

use std::f64::consts::PI;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ee_motion::{build_motion, plan_path, MotionKind, PlannerConfig, WeightMap, WeightMode};
use crate::geometry::{Pose2, Pose3};
use crate::gridmap::{
    inflate, Bounds, DynamicObstacle, GridError, OccupancyGrid, PlacedShape, ShapeKind, WorldFile,
    DEFAULT_RESOLUTION,
};
use crate::robot::{check_base_collision, forward_kinematics, JointKind, RobotModel};

/// Random draws consumed per grid site, whether or not the site is kept.
pub const DRAWS_PER_SITE: usize = 7;

#[derive(Debug, Error)]
pub enum WorldGenError {
    #[error("invalid worldgen config: {0}")]
    Config(String),
    #[error("no solvable start and goal after {attempts} attempts")]
    Unsolvable { attempts: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("episode file: {0}")]
    Parse(String),
    #[error("episode was generated for robot {expected}, not {got}")]
    RobotMismatch { expected: String, got: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldGenConfig {
    pub bounds: Bounds,
    pub resolution: f64,
    /// Spacing of the obstacle placement grid (m).
    pub pitch: f64,
    /// Probability that a grid site holds an obstacle.
    pub keep_probability: f64,
    /// Standard deviation of the normal offset of each obstacle (m).
    pub offset_std: f64,
    /// Uniform range of obstacle width and breadth (m).
    pub extent: [f64; 2],
    /// Uniform range of obstacle height (m).
    pub height: [f64; 2],
    /// Uniform range of the planar start-to-goal distance (m).
    pub goal_distance: [f64; 2],
    /// Inflation of the map on which a start-to-goal path must exist (m).
    pub rejection_radius: f64,
    pub max_attempts: usize,
    /// Worlds tried by [`generate_episode`] before giving up.
    pub max_worlds: usize,
    /// Goal height range; the robot's own range when unset.
    pub goal_height: Option<[f64; 2]>,
    /// Draw goal heights from the robot's restricted band instead.
    pub restricted_goals: bool,
    /// Moving obstacles, spawned uniformly inside the bounds.
    pub dynamic_count: usize,
    pub dynamic_speed: [f64; 2],
    pub planner: PlannerConfig,
}

impl Default for WorldGenConfig {
    fn default() -> Self {
        Self {
            bounds: Bounds::new(-5.0, -5.0, 5.0, 5.0),
            resolution: DEFAULT_RESOLUTION,
            pitch: 1.0,
            keep_probability: 0.6,
            offset_std: 0.3,
            extent: [0.2, 1.0],
            height: [0.2, 1.8],
            goal_distance: [0.5, 5.0],
            rejection_radius: 0.4,
            max_attempts: 100,
            max_worlds: 20,
            goal_height: None,
            restricted_goals: false,
            dynamic_count: 0,
            dynamic_speed: [0.1, 0.15],
            planner: PlannerConfig::default(),
        }
    }
}

impl WorldGenConfig {
    pub fn from_toml(text: &str) -> Result<Self, WorldGenError> {
        let cfg: WorldGenConfig =
            toml::from_str(text).map_err(|e| WorldGenError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("worldgen config is always representable")
    }

    pub fn validate(&self) -> Result<(), WorldGenError> {
        let bad = |m: &str| Err(WorldGenError::Config(m.to_string()));
        let range = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] < r[1];
        if !self.bounds.is_valid() {
            return bad("bounds must have positive extent");
        }
        if !(self.resolution > 0.0) || !(self.pitch > 0.0) {
            return bad("resolution and pitch must be positive");
        }
        if !(0.0..=1.0).contains(&self.keep_probability) {
            return bad("keep_probability must lie in [0, 1]");
        }
        if !(self.offset_std >= 0.0) {
            return bad("offset_std must be nonnegative");
        }
        if !range(self.extent)
            || self.extent[0] <= 0.0
            || !range(self.height)
            || self.height[0] <= 0.0
        {
            return bad("extent and height ranges need 0 < min < max");
        }
        if !range(self.goal_distance) || self.goal_distance[0] < 0.0 {
            return bad("goal_distance needs 0 <= min < max");
        }
        if let Some(h) = self.goal_height {
            if !range(h) {
                return bad("goal_height needs min < max");
            }
        }
        if !range(self.dynamic_speed) || self.dynamic_speed[0] < 0.0 {
            return bad("dynamic_speed needs 0 <= min < max");
        }
        if !(self.rejection_radius > 0.0) {
            return bad("rejection_radius must be positive");
        }
        if self.max_attempts == 0 || self.max_worlds == 0 {
            return bad("attempt budgets must be positive");
        }
        Ok(())
    }

    /// Centers of the obstacle placement grid, row by row.
    pub fn sites(&self) -> Vec<[f64; 2]> {
        let b = &self.bounds;
        let nx = (b.width() / self.pitch).floor() as usize;
        let ny = (b.height() / self.pitch).floor() as usize;
        let mut out = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                out.push([
                    b.min_x + (i as f64 + 0.5) * self.pitch,
                    b.min_y + (j as f64 + 0.5) * self.pitch,
                ]);
            }
        }
        out
    }

    fn goal_heights(&self, robot: &RobotModel) -> [f64; 2] {
        if self.restricted_goals {
            robot.constraints.restricted_height
        } else {
            self.goal_height.unwrap_or(robot.constraints.goal_height)
        }
    }
}

/// One sampled task: the world, the start state and the end-effector goal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    pub robot: String,
    pub seed: u64,
    pub world: WorldFile,
    pub start: Pose2,
    pub joints: Vec<f64>,
    pub goal: Pose3,
}

#[derive(Serialize, Deserialize)]
struct EpisodeHeader {
    robot: String,
    seed: u64,
    start: Pose2,
    joints: Vec<f64>,
    goal: Pose3,
}

#[derive(Serialize, Deserialize)]
struct EpisodeFile {
    episode: EpisodeHeader,
    #[serde(flatten)]
    world: WorldFile,
}

impl EpisodeSpec {
    /// World file with an `[episode]` header table; still readable as a plain world file.
    pub fn to_toml(&self) -> String {
        let file = EpisodeFile {
            episode: EpisodeHeader {
                robot: self.robot.clone(),
                seed: self.seed,
                start: self.start,
                joints: self.joints.clone(),
                goal: self.goal,
            },
            world: self.world.clone(),
        };
        toml::to_string(&file).expect("episode is always representable")
    }

    pub fn from_toml(text: &str) -> Result<Self, WorldGenError> {
        let f: EpisodeFile =
            toml::from_str(text).map_err(|e| WorldGenError::Parse(e.to_string()))?;
        f.world.geometry()?;
        for s in &f.world.shapes {
            s.validate()?;
        }
        Ok(EpisodeSpec {
            robot: f.episode.robot,
            seed: f.episode.seed,
            world: f.world,
            start: f.episode.start,
            joints: f.episode.joints,
            goal: f.episode.goal,
        })
    }

    pub fn check_robot(&self, robot: &RobotModel) -> Result<(), WorldGenError> {
        if self.robot != robot.name || self.joints.len() != robot.dof() {
            return Err(WorldGenError::RobotMismatch {
                expected: self.robot.clone(),
                got: robot.name.clone(),
            });
        }
        Ok(())
    }

    /// Same episode shifted by `(dx, dy)` in the world plane.
    pub fn translated(&self, dx: f64, dy: f64) -> EpisodeSpec {
        let mut out = self.clone();
        out.world = self.world.translated(dx, dy);
        out.start = Pose2::new(self.start.x + dx, self.start.y + dy, self.start.theta());
        out.goal.position += Vector3::new(dx, dy, 0.0);
        out
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Random static shapes and moving obstacles for one seed.
pub fn generate_world_file(cfg: &WorldGenConfig, seed: u64) -> Result<WorldFile, WorldGenError> {
    generate_world_stream(cfg, seed, 0)
}

fn generate_world_stream(
    cfg: &WorldGenConfig,
    seed: u64,
    stream_id: u64,
) -> Result<WorldFile, WorldGenError> {
    cfg.validate()?;
    let mut rng = stream(seed, stream_id);
    let offset =
        Normal::new(0.0, cfg.offset_std).map_err(|e| WorldGenError::Config(e.to_string()))?;
    let mut shapes = Vec::new();
    for site in cfg.sites() {
        // Every site consumes the same draws so sites are independent of
        // the keep decisions made before them.
        let keep = rng.gen::<f64>() < cfg.keep_probability;
        let ellipse = rng.gen::<bool>();
        let center = [
            site[0] + offset.sample(&mut rng),
            site[1] + offset.sample(&mut rng),
        ];
        let rotation = rng.gen_range(-PI..PI);
        let width = rng.gen_range(cfg.extent[0]..cfg.extent[1]);
        let breadth = rng.gen_range(cfg.extent[0]..cfg.extent[1]);
        let height = rng.gen_range(cfg.height[0]..cfg.height[1]);
        if !keep {
            continue;
        }
        shapes.push(if ellipse {
            PlacedShape::ellipse(center, 0.5 * width, 0.5 * breadth, rotation, height)
        } else {
            PlacedShape::rectangle(center, width, breadth, rotation, height)
        });
    }
    let b = &cfg.bounds;
    let dynamics = (0..cfg.dynamic_count)
        .map(|_| {
            let x = rng.gen_range(b.min_x..b.max_x);
            let y = rng.gen_range(b.min_y..b.max_y);
            let heading = rng.gen_range(-PI..PI);
            let speed = rng.gen_range(cfg.dynamic_speed[0]..cfg.dynamic_speed[1]);
            let semi_x = 0.5 * rng.gen_range(cfg.extent[0]..cfg.extent[1]);
            let semi_y = 0.5 * rng.gen_range(cfg.extent[0]..cfg.extent[1]);
            let height = rng.gen_range(cfg.height[0]..cfg.height[1]);
            DynamicObstacle {
                shape: ShapeKind::Ellipse { semi_x, semi_y },
                pose: Pose2::new(x, y, heading),
                velocity: [speed * heading.cos(), speed * heading.sin()],
                height,
            }
        })
        .collect();
    Ok(WorldFile {
        bounds: cfg.bounds,
        resolution: cfg.resolution,
        shapes,
        dynamics,
    })
}

/// Rasterized static world for one seed.
pub fn generate_world(cfg: &WorldGenConfig, seed: u64) -> Result<OccupancyGrid, WorldGenError> {
    Ok(generate_world_file(cfg, seed)?.rasterize()?)
}

/// Unit quaternion uniform over the sphere of rotations.
pub fn uniform_quaternion(rng: &mut impl Rng) -> UnitQuaternion<f64> {
    loop {
        let v: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
        let q = Quaternion::new(v[0], v[1], v[2], v[3]);
        if q.norm() > 1e-6 {
            return UnitQuaternion::from_quaternion(q);
        }
    }
}

/// Joint values uniform within the limits; continuous joints over one turn.
pub fn uniform_joints(robot: &RobotModel, rng: &mut impl Rng) -> Vec<f64> {
    robot
        .joints
        .iter()
        .map(|j| match j.kind {
            JointKind::Continuous => rng.gen_range(-PI..PI),
            _ if j.limits[0] < j.limits[1] => rng.gen_range(j.limits[0]..j.limits[1]),
            _ => j.limits[0],
        })
        .collect()
}

/// Draws start, joints and goal until the task passes the solvability test:
/// the start footprint is collision free, a path exists on the map inflated
/// by the rejection radius, and the end-effector planner finds a motion.
pub fn sample_episode(
    cfg: &WorldGenConfig,
    world: &WorldFile,
    robot: &RobotModel,
    seed: u64,
) -> Result<EpisodeSpec, WorldGenError> {
    sample_episode_stream(cfg, world, robot, seed, 1)
}

fn sample_episode_stream(
    cfg: &WorldGenConfig,
    world: &WorldFile,
    robot: &RobotModel,
    seed: u64,
    stream_id: u64,
) -> Result<EpisodeSpec, WorldGenError> {
    cfg.validate()?;
    let grid = world.rasterize()?;
    let rejection = WeightMap::uniform(&inflate(&grid, cfg.rejection_radius, 0.0));
    let footprint = inflate(&grid, robot.footprint_radius, 0.0);
    let planning = robot.planning(&cfg.planner);
    let heights = cfg.goal_heights(robot);
    let ee_heights = robot.constraints.goal_height;
    let b = world.bounds;
    let r = robot.footprint_radius;
    if b.width() <= 2.0 * r || b.height() <= 2.0 * r {
        return Err(WorldGenError::Config(
            "map is smaller than the robot footprint".into(),
        ));
    }
    let mut rng = stream(seed, stream_id);

    for _ in 0..cfg.max_attempts {
        let start = Pose2::new(
            rng.gen_range(b.min_x + r..b.max_x - r),
            rng.gen_range(b.min_y + r..b.max_y - r),
            rng.gen_range(-PI..PI),
        );
        let joints = uniform_joints(robot, &mut rng);
        let distance = rng.gen_range(cfg.goal_distance[0]..cfg.goal_distance[1]);
        let direction = rng.gen_range(-PI..PI);
        let z = rng.gen_range(heights[0]..heights[1]);
        let orientation = uniform_quaternion(&mut rng);
        let goal = Pose3::new(
            Vector3::new(
                start.x + distance * direction.cos(),
                start.y + distance * direction.sin(),
                z,
            ),
            orientation,
        );

        if !b.contains(goal.position.x, goal.position.y) || footprint.get_world(start.x, start.y) {
            continue;
        }
        if check_base_collision(robot, &start, &grid, &world.dynamics) {
            continue;
        }
        let ee = forward_kinematics(robot, &start, &joints).expect("joint count matches");
        if ee.position.z < ee_heights[0] || ee.position.z > ee_heights[1] {
            continue;
        }
        let path = plan_path(
            &rejection,
            [start.x, start.y],
            [goal.position.x, goal.position.y],
            WeightMode::PerCellScaled,
        );
        if path.is_err() {
            continue;
        }
        if build_motion(
            MotionKind::Slerp,
            &grid,
            &start,
            &ee,
            &goal,
            &planning,
            &cfg.planner,
            seed,
        )
        .is_err()
        {
            continue;
        }
        return Ok(EpisodeSpec {
            robot: robot.name.clone(),
            seed,
            world: world.clone(),
            start,
            joints,
            goal,
        });
    }
    Err(WorldGenError::Unsolvable {
        attempts: cfg.max_attempts,
    })
}

/// World and episode for one seed, regenerating the world whenever the
/// rejection budget runs out.
pub fn generate_episode(
    cfg: &WorldGenConfig,
    robot: &RobotModel,
    seed: u64,
) -> Result<EpisodeSpec, WorldGenError> {
    for k in 0..cfg.max_worlds as u64 {
        let world = generate_world_stream(cfg, seed, 2 * k)?;
        match sample_episode_stream(cfg, &world, robot, seed, 2 * k + 1) {
            Err(WorldGenError::Unsolvable { .. }) => continue,
            other => return other,
        }
    }
    Err(WorldGenError::Unsolvable {
        attempts: cfg.max_worlds * cfg.max_attempts,
    })
}

/// Obstacle-free episode whose goal lies `length` meters from the start
/// end-effector position in a random horizontal direction, with the start
/// orientation kept. The base starts at the origin with a random heading and
/// mid-range joints.
pub fn straight_line_episode(
    robot: &RobotModel,
    length: f64,
    seed: u64,
) -> Result<EpisodeSpec, WorldGenError> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(WorldGenError::Config(
            "straight line length must be positive".into(),
        ));
    }
    let mut rng = stream(seed, 0);
    let start = Pose2::new(0.0, 0.0, rng.gen_range(-PI..PI));
    let joints = robot.mid_joints();
    let ee = forward_kinematics(robot, &start, &joints)
        .map_err(|e| WorldGenError::Config(e.to_string()))?;
    let direction: f64 = rng.gen_range(-PI..PI);
    let goal = Pose3::new(
        ee.position + Vector3::new(length * direction.cos(), length * direction.sin(), 0.0),
        ee.orientation,
    );
    let half = length + 2.0 * robot.arm_reach + robot.footprint_radius;
    Ok(EpisodeSpec {
        robot: robot.name.clone(),
        seed,
        world: WorldFile {
            bounds: Bounds::new(-half, -half, half, half),
            resolution: DEFAULT_RESOLUTION,
            shapes: Vec::new(),
            dynamics: Vec::new(),
        },
        start,
        joints,
        goal,
    })
}
