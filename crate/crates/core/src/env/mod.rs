//! The agent-facing environment: action application, kinematic rollout,
//! rewards, termination and episode logging.

mod action;
mod log;
mod observation;
mod reward;

pub use action::Action;
pub use log::{
    run_episode, EpisodeLog, LogError, LogHeader, LogRecord, Policy, ReplayPolicy, StepRecord,
};
pub use observation::{Observation, ObservationLayout, Segment};
pub use reward::{
    classify_termination, PoseErrors, RewardBreakdown, Termination, ViolationCounters,
    ViolationCounting,
};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ee_motion::{
    build_motion, next_velocity, replan, EEMotionPlan, MotionError, MotionKind, MotionQuery,
    PlannerConfig, RobotPlanning,
};
use crate::geometry::{transform_to_frame, Pose2, Pose3};
use crate::gridmap::{advance_dynamics, extract_local, DynamicObstacle, GridError, OccupancyGrid};
use crate::robot::{
    check_base_collision, forward_kinematics, integrate_base, solve_ik, RobotError, RobotModel,
};
use crate::worldgen::EpisodeSpec;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid env config: {0}")]
    Config(String),
    #[error("episode infeasible: {0}")]
    Infeasible(MotionError),
    #[error("motion query failed: {0}")]
    Motion(MotionError),
    #[error(transparent)]
    Robot(#[from] RobotError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("action has {got} components, expected {expected}")]
    ActionLength { expected: usize, got: usize },
    #[error("{0}")]
    Contract(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    /// Control period (s).
    pub dt: f64,
    pub lambda_ik: f64,
    pub c_rot: f64,
    pub lambda_vel: f64,
    pub lambda_acc: f64,
    /// Penalty per step in base collision.
    pub r_coll: f64,
    /// Upper end of the `a_ee` action (m/s).
    pub v_ee_max: f64,
    /// Goal tolerances for success (m, d_rot).
    pub success_position: f64,
    pub success_rotation: f64,
    /// Tolerated distance of the achieved from the desired pose (m, d_rot).
    pub deviation_position: f64,
    pub deviation_rotation: f64,
    /// Violating steps tolerated before early termination.
    pub violation_budget: usize,
    pub violation_counting: ViolationCounting,
    pub max_steps: usize,
    /// Discount of the learner; only recorded in logs.
    pub gamma: f64,
    /// Replan map-aware motions whenever moving obstacles change the map.
    pub replan: bool,
    pub planner: PlannerConfig,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            lambda_ik: 50.0,
            c_rot: 2.0,
            lambda_vel: 0.1,
            lambda_acc: 0.05,
            r_coll: -10.0,
            v_ee_max: 0.2,
            success_position: 0.025,
            success_rotation: 0.05,
            deviation_position: 0.10,
            deviation_rotation: 0.05,
            violation_budget: 20,
            violation_counting: ViolationCounting::Consecutive,
            max_steps: 3000,
            gamma: 0.99,
            replan: true,
            planner: PlannerConfig::default(),
        }
    }
}

impl EnvConfig {
    pub fn from_toml(text: &str) -> Result<Self, EnvError> {
        let cfg: EnvConfig = toml::from_str(text).map_err(|e| EnvError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("env config is always representable")
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let positive = [
            ("dt", self.dt),
            ("lambda_ik", self.lambda_ik),
            ("c_rot", self.c_rot),
            ("lambda_vel", self.lambda_vel),
            ("lambda_acc", self.lambda_acc),
            ("v_ee_max", self.v_ee_max),
            ("success_position", self.success_position),
            ("success_rotation", self.success_rotation),
            ("deviation_position", self.deviation_position),
            ("deviation_rotation", self.deviation_rotation),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(EnvError::Config(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.r_coll < 0.0) {
            return Err(EnvError::Config(format!(
                "r_coll must be negative, got {}",
                self.r_coll
            )));
        }
        if self.max_steps == 0 {
            return Err(EnvError::Config("max_steps must be positive".into()));
        }
        Ok(())
    }
}

/// Diagnostics of a step beyond the reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub step: usize,
    /// World-frame desired and achieved end-effector poses.
    pub ee_desired: Pose3,
    pub ee_achieved: Pose3,
    pub base: Pose2,
    pub collision: bool,
    pub ik_ok: bool,
    pub errors: PoseErrors,
    /// Arc position of the desired pose on the active plan.
    pub arc: f64,
    pub replanned: bool,
    /// A replan was needed but found no path; the previous plan was kept.
    pub blocked: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub breakdown: RewardBreakdown,
    pub terminated: bool,
    pub cause: Termination,
    pub bootstrap: bool,
    pub action: Action,
    pub info: StepInfo,
}

struct Episode {
    kind: MotionKind,
    goal: Pose3,
    grid: OccupancyGrid,
    dynamics: Vec<DynamicObstacle>,
    /// Map the active plan was built on, when obstacles move.
    planned_on: Option<OccupancyGrid>,
    plan: EEMotionPlan,
    arc: f64,
    base: Pose2,
    joints: Vec<f64>,
    achieved: Pose3,
    previous_action: Vec<f64>,
    counters: ViolationCounters,
    step: usize,
    terminated: bool,
}

/// One environment instance; owns its episode state.
pub struct Env {
    robot: RobotModel,
    cfg: EnvConfig,
    planning: RobotPlanning,
    episode: Option<Episode>,
}

impl Env {
    pub fn new(robot: RobotModel, cfg: EnvConfig) -> Result<Env, EnvError> {
        cfg.validate()?;
        robot.validate()?;
        let planning = robot.planning(&cfg.planner);
        Ok(Env {
            robot,
            cfg,
            planning,
            episode: None,
        })
    }

    pub fn robot(&self) -> &RobotModel {
        &self.robot
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn layout(&self) -> ObservationLayout {
        ObservationLayout::for_robot(&self.robot)
    }

    /// Starts an episode: builds the motion plan from the start end-effector
    /// pose and clears the previous action.
    pub fn reset(&mut self, spec: &EpisodeSpec, kind: MotionKind) -> Result<Observation, EnvError> {
        if spec.joints.len() != self.robot.dof() {
            return Err(EnvError::Config(format!(
                "episode has {} joints, robot {} has {}",
                spec.joints.len(),
                self.robot.name,
                self.robot.dof()
            )));
        }
        let grid = spec.world.rasterize()?;
        let dynamics = spec.world.dynamics.clone();
        let mut joints = spec.joints.clone();
        self.robot.clamp_joints(&mut joints);
        let ee = forward_kinematics(&self.robot, &spec.start, &joints)?;
        let stamped = grid.with_dynamics(&dynamics);
        let plan = build_motion(
            kind,
            &stamped,
            &spec.start,
            &ee,
            &spec.goal,
            &self.planning,
            &self.cfg.planner,
            spec.seed,
        )
        .map_err(EnvError::Infeasible)?;
        self.episode = Some(Episode {
            kind,
            goal: *plan.goal(),
            planned_on: (!dynamics.is_empty()).then_some(stamped),
            grid,
            dynamics,
            plan,
            arc: 0.0,
            base: spec.start,
            joints,
            achieved: ee,
            previous_action: vec![0.0; Action::flat_len(&self.robot)],
            counters: ViolationCounters::default(),
            step: 0,
            terminated: false,
        });
        self.observe()
    }

    fn episode(&self) -> Result<&Episode, EnvError> {
        self.episode
            .as_ref()
            .ok_or(EnvError::Contract("reset must be called before step"))
    }

    pub fn plan(&self) -> Option<&EEMotionPlan> {
        self.episode.as_ref().map(|e| &e.plan)
    }

    pub fn base(&self) -> Option<Pose2> {
        self.episode.as_ref().map(|e| e.base)
    }

    pub fn joints(&self) -> Option<&[f64]> {
        self.episode.as_ref().map(|e| e.joints.as_slice())
    }

    pub fn dynamics(&self) -> Option<&[DynamicObstacle]> {
        self.episode.as_ref().map(|e| e.dynamics.as_slice())
    }

    /// Observation of the current state.
    pub fn observe(&self) -> Result<Observation, EnvError> {
        let ep = self.episode()?;
        let cfg = &self.cfg;
        let query = MotionQuery {
            current: ep.plan.pose_at(ep.arc),
            velocity: Vector3::zeros(),
            step_length: cfg.v_ee_max * cfg.dt,
            arc_hint: Some(ep.arc),
        };
        let m = next_velocity(
            &ep.plan,
            &query,
            cfg.dt,
            cfg.planner.lookahead,
            f64::INFINITY,
        )
        .map_err(EnvError::Motion)?;
        let to_base = ep.base.to_isometry().rotation.inverse();
        let v = to_base * m.velocity;
        let w = to_base * m.angular_velocity;
        Ok(Observation {
            maps: extract_local(&ep.grid, &ep.dynamics, &ep.base),
            joints: ep.joints.clone(),
            ee_velocity: [v.x, v.y, v.z, w.x, w.y, w.z],
            desired_pose: transform_to_frame(&m.next_pose, &ep.base),
            intermediate_goal: transform_to_frame(&m.intermediate_goal, &ep.base),
            previous_action: ep.previous_action.clone(),
        })
    }

    /// Applies one action: advance the plan by `a_ee * dt` (replanning first
    /// if obstacles moved), integrate base and torso, solve the arm, score the
    /// step, update the violation budget, then move the obstacles.
    pub fn step(&mut self, action: &Action) -> Result<StepResult, EnvError> {
        let robot = &self.robot;
        let cfg = &self.cfg;
        let ep = self
            .episode
            .as_mut()
            .ok_or(EnvError::Contract("reset must be called before step"))?;
        if ep.terminated {
            return Err(EnvError::Contract(
                "step called after the episode terminated",
            ));
        }
        let a = action.clamped(robot, cfg.v_ee_max);
        let flat = a.to_flat(robot);

        let (mut replanned, mut blocked) = (false, false);
        if cfg.replan && ep.kind != MotionKind::Spline {
            if let Some(prev) = &ep.planned_on {
                let stamped = ep.grid.with_dynamics(&ep.dynamics);
                if stamped != *prev {
                    let here = ep.plan.pose_at(ep.arc);
                    match replan(
                        &ep.plan,
                        &stamped,
                        &ep.base,
                        &here,
                        &self.planning,
                        &cfg.planner,
                    ) {
                        Ok(p) => {
                            ep.plan = p;
                            ep.arc = 0.0;
                            ep.planned_on = Some(stamped);
                            replanned = true;
                        }
                        Err(_) => blocked = true,
                    }
                }
            }
        }
        let query = MotionQuery {
            current: ep.plan.pose_at(ep.arc),
            velocity: Vector3::zeros(),
            step_length: a.a_ee * cfg.dt,
            arc_hint: Some(ep.arc),
        };
        let m = next_velocity(
            &ep.plan,
            &query,
            cfg.dt,
            cfg.planner.lookahead,
            f64::INFINITY,
        )
        .map_err(EnvError::Motion)?;
        let desired = m.next_pose;
        ep.arc = m.next_arc;

        let cmd = a.velocity_command(robot).clamped(robot);
        let base_next = integrate_base(robot, &ep.base, &cmd, cfg.dt);
        let ik = solve_ik(robot, &base_next, &ep.joints, cmd.torso, &desired, cfg.dt)?;
        ep.base = base_next;
        ep.joints = ik.joints;
        ep.achieved = ik.achieved;

        let collision = check_base_collision(robot, &ep.base, &ep.grid, &ep.dynamics);
        let breakdown = RewardBreakdown::evaluate(
            cfg,
            &desired,
            &ep.achieved,
            a.a_ee,
            &flat,
            &ep.previous_action,
            collision,
        );
        let reward = breakdown.total(cfg);
        let errors = PoseErrors::new(&ep.achieved, &desired, &ep.goal);
        ep.counters
            .record(errors.deviates(cfg), collision, cfg.violation_counting);
        ep.step += 1;
        let (cause, bootstrap) =
            classify_termination(cfg, &ep.counters, &errors, collision, ep.step);
        ep.terminated = cause.is_terminal();

        if !ep.dynamics.is_empty() {
            let bounds = ep.grid.geometry().bounds();
            ep.dynamics = advance_dynamics(&ep.dynamics, cfg.dt, &bounds);
        }
        ep.previous_action = flat;
        let info = StepInfo {
            step: ep.step,
            ee_desired: desired,
            ee_achieved: ep.achieved,
            base: ep.base,
            collision,
            ik_ok: ik.ok,
            errors,
            arc: ep.arc,
            replanned,
            blocked,
        };
        Ok(StepResult {
            observation: self.observe()?,
            reward,
            breakdown,
            terminated: cause.is_terminal(),
            cause,
            bootstrap,
            action: a,
            info,
        })
    }
}
