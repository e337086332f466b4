use serde::{Deserialize, Serialize};

use super::EnvConfig;
use crate::geometry::{d_rot, Pose3};

/// Reward terms of one step. `r_coll` holds the applied penalty (zero
/// without contact).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_ik: f64,
    pub r_coll: f64,
    pub r_vel: f64,
    pub r_acc: f64,
    pub n_vel: f64,
}

impl RewardBreakdown {
    /// Evaluates every term for one step.
    pub fn evaluate(
        cfg: &EnvConfig,
        desired: &Pose3,
        achieved: &Pose3,
        a_ee: f64,
        action: &[f64],
        previous: &[f64],
        collision: bool,
    ) -> RewardBreakdown {
        let r_ik = -(desired.position - achieved.position).norm_squared()
            - cfg.c_rot * d_rot(&desired.orientation, &achieved.orientation);
        let r_acc = -action
            .iter()
            .zip(previous)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>();
        RewardBreakdown {
            r_ik,
            r_coll: if collision { cfg.r_coll } else { 0.0 },
            r_vel: -(cfg.v_ee_max - a_ee).powi(2),
            r_acc,
            n_vel: a_ee / cfg.v_ee_max,
        }
    }

    /// `n_vel (lambda_ik r_ik + r_coll) + lambda_vel r_vel + lambda_acc r_acc`
    pub fn total(&self, cfg: &EnvConfig) -> f64 {
        self.n_vel * (cfg.lambda_ik * self.r_ik + self.r_coll)
            + cfg.lambda_vel * self.r_vel
            + cfg.lambda_acc * self.r_acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    #[default]
    None,
    Success,
    Deviation,
    CollisionBudget,
    /// The goal was reached after a base collision had been recorded.
    GoalWithCollision,
    MaxSteps,
}

impl Termination {
    pub fn is_terminal(&self) -> bool {
        *self != Termination::None
    }

    /// Whether a value learner should keep bootstrapping from the final
    /// state: true when the episode ends for reasons other than a violation.
    pub fn bootstrap(&self) -> bool {
        matches!(self, Termination::Success | Termination::MaxSteps)
    }
}

/// How violating steps count toward the budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationCounting {
    /// The counter resets on every clean step.
    #[default]
    Consecutive,
    Cumulative,
}

/// Running violation bookkeeping of an episode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationCounters {
    /// Violating steps counted toward the budget.
    pub budget_steps: usize,
    /// Steps with a base collision, ever.
    pub collisions: usize,
    /// Steps beyond the deviation limits, ever.
    pub deviations: usize,
}

impl ViolationCounters {
    pub fn record(&mut self, deviation: bool, collision: bool, counting: ViolationCounting) {
        self.collisions += usize::from(collision);
        self.deviations += usize::from(deviation);
        if deviation || collision {
            self.budget_steps += 1;
        } else if counting == ViolationCounting::Consecutive {
            self.budget_steps = 0;
        }
    }
}

/// Pose errors of a step against the plan and the goal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseErrors {
    pub deviation_position: f64,
    pub deviation_rotation: f64,
    pub goal_position: f64,
    pub goal_rotation: f64,
}

impl PoseErrors {
    pub fn new(achieved: &Pose3, desired: &Pose3, goal: &Pose3) -> PoseErrors {
        PoseErrors {
            deviation_position: (achieved.position - desired.position).norm(),
            deviation_rotation: d_rot(&achieved.orientation, &desired.orientation),
            goal_position: (achieved.position - goal.position).norm(),
            goal_rotation: d_rot(&achieved.orientation, &goal.orientation),
        }
    }

    pub fn deviates(&self, cfg: &EnvConfig) -> bool {
        self.deviation_position > cfg.deviation_position
            || self.deviation_rotation > cfg.deviation_rotation
    }

    pub fn at_goal(&self, cfg: &EnvConfig) -> bool {
        self.goal_position < cfg.success_position && self.goal_rotation < cfg.success_rotation
    }
}

/// Termination after `step` steps given the updated counters. Exhausting the
/// budget wins over reaching the goal; the step limit applies last.
pub fn classify_termination(
    cfg: &EnvConfig,
    counters: &ViolationCounters,
    errors: &PoseErrors,
    collision: bool,
    step: usize,
) -> (Termination, bool) {
    let cause = if counters.budget_steps > cfg.violation_budget {
        if errors.deviates(cfg) || !collision {
            Termination::Deviation
        } else {
            Termination::CollisionBudget
        }
    } else if errors.at_goal(cfg) {
        if counters.collisions == 0 {
            Termination::Success
        } else {
            Termination::GoalWithCollision
        }
    } else if step >= cfg.max_steps {
        Termination::MaxSteps
    } else {
        Termination::None
    };
    (cause, cause.bootstrap())
}
