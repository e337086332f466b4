use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Action, Env, EnvConfig, EnvError, Observation, RewardBreakdown, Termination};
use crate::ee_motion::MotionKind;
use crate::geometry::{Pose2, Pose3};
use crate::robot::RobotModel;
use crate::worldgen::EpisodeSpec;

/// Maps observations to actions.
pub trait Policy {
    fn act(&mut self, obs: &Observation) -> Action;
}

impl<F: FnMut(&Observation) -> Action> Policy for F {
    fn act(&mut self, obs: &Observation) -> Action {
        self(obs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub robot: String,
    pub motion: MotionKind,
    pub seed: u64,
    pub gamma: f64,
    pub env: EnvConfig,
    pub episode: EpisodeSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    /// Clamped flat action that was applied.
    pub action: Vec<f64>,
    pub reward: f64,
    pub breakdown: RewardBreakdown,
    pub ee_desired: Pose3,
    pub ee_achieved: Pose3,
    pub base_pose: Pose2,
    pub collision: bool,
    pub ik_ok: bool,
    pub termination: Termination,
    pub bootstrap: bool,
}

/// One JSONL line. Records are parsed one at a time, so the size gap is harmless.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum LogRecord {
    Header(LogHeader),
    Step(StepRecord),
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("log has no header record")]
    MissingHeader,
}

/// One episode: a header then one record per step.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub header: LogHeader,
    pub steps: Vec<StepRecord>,
}

impl EpisodeLog {
    pub fn episode_return(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    pub fn termination(&self) -> Termination {
        self.steps
            .last()
            .map_or(Termination::None, |s| s.termination)
    }

    pub fn success(&self) -> bool {
        self.termination() == Termination::Success
    }

    pub fn to_jsonl(&self) -> String {
        let mut out =
            serde_json::to_string(&LogRecord::Header(self.header.clone())).expect("plain data");
        out.push('\n');
        for s in &self.steps {
            out.push_str(&serde_json::to_string(&LogRecord::Step(s.clone())).expect("plain data"));
            out.push('\n');
        }
        out
    }

    /// Parses a log; errors carry the 1-based line number.
    pub fn from_jsonl(text: &str) -> Result<EpisodeLog, LogError> {
        let mut header = None;
        let mut steps = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: LogRecord = serde_json::from_str(line).map_err(|e| LogError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            match rec {
                LogRecord::Header(h) if header.is_none() && steps.is_empty() => header = Some(h),
                LogRecord::Header(_) => {
                    return Err(LogError::Parse {
                        line: i + 1,
                        message: "unexpected second header".into(),
                    })
                }
                LogRecord::Step(_) if header.is_none() => return Err(LogError::MissingHeader),
                LogRecord::Step(s) => steps.push(s),
            }
        }
        Ok(EpisodeLog {
            header: header.ok_or(LogError::MissingHeader)?,
            steps,
        })
    }
}

/// Runs `policy` from reset until termination.
pub fn run_episode(
    env: &mut Env,
    spec: &EpisodeSpec,
    kind: MotionKind,
    policy: &mut dyn Policy,
) -> Result<EpisodeLog, EnvError> {
    let mut obs = env.reset(spec, kind)?;
    let header = LogHeader {
        robot: env.robot().name.clone(),
        motion: kind,
        seed: spec.seed,
        gamma: env.config().gamma,
        env: env.config().clone(),
        episode: spec.clone(),
    };
    let mut steps = Vec::new();
    loop {
        let action = policy.act(&obs);
        let r = env.step(&action)?;
        steps.push(StepRecord {
            step: r.info.step,
            action: r.action.to_flat(env.robot()),
            reward: r.reward,
            breakdown: r.breakdown,
            ee_desired: r.info.ee_desired,
            ee_achieved: r.info.ee_achieved,
            base_pose: r.info.base,
            collision: r.info.collision,
            ik_ok: r.info.ik_ok,
            termination: r.cause,
            bootstrap: r.bootstrap,
        });
        if r.terminated {
            break;
        }
        obs = r.observation;
    }
    Ok(EpisodeLog { header, steps })
}

/// Replays the actions of a recorded episode; zero actions once exhausted.
#[derive(Debug, Clone)]
pub struct ReplayPolicy {
    actions: Vec<Action>,
    next: usize,
}

impl ReplayPolicy {
    pub fn new(actions: Vec<Action>) -> ReplayPolicy {
        ReplayPolicy { actions, next: 0 }
    }

    pub fn from_log(log: &EpisodeLog, robot: &RobotModel) -> Result<ReplayPolicy, EnvError> {
        let actions = log
            .steps
            .iter()
            .map(|s| Action::from_flat(robot, &s.action))
            .collect::<Result<_, _>>()?;
        Ok(ReplayPolicy::new(actions))
    }
}

impl Policy for ReplayPolicy {
    fn act(&mut self, _obs: &Observation) -> Action {
        let a = self.actions.get(self.next).copied().unwrap_or_default();
        self.next += 1;
        a
    }
}
