use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use feasim::baseline::{GreedyConfig, GreedyPolicy};
use feasim::ee_motion::MotionKind;
use feasim::env::{run_episode, Env, EnvConfig, EpisodeLog, Policy, ReplayPolicy, Termination};
use feasim::robot::RobotModel;
use feasim::worldgen::{generate_episode, EpisodeSpec, WorldGenConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::manifest::{pick, Motion, PolicyKind, RunManifest, Seeds, Source};
use crate::{read, write_atomic, CliError, RunArgs};

/// Effective settings of `gen` and `run`.
pub struct Settings {
    pub robot: RobotModel,
    pub worldgen: WorldGenConfig,
    pub env: EnvConfig,
    pub motion: MotionKind,
    pub seeds: Seeds,
    pub out: PathBuf,
    pub policy: PolicyKind,
    pub episodes: Option<PathBuf>,
    pub replay: Option<PathBuf>,
}

fn load_robot(name: &str) -> Result<RobotModel, CliError> {
    if let Ok(robot) = RobotModel::builtin(name) {
        return Ok(robot);
    }
    let path = Path::new(name);
    RobotModel::from_toml(&read(path)?).map_err(|e| CliError::config(path, e))
}

fn report(name: &str, value: &dyn std::fmt::Display, source: Source) {
    eprintln!("  {name:<9} {value} ({source})");
}

/// Merges flags over the manifest and loads every referenced file. Prints
/// each effective setting with its source.
pub fn resolve(args: RunArgs) -> Result<Settings, CliError> {
    let file = match &args.manifest {
        Some(p) => RunManifest::load(p)?,
        None => RunManifest::default(),
    };
    eprintln!("settings (flag > manifest > default):");
    let (robot, src) = pick(args.robot, file.robot, Some("pr2".into()));
    let robot = robot.expect("defaulted");
    report("robot", &robot, src);
    let robot = load_robot(&robot)?;

    let (path, src) = pick(args.worldgen, file.worldgen, None);
    let worldgen = match &path {
        Some(p) => WorldGenConfig::from_toml(&read(p)?).map_err(|e| CliError::config(p, e))?,
        None => WorldGenConfig::default(),
    };
    report(
        "worldgen",
        &path.map_or("built-in".into(), |p| p.display().to_string()),
        src,
    );

    let (path, src) = pick(args.env, file.env, None);
    let env = match &path {
        Some(p) => EnvConfig::from_toml(&read(p)?).map_err(|e| CliError::config(p, e))?,
        None => EnvConfig::default(),
    };
    report(
        "env",
        &path.map_or("built-in".into(), |p| p.display().to_string()),
        src,
    );

    let (motion, src) = pick(args.motion, file.motion, Some(Motion::Slerp));
    let motion = motion.expect("defaulted");
    report("motion", &format!("{motion:?}").to_lowercase(), src);

    let (seeds, src) = pick(args.seeds, file.seeds, None);
    let seeds = seeds.ok_or_else(|| CliError::Usage("no seeds given; pass --seeds a..b".into()))?;
    report("seeds", &seeds, src);

    let (out, src) = pick(args.out, file.out, Some(PathBuf::from("out")));
    let out = out.expect("defaulted");
    report("out", &out.display(), src);

    let (policy, src) = pick(args.policy, file.policy, Some(PolicyKind::Greedy));
    let policy = policy.expect("defaulted");
    report("policy", &format!("{policy:?}").to_lowercase(), src);

    let (episodes, src) = pick(args.episodes, file.episodes, None);
    if let Some(p) = &episodes {
        report("episodes", &p.display(), src);
    }
    let (replay, src) = pick(args.replay, file.replay, None);
    if let Some(p) = &replay {
        report("replay", &p.display(), src);
    }
    if policy == PolicyKind::Replay && replay.is_none() {
        return Err(CliError::Usage(
            "the replay policy needs --replay <log dir>".into(),
        ));
    }
    Ok(Settings {
        robot,
        worldgen,
        env,
        motion: motion.into(),
        seeds,
        out,
        policy,
        episodes,
        replay,
    })
}

pub fn episode_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("episode_{seed:06}.toml"))
}

pub fn log_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("log_{seed:06}.jsonl"))
}

pub fn gen(s: &Settings) -> Result<(), CliError> {
    s.worldgen
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let seeds: Vec<u64> = s.seeds.0.clone().collect();
    let failures: Vec<String> = seeds
        .par_iter()
        .map(|&seed| {
            let spec = generate_episode(&s.worldgen, &s.robot, seed)
                .map_err(|e| format!("seed {seed}: {e}"))?;
            write_atomic(&episode_path(&s.out, seed), &spec.to_toml()).map_err(|e| e.to_string())
        })
        .filter_map(Result::err)
        .collect();
    for f in &failures {
        eprintln!("error: {f}");
    }
    println!(
        "wrote {} episodes to {}",
        seeds.len() - failures.len(),
        s.out.display()
    );
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Runtime(format!(
            "{} of {} seeds failed",
            failures.len(),
            seeds.len()
        )))
    }
}

#[derive(Debug, Serialize)]
struct EpisodeRow {
    seed: u64,
    termination: Option<Termination>,
    steps: usize,
    episode_return: f64,
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct Summary {
    robot: String,
    policy: String,
    episodes: usize,
    errors: usize,
    success_rate: f64,
    mean_length: f64,
    rows: Vec<EpisodeRow>,
}

/// Policy and episode for one seed.
fn prepare(
    s: &Settings,
    seed: u64,
) -> Result<(Box<dyn Policy>, EpisodeSpec, MotionKind, EnvConfig), String> {
    if let Some(dir) = &s.replay {
        let path = log_path(dir, seed);
        let text =
            std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        let log = EpisodeLog::from_jsonl(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let policy = ReplayPolicy::from_log(&log, &s.robot)
            .map_err(|e| format!("{}: {e}", path.display()))?;
        // A replay reproduces the recorded episode under its recorded settings.
        return Ok((
            Box::new(policy),
            log.header.episode,
            log.header.motion,
            log.header.env,
        ));
    }
    let spec = match &s.episodes {
        Some(dir) => {
            let path = episode_path(dir, seed);
            let text =
                std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            EpisodeSpec::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => generate_episode(&s.worldgen, &s.robot, seed).map_err(|e| e.to_string())?,
    };
    let policy = GreedyPolicy::new(&s.robot, s.env.v_ee_max, GreedyConfig::default());
    Ok((Box::new(policy), spec, s.motion, s.env.clone()))
}

/// Log of one episode and the wall time of its rollout.
type Outcome = (EpisodeLog, Duration);

fn run_seed(s: &Settings, seed: u64) -> Result<Outcome, String> {
    let (mut policy, spec, motion, cfg) = prepare(s, seed)?;
    spec.check_robot(&s.robot).map_err(|e| e.to_string())?;
    let mut env = Env::new(s.robot.clone(), cfg).map_err(|e| e.to_string())?;
    let t = Instant::now();
    let log = run_episode(&mut env, &spec, motion, policy.as_mut()).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    write_atomic(&log_path(&s.out, seed), &log.to_jsonl()).map_err(|e| e.to_string())?;
    Ok((log, elapsed))
}

pub fn run(s: &Settings) -> Result<(), CliError> {
    s.env
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    if s.policy == PolicyKind::Greedy && s.replay.is_some() {
        eprintln!("note: --replay is ignored by the greedy policy");
    }
    let start = Instant::now();
    let seeds: Vec<u64> = s.seeds.0.clone().collect();
    let results: Vec<(u64, Result<Outcome, String>)> = seeds
        .par_iter()
        .map(|&seed| (seed, run_seed(s, seed)))
        .collect();

    let mut rows = Vec::new();
    let (mut steps, mut step_time, mut successes, mut completed) =
        (0usize, Duration::ZERO, 0usize, 0usize);
    for (seed, r) in results {
        match r {
            Ok((log, t)) => {
                completed += 1;
                steps += log.steps.len();
                step_time += t;
                successes += usize::from(log.success());
                rows.push(EpisodeRow {
                    seed,
                    termination: Some(log.termination()),
                    steps: log.steps.len(),
                    episode_return: log.episode_return(),
                    error: None,
                });
            }
            Err(e) => {
                eprintln!("error: seed {seed}: {e}");
                rows.push(EpisodeRow {
                    seed,
                    termination: None,
                    steps: 0,
                    episode_return: 0.0,
                    error: Some(e),
                });
            }
        }
    }
    let episodes = rows.len();
    let errors = episodes - completed;
    let summary = Summary {
        robot: s.robot.name.clone(),
        policy: format!("{:?}", s.policy).to_lowercase(),
        episodes,
        errors,
        success_rate: successes as f64 / episodes as f64,
        mean_length: if completed > 0 {
            steps as f64 / completed as f64
        } else {
            0.0
        },
        rows,
    };
    let json = serde_json::to_string_pretty(&summary).expect("plain data") + "\n";
    write_atomic(&s.out.join("summary.json"), &json)?;

    println!(
        "{:<10} {:>8} {:>12} {:>12} {:>14} {:>10}",
        "robot", "episodes", "success", "mean steps", "ms per step", "wall s"
    );
    println!(
        "{:<10} {:>8} {:>12.3} {:>12.1} {:>14.3} {:>10.2}",
        summary.robot,
        episodes,
        summary.success_rate,
        summary.mean_length,
        if steps > 0 {
            step_time.as_secs_f64() * 1e3 / steps as f64
        } else {
            0.0
        },
        start.elapsed().as_secs_f64()
    );
    if errors > 0 {
        return Err(CliError::Runtime(format!(
            "{errors} of {episodes} episodes failed"
        )));
    }
    Ok(())
}
