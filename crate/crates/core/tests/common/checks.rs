//! Property checks shared by the per-module tests and the acceptance report.
//! Each returns a one-line summary on success and the first violation on
//! failure.

use std::time::{Duration, Instant};

use feasim::baseline::{GreedyConfig, GreedyPolicy};
use feasim::ee_motion::{
    build_weights, plan_cells, MotionKind, PlannerConfig, WeightMap, WeightMode,
};
use feasim::env::{run_episode, Action, Env, EnvConfig, EpisodeLog, Policy, RewardBreakdown};
use feasim::geometry::{Pose2, Pose3};
use feasim::gridmap::{inflate, DynamicObstacle, GridGeometry, OccupancyGrid, ShapeKind};
use feasim::robot::{forward_kinematics, solve_ik, RobotModel};
use feasim::worldgen::{generate_episode, straight_line_episode, EpisodeSpec, WorldGenConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracle;

pub type Check = Result<String, String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn unit_grid(w: usize, h: usize, resolution: f64) -> GridGeometry {
    GridGeometry::new(resolution, Pose2::identity(), w, h).unwrap()
}

/// Random 32x32 weighted grids: A* cost equals the Dijkstra oracle.
pub fn astar_matches_dijkstra(cases: u64) -> Check {
    let t = Instant::now();
    let (mut solved, mut unsolvable) = (0, 0);
    for seed in 0..cases {
        let mut r = rng(seed);
        let n = 32;
        let geom = unit_grid(n, n, 1.0);
        let weights: Vec<f64> = (0..n * n)
            .map(|_| {
                if r.gen_bool(0.5) {
                    0.0
                } else {
                    r.gen_range(0.0..10.0)
                }
            })
            .collect();
        let blocked: Vec<bool> = (0..n * n).map(|_| r.gen_bool(0.2)).collect();
        let free_cell = |r: &mut ChaCha8Rng| loop {
            let c = (r.gen_range(0..n), r.gen_range(0..n));
            if !blocked[c.1 * n + c.0] {
                return c;
            }
        };
        let (s, g) = (free_cell(&mut r), free_cell(&mut r));
        let mode = if seed % 2 == 0 {
            WeightMode::PerCellScaled
        } else {
            WeightMode::PerCellFlat
        };
        let map = WeightMap::new(geom, weights.clone(), blocked.clone());
        let astar = plan_cells(&map, s, g, mode).ok();
        let expected = oracle::dijkstra(&weights, &blocked, n, n, s, g, mode);
        match (&astar, expected) {
            (Some(p), Some(cost)) => {
                if p.cost != cost {
                    return Err(format!(
                        "seed {seed}: A* cost {} != Dijkstra {cost}",
                        p.cost
                    ));
                }
                let walked = oracle::path_cost(&weights, &blocked, n, &p.cells, mode)
                    .ok_or_else(|| format!("seed {seed}: A* returned an invalid path"))?;
                if walked != p.cost || p.cells.first() != Some(&s) || p.cells.last() != Some(&g) {
                    return Err(format!("seed {seed}: path does not realize its cost"));
                }
                solved += 1;
            }
            (None, None) => unsolvable += 1,
            _ => {
                return Err(format!(
                    "seed {seed}: A* {:?} vs Dijkstra {expected:?}",
                    astar.map(|p| p.cost)
                ))
            }
        }
    }
    let elapsed = t.elapsed();
    if elapsed > Duration::from_secs(5) {
        return Err(format!("{cases} grids took {elapsed:?}"));
    }
    Ok(format!(
        "{solved} equal costs, {unsolvable} agreed unsolvable, {elapsed:.2?}"
    ))
}

/// Obstacle box `(x0, y0, x1, y1, height)` in cells, inclusive.
type CellBox = (usize, usize, usize, usize, f64);

/// Obstacle layouts of the weight fixtures.
fn weight_layouts() -> Vec<Vec<CellBox>> {
    vec![
        vec![],
        vec![(38, 10, 41, 69, 2.0)],
        vec![(30, 30, 49, 49, 0.4)],
        vec![(55, 55, 62, 62, 2.0), (20, 40, 30, 45, 0.6)],
        vec![(10, 50, 70, 53, 2.0), (45, 20, 48, 35, 2.0)],
    ]
}

/// Hand-built maps: every cell weight equals direct evaluation of the
/// indicator "near a tall obstacle or outside the base corridor".
pub fn weight_fixtures() -> Check {
    let robot = RobotModel::hsr();
    let cfg = PlannerConfig::default();
    let planning = robot.planning(&cfg);
    let endpoints = [
        ((0.5, 0.5), (3.5, 3.5)),
        ((0.5, 3.5), (3.5, 0.5)),
        ((0.4, 2.0), (3.6, 2.0)),
        ((3.5, 1.5), (0.6, 3.4)),
    ];
    let res = 0.05;
    let mut fixtures = 0;
    let mut checked = 0usize;
    for (k, layout) in weight_layouts().iter().enumerate() {
        for (e, (s, g)) in endpoints.iter().enumerate() {
            let geom = unit_grid(80, 80, res);
            let mut grid = OccupancyGrid::empty(geom);
            for &(x0, y0, x1, y1, h) in layout {
                for iy in y0..=y1 {
                    for ix in x0..=x1 {
                        grid.set_height(ix, iy, h);
                    }
                }
            }
            let start = Pose2::new(s.0, s.1, 0.0);
            let goal = Pose3::new(nalgebra::Vector3::new(g.0, g.1, 0.8), Default::default());
            let layers = build_weights(&grid, &start, &goal, &planning, &cfg)
                .map_err(|err| format!("layout {k} endpoints {e}: {err}"))?;
            let tall: Vec<bool> = grid.cells().iter().map(|h| *h > planning.max_z).collect();
            let mut on_path = vec![false; geom.len()];
            for &(x, y) in &layers.base_path.cells {
                on_path[geom.index(x, y)] = true;
            }
            let near_tall = oracle::brute_inflate(&tall, geom.width, geom.height, res, cfg.d_ee);
            let corridor =
                oracle::brute_inflate(&on_path, geom.width, geom.height, res, planning.d_base);
            for i in 0..geom.len() {
                let expected = if near_tall[i] || !corridor[i] {
                    cfg.weight_factor
                } else {
                    0.0
                };
                if layers.weights.weights()[i] != expected {
                    let (x, y) = geom.coords(i);
                    return Err(format!(
                        "layout {k} endpoints {e}: cell ({x}, {y}) weight {}",
                        layers.weights.weights()[i]
                    ));
                }
                checked += 1;
            }
            fixtures += 1;
        }
    }
    Ok(format!("{fixtures} fixtures, {checked} cells equal"))
}

/// Random 20x20 grids: inflation equals brute-force Euclidean thresholding
/// and grows with the radius.
pub fn inflation_matches_brute_force(cases: u64) -> Check {
    let res = 0.1;
    let mut pairs = 0;
    for seed in 0..cases {
        let mut r = rng(1000 + seed);
        let n = 20;
        let cells: Vec<f64> = (0..n * n)
            .map(|_| {
                if r.gen_bool(0.1) {
                    r.gen_range(0.1..2.0)
                } else {
                    0.0
                }
            })
            .collect();
        let grid = OccupancyGrid::from_cells(unit_grid(n, n, res), cells.clone()).unwrap();
        let seeds: Vec<bool> = cells.iter().map(|h| *h > 0.0).collect();
        let mut radii: Vec<f64> = (0..4).map(|_| r.gen_range(0.0..0.6)).collect();
        radii.push(0.0);
        radii.sort_by(f64::total_cmp);
        let masks: Vec<Vec<bool>> = radii
            .iter()
            .map(|rad| inflate(&grid, *rad, 0.0).cells().to_vec())
            .collect();
        for (rad, mask) in radii.iter().zip(&masks) {
            if *mask != oracle::brute_inflate(&seeds, n, n, res, *rad) {
                return Err(format!(
                    "seed {seed}: radius {rad} differs from brute force"
                ));
            }
        }
        for a in 0..masks.len() {
            for b in a + 1..masks.len() {
                if masks[a].iter().zip(&masks[b]).any(|(x, y)| *x && !*y) {
                    return Err(format!(
                        "seed {seed}: radius {} not inside radius {}",
                        radii[a], radii[b]
                    ));
                }
                pairs += 1;
            }
        }
    }
    Ok(format!(
        "{cases} grids exact, {pairs} radius pairs monotone"
    ))
}

/// Accepted episodes re-checked with an independent inflation and search.
pub fn worldgen_sound(episodes: u64) -> Check {
    let cfg = WorldGenConfig::default();
    let robots = [RobotModel::pr2(), RobotModel::hsr(), RobotModel::tiago()];
    let t = Instant::now();
    for seed in 0..episodes {
        let robot = &robots[(seed % 3) as usize];
        let spec = generate_episode(&cfg, robot, seed).map_err(|e| format!("seed {seed}: {e}"))?;
        let grid = spec.world.rasterize().unwrap();
        let g = *grid.geometry();
        let obstacles: Vec<bool> = grid.cells().iter().map(|h| *h > 0.0).collect();
        let blocked = oracle::brute_inflate(
            &obstacles,
            g.width,
            g.height,
            g.resolution,
            cfg.rejection_radius,
        );
        let s = g
            .world_to_cell(spec.start.x, spec.start.y)
            .ok_or(format!("seed {seed}: start off map"))?;
        let e = g
            .world_to_cell(spec.goal.position.x, spec.goal.position.y)
            .ok_or(format!("seed {seed}: goal off map"))?;
        if !super::reachable(&blocked, g.width, s, e) {
            return Err(format!(
                "seed {seed}: no path at {} m inflation",
                cfg.rejection_radius
            ));
        }
        let d = (spec.goal.position.x - spec.start.x).hypot(spec.goal.position.y - spec.start.y);
        if !(0.5..=5.0).contains(&d) {
            return Err(format!("seed {seed}: goal distance {d}"));
        }
    }
    Ok(format!(
        "{episodes} episodes re-checked in {:.1?}",
        t.elapsed()
    ))
}

/// Targets one velocity-limited step away are recovered without any joint
/// moving faster than its limit.
pub fn ik_round_trips(cases: u64) -> Check {
    let robots = [RobotModel::pr2(), RobotModel::hsr(), RobotModel::tiago()];
    let dt = 0.1;
    let (mut worst_p, mut worst_r) = (0.0f64, 0.0f64);
    for seed in 0..cases {
        let robot = &robots[(seed % 3) as usize];
        let mut r = rng(5000 + seed);
        let vmax = robot.max_velocities();
        let q: Vec<f64> = robot
            .joints
            .iter()
            .zip(&vmax)
            .map(|(j, v)| {
                if j.is_bounded() {
                    let margin = (v * dt).min(0.25 * (j.limits[1] - j.limits[0]));
                    r.gen_range(j.limits[0] + margin..=j.limits[1] - margin)
                } else {
                    r.gen_range(-3.0..3.0)
                }
            })
            .collect();
        let moved: Vec<f64> = q
            .iter()
            .zip(&vmax)
            .zip(&robot.joints)
            .map(|((qi, v), j)| j.clamp(qi + r.gen_range(-0.9..0.9) * v * dt))
            .collect();
        let base = Pose2::new(
            r.gen_range(-2.0..2.0),
            r.gen_range(-2.0..2.0),
            r.gen_range(-3.0..3.0),
        );
        let target = forward_kinematics(robot, &base, &moved).unwrap();
        let ik = solve_ik(robot, &base, &q, None, &target, dt).unwrap();
        let rot = feasim::geometry::d_rot(&target.orientation, &ik.achieved.orientation);
        worst_p = worst_p.max(ik.position_error);
        worst_r = worst_r.max(rot);
        if ik.position_error > 1e-3 || rot > 1e-4 {
            return Err(format!(
                "{} case {seed}: position {:.2e}, d_rot {rot:.2e}",
                robot.name, ik.position_error
            ));
        }
        for (i, (a, b)) in ik.joints.iter().zip(&q).enumerate() {
            if (a - b).abs() > vmax[i] * dt + 1e-12 {
                return Err(format!(
                    "{} case {seed}: joint {i} moved {}",
                    robot.name,
                    (a - b).abs()
                ));
            }
        }
    }
    Ok(format!(
        "{cases} targets, worst position {worst_p:.1e} m, worst d_rot {worst_r:.1e}"
    ))
}

/// Reward of one logged step evaluated by hand from the published formulas.
pub fn reward_oracle(
    cfg: &EnvConfig,
    desired: &Pose3,
    achieved: &Pose3,
    action: &[f64],
    previous: &[f64],
    collision: bool,
) -> f64 {
    let dp = desired.position - achieved.position;
    let (a, b) = (
        desired.orientation.quaternion(),
        achieved.orientation.quaternion(),
    );
    let dot = a.w * b.w + a.i * b.i + a.j * b.j + a.k * b.k;
    let r_ik = -(dp.x * dp.x + dp.y * dp.y + dp.z * dp.z) - cfg.c_rot * (1.0 - dot * dot);
    let a_ee = *action.last().unwrap();
    let n_vel = a_ee / cfg.v_ee_max;
    let r_vel = -(cfg.v_ee_max - a_ee) * (cfg.v_ee_max - a_ee);
    let mut r_acc = 0.0;
    for (x, y) in action.iter().zip(previous) {
        r_acc -= (x - y) * (x - y);
    }
    let r_coll = if collision { cfg.r_coll } else { 0.0 };
    n_vel * (cfg.lambda_ik * r_ik + r_coll) + cfg.lambda_vel * r_vel + cfg.lambda_acc * r_acc
}

/// Seeded random actions; a fifth of the speeds are exactly zero and a fifth
/// exactly full.
pub struct FuzzPolicy {
    rng: ChaCha8Rng,
    v_ee_max: f64,
    /// Constant forward push, so the base travels far enough to hit things.
    drift: f64,
}

impl FuzzPolicy {
    pub fn new(seed: u64, v_ee_max: f64) -> FuzzPolicy {
        FuzzPolicy {
            rng: rng(seed),
            v_ee_max,
            drift: 0.0,
        }
    }

    pub fn drifting(seed: u64, v_ee_max: f64) -> FuzzPolicy {
        FuzzPolicy {
            drift: 0.8,
            ..FuzzPolicy::new(seed, v_ee_max)
        }
    }
}

impl Policy for FuzzPolicy {
    fn act(&mut self, _obs: &feasim::env::Observation) -> Action {
        let r = &mut self.rng;
        let a_ee = match r.gen_range(0..5) {
            0 => 0.0,
            1 => self.v_ee_max,
            _ => r.gen_range(0.0..self.v_ee_max),
        };
        Action {
            linear: [self.drift + r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)],
            angular: r.gen_range(-1.0..1.0) * (1.0 - self.drift),
            torso: Some(r.gen_range(-1.0..1.0)),
            a_ee,
        }
    }
}

/// Checks every step of a log against the oracle and the term invariants.
pub fn check_log_rewards(log: &EpisodeLog) -> Result<usize, String> {
    let cfg = &log.header.env;
    let mut previous = vec![0.0; log.steps.first().map_or(0, |s| s.action.len())];
    for s in &log.steps {
        let expected = reward_oracle(
            cfg,
            &s.ee_desired,
            &s.ee_achieved,
            &s.action,
            &previous,
            s.collision,
        );
        if (s.reward - expected).abs() > 1e-12 {
            return Err(format!(
                "step {}: reward {} vs oracle {expected}",
                s.step, s.reward
            ));
        }
        let b = &s.breakdown;
        let recombined = b.n_vel * (cfg.lambda_ik * b.r_ik + b.r_coll)
            + cfg.lambda_vel * b.r_vel
            + cfg.lambda_acc * b.r_acc;
        if (s.reward - recombined).abs() > 1e-12 {
            return Err(format!("step {}: breakdown does not recombine", s.step));
        }
        if b.r_ik > 0.0 || b.r_vel > 0.0 || b.r_acc > 0.0 || !(0.0..=1.0).contains(&b.n_vel) {
            return Err(format!("step {}: term out of range {b:?}", s.step));
        }
        let a_ee = *s.action.last().unwrap();
        if (b.n_vel == 1.0) != (a_ee == cfg.v_ee_max) || (b.n_vel == 0.0) != (a_ee == 0.0) {
            return Err(format!(
                "step {}: n_vel {} for a_ee {a_ee}",
                s.step, b.n_vel
            ));
        }
        previous = s.action.clone();
    }
    let total: f64 = log.steps.iter().map(|s| s.reward).sum();
    if total != log.episode_return() {
        return Err("episode return differs from the summed rewards".into());
    }
    Ok(log.steps.len())
}

/// Straight-line fixture with a fixed heading and direction, for the worked
/// reward examples.
fn still_fixture(robot: &RobotModel) -> EpisodeSpec {
    straight_line_episode(robot, 2.0, 3).unwrap()
}

/// The three worked examples: a perfectly tracked full-speed step with a
/// repeated action scores zero, a zero-speed step scores only the speed and
/// smoothness terms, and a 10 cm error at full speed scores -0.5.
pub fn worked_examples() -> Check {
    let robot = RobotModel::pr2();
    let cfg = EnvConfig::default();
    let mut env = Env::new(robot.clone(), cfg.clone()).unwrap();
    env.reset(&still_fixture(&robot), MotionKind::Slerp)
        .map_err(|e| e.to_string())?;
    let full = Action {
        a_ee: cfg.v_ee_max,
        torso: Some(0.0),
        ..Default::default()
    };
    env.step(&full).map_err(|e| e.to_string())?;
    let tracked = env.step(&full).map_err(|e| e.to_string())?;
    if tracked.breakdown.r_vel != 0.0
        || tracked.breakdown.r_acc != 0.0
        || tracked.breakdown.n_vel != 1.0
    {
        return Err(format!("tracked step terms {:?}", tracked.breakdown));
    }
    if tracked.reward.abs() > 1e-12 || !tracked.info.ik_ok {
        return Err(format!("tracked step reward {}", tracked.reward));
    }

    let stop = Action {
        linear: [0.5, 0.0],
        ..full
    };
    let stop = Action { a_ee: 0.0, ..stop };
    let still = env.step(&stop).map_err(|e| e.to_string())?;
    let r_acc = -(0.5f64.powi(2) + cfg.v_ee_max.powi(2));
    let expected = -cfg.lambda_vel * cfg.v_ee_max.powi(2) + cfg.lambda_acc * r_acc;
    if still.breakdown.n_vel != 0.0 || still.reward != expected {
        return Err(format!("zero-speed reward {} vs {expected}", still.reward));
    }

    let desired = Pose3::identity();
    let achieved = Pose3::new(nalgebra::Vector3::new(0.1, 0.0, 0.0), Default::default());
    let steady = [0.3, -0.2, 0.1, 0.0, cfg.v_ee_max];
    let b = RewardBreakdown::evaluate(
        &cfg,
        &desired,
        &achieved,
        cfg.v_ee_max,
        &steady,
        &steady,
        false,
    );
    if (b.total(&cfg) + 0.5).abs() > 1e-12 {
        return Err(format!("10 cm error reward {}", b.total(&cfg)));
    }
    Ok(format!(
        "tracked {:.1e}, zero-speed {expected}, 10 cm error {:.15}",
        tracked.reward,
        b.total(&cfg)
    ))
}

/// Recorded fuzzed episodes re-scored by the oracle.
pub fn fuzzed_rewards(episodes: u64) -> Check {
    let cfg = WorldGenConfig::default();
    let robots = [RobotModel::pr2(), RobotModel::hsr(), RobotModel::tiago()];
    let mut steps = 0;
    let mut collisions = 0;
    for seed in 0..episodes {
        let robot = &robots[(seed % 3) as usize];
        let spec = generate_episode(&cfg, robot, 700 + seed).map_err(|e| e.to_string())?;
        let env_cfg = EnvConfig {
            max_steps: 150,
            violation_budget: 1000,
            ..Default::default()
        };
        let mut env = Env::new(robot.clone(), env_cfg.clone()).unwrap();
        let mut policy = if seed % 2 == 0 {
            FuzzPolicy::new(seed, env_cfg.v_ee_max)
        } else {
            FuzzPolicy::drifting(seed, env_cfg.v_ee_max)
        };
        let log = run_episode(&mut env, &spec, MotionKind::Slerp, &mut policy)
            .map_err(|e| e.to_string())?;
        let text = log.to_jsonl();
        let reread = EpisodeLog::from_jsonl(&text).map_err(|e| e.to_string())?;
        steps += check_log_rewards(&reread).map_err(|e| format!("episode {seed}: {e}"))?;
        collisions += reread.steps.iter().filter(|s| s.collision).count();
    }
    if episodes >= 10 && collisions == 0 {
        return Err(format!(
            "{steps} steps matched but none collided, so the penalty went untested"
        ));
    }
    Ok(format!(
        "{episodes} episodes, {steps} steps ({collisions} in collision) match to 1e-12"
    ))
}

/// Greedy success rate on 2 m straight-line episodes per omnidirectional robot.
pub fn greedy_straight_lines(episodes: u64) -> Check {
    let t = Instant::now();
    let mut rates = Vec::new();
    let mut failed = false;
    for robot in [RobotModel::pr2(), RobotModel::hsr()] {
        let cfg = EnvConfig::default();
        let mut env = Env::new(robot.clone(), cfg.clone()).unwrap();
        let mut successes = 0;
        for seed in 0..episodes {
            let spec = straight_line_episode(&robot, 2.0, seed).unwrap();
            let mut policy = GreedyPolicy::new(&robot, cfg.v_ee_max, GreedyConfig::default());
            let log = run_episode(&mut env, &spec, MotionKind::Slerp, &mut policy)
                .map_err(|e| e.to_string())?;
            successes += usize::from(log.success());
        }
        failed |= (successes as f64) < 0.95 * episodes as f64;
        rates.push(format!("{} {successes}/{episodes}", robot.name));
    }
    let elapsed = t.elapsed();
    let summary = format!("{} in {elapsed:.1?}", rates.join(", "));
    if failed || elapsed > Duration::from_secs(60) {
        Err(summary)
    } else {
        Ok(summary)
    }
}

/// Mean wall time of `env.step` over greedy rollouts in generated worlds.
pub fn step_time(steps: usize) -> Check {
    let wg = WorldGenConfig::default();
    let robots = [RobotModel::pr2(), RobotModel::hsr(), RobotModel::tiago()];
    let mut total = Duration::ZERO;
    let mut count = 0;
    let mut seed = 0;
    while count < steps {
        let robot = &robots[(seed % 3) as usize];
        let spec = generate_episode(&wg, robot, 9000 + seed).map_err(|e| e.to_string())?;
        let cfg = EnvConfig::default();
        let mut env = Env::new(robot.clone(), cfg.clone()).unwrap();
        let policy = GreedyPolicy::new(robot, cfg.v_ee_max, GreedyConfig::default());
        let mut obs = env
            .reset(&spec, MotionKind::Slerp)
            .map_err(|e| e.to_string())?;
        while count < steps {
            let action = policy.act(&obs);
            let t = Instant::now();
            let r = env.step(&action).map_err(|e| e.to_string())?;
            total += t.elapsed();
            count += 1;
            if r.terminated {
                break;
            }
            obs = r.observation;
        }
        seed += 1;
    }
    let mean = total / count as u32;
    let summary = format!("mean {mean:.2?} over {count} steps, {seed} episodes");
    if mean < Duration::from_millis(10) {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn reward_sequence(
    robot: &RobotModel,
    spec: &EpisodeSpec,
    replan: bool,
) -> Result<Vec<f64>, String> {
    let cfg = EnvConfig {
        replan,
        max_steps: 400,
        ..Default::default()
    };
    let mut env = Env::new(robot.clone(), cfg.clone()).unwrap();
    let mut policy = GreedyPolicy::new(robot, cfg.v_ee_max, GreedyConfig::default());
    let log =
        run_episode(&mut env, spec, MotionKind::Slerp, &mut policy).map_err(|e| e.to_string())?;
    Ok(log.steps.iter().map(|s| s.reward).collect())
}

/// Straight-line episode with a tall obstacle driving across the hand's path.
pub fn crossing_fixture(robot: &RobotModel, seed: u64) -> EpisodeSpec {
    let mut spec = straight_line_episode(robot, 2.0, seed).unwrap();
    let ee = forward_kinematics(robot, &spec.start, &spec.joints)
        .unwrap()
        .position;
    let dir = (spec.goal.position - ee).normalize();
    let normal = nalgebra::Vector3::new(-dir.y, dir.x, 0.0);
    let meet = ee + dir * 1.2;
    let from = meet + normal * 1.0;
    let speed = 0.15;
    spec.world.dynamics.push(DynamicObstacle {
        shape: ShapeKind::Ellipse {
            semi_x: 0.2,
            semi_y: 0.2,
        },
        pose: Pose2::new(from.x, from.y, 0.0),
        velocity: [-normal.x * speed, -normal.y * speed],
        height: 2.0,
    });
    spec
}

/// Static worlds: replanning on map changes gives the plan-once rewards.
/// Moving obstacle: every replanned path avoids the hard-blocked cells of
/// the map it was planned on.
pub fn replan_consistency(static_cases: u64, moving_cases: u64) -> Check {
    let wg = WorldGenConfig::default();
    let robots = [RobotModel::pr2(), RobotModel::hsr(), RobotModel::tiago()];
    let mut compared = 0;
    for seed in 0..static_cases {
        let robot = &robots[(seed % 3) as usize];
        let spec = generate_episode(&wg, robot, 4000 + seed).map_err(|e| e.to_string())?;
        let per_step = reward_sequence(robot, &spec, true)?;
        let once = reward_sequence(robot, &spec, false)?;
        if per_step.len() != once.len()
            || per_step
                .iter()
                .zip(&once)
                .any(|(a, b)| (a - b).abs() > 1e-12)
        {
            return Err(format!("static fixture {seed}: reward sequences differ"));
        }
        compared += per_step.len();
    }

    let planner = PlannerConfig::default();
    let mut replans = 0;
    let mut poses = 0;
    for seed in 0..moving_cases {
        let robot = RobotModel::pr2();
        let spec = crossing_fixture(&robot, seed);
        let planning = robot.planning(&planner);
        let cfg = EnvConfig {
            max_steps: 250,
            ..Default::default()
        };
        let mut env = Env::new(robot.clone(), cfg.clone()).unwrap();
        let policy = GreedyPolicy::new(&robot, cfg.v_ee_max, GreedyConfig::default());
        let grid = spec.world.rasterize().unwrap();
        let mut obs = env
            .reset(&spec, MotionKind::Slerp)
            .map_err(|e| e.to_string())?;
        loop {
            let before = env.dynamics().unwrap().to_vec();
            let r = env.step(&policy.act(&obs)).map_err(|e| e.to_string())?;
            if r.info.replanned {
                replans += 1;
                let stamped = grid.with_dynamics(&before);
                let g = *stamped.geometry();
                let tall: Vec<bool> = stamped
                    .cells()
                    .iter()
                    .map(|h| *h > planning.max_z)
                    .collect();
                let blocked = oracle::brute_inflate(
                    &tall,
                    g.width,
                    g.height,
                    g.resolution,
                    planner.collision_margin,
                );
                for p in env.plan().unwrap().poses() {
                    let (ix, iy) = g
                        .world_to_cell(p.position.x, p.position.y)
                        .ok_or("plan leaves the map")?;
                    if blocked[g.index(ix, iy)] {
                        return Err(format!(
                            "moving fixture {seed}: step {} plan enters cell ({ix}, {iy})",
                            r.info.step
                        ));
                    }
                    poses += 1;
                }
            }
            if r.terminated {
                break;
            }
            obs = r.observation;
        }
    }
    if moving_cases > 0 && replans == 0 {
        return Err("the moving obstacle never triggered a replan".into());
    }
    Ok(format!(
        "{static_cases} static fixtures ({compared} steps) identical; {replans} replans, {poses} poses clear"
    ))
}
