//! Episode execution and evaluation: the sense-map-plan-act loop, the
//! geodesic success judge, SPL and success-rate aggregation, the multi-arm
//! benchmark harness, and training-sample collection from exploration
//! rollouts.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distance::{
    build_gt_field, frontier_band_mask, geodesic_field, DistanceField, Partition, TrainingSample,
    BIN_UNKNOWN,
};
use crate::frontier::{extract_frontier, is_frontier_cell, Adjacency, FrontierSet};
use crate::grid::{Cell, Grid};
use crate::planner::{
    extract_path, path_to_action, planning_grid, resolve_goal, solve_with, PlannerBackend,
    TravelTimeField,
};
use crate::policy::{select_goal, GoalContext, GoalKind, MidTermGoal, Strategy, ValueMode};
use crate::predictor::{DistancePredictor, DistancePrediction};
use crate::scene::{step, Action, EpisodeSpec, Kinematics, Pose, Scene};
use crate::sensing::{crop_local, sense, update_map, NoiseModel, SemanticGrid, SensorConfig};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no episode records")]
    EmptyRecords,
    #[error("episode references unknown scene '{0}'")]
    UnknownScene(String),
    #[error("policy '{0}' needs a predictor")]
    MissingPredictor(String),
    #[error("sample collection: {0}")]
    Collect(String),
}

/// Everything the run loop needs beyond the episode itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunParams {
    pub sensor: SensorConfig,
    pub noise: NoiseModel,
    pub kinematics: Kinematics,
    pub partition: Partition,
    pub n_categories: u8,
    pub band_width_m: f64,
    /// Door-sector cone width in degrees.
    pub theta_deg: f64,
    /// Side length of the local prediction window, in cells.
    pub local_size: usize,
    pub value_mode: ValueMode,
    pub planner: PlannerBackend,
    pub inflation_cells: i32,
    /// Steps between corner changes for random exploration.
    pub corner_period: usize,
    /// Goal commit window: steps a selected goal is held before the next
    /// re-selection. A reached or explained-away goal, a collision, or a
    /// mapped target re-selects immediately; the path to the held goal is
    /// refreshed every few steps regardless.
    pub goal_period: usize,
    pub adjacency: Adjacency,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams {
            sensor: SensorConfig::default(),
            noise: NoiseModel::default(),
            kinematics: Kinematics::default(),
            partition: Partition::default_partition(),
            n_categories: 12,
            band_width_m: 1.0,
            theta_deg: 120.0,
            local_size: 240,
            value_mode: ValueMode::Representative,
            planner: PlannerBackend::Fmm,
            inflation_cells: 1,
            corner_period: 100,
            goal_period: 25,
            adjacency: Adjacency::Eight,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    StoppedSuccess,
    StoppedFailure,
    Timeout,
}

/// Full trace and verdict of one episode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub spec: EpisodeSpec,
    pub policy: String,
    pub predictor: String,
    pub actions: Vec<Action>,
    /// Pose after each action, preceded by the start pose.
    pub trajectory: Vec<Pose>,
    pub success: bool,
    /// Whether the agent was ever within the success radius, judged over
    /// the whole trajectory.
    pub oracle_success: bool,
    pub termination: Termination,
    pub steps_used: usize,
    pub collisions: usize,
    pub path_length_m: f64,
    pub final_distance_m: f64,
    /// This episode's SPL contribution.
    pub spl: f64,
}

/// Step snapshot passed to observers during a run.
pub struct StepEvent<'a> {
    pub step: usize,
    pub map: &'a SemanticGrid,
    pub pose: &'a Pose,
    pub action: Action,
    pub goal: Option<&'a MidTermGoal>,
    pub prediction: Option<&'a DistancePrediction>,
    pub collided: bool,
}

struct EngineOutput {
    final_pose: Pose,
    actions: Vec<Action>,
    trajectory: Vec<Pose>,
    collisions: usize,
    path_length_m: f64,
    stopped: bool,
}

struct PlanState {
    path: Vec<Cell>,
    cursor: usize,
    goal: Option<MidTermGoal>,
    prediction: Option<DistancePrediction>,
    steps_since_select: usize,
    steps_since_path: usize,
    force_replan: bool,
    target_distance_m: Option<f64>,
    visited_frontier: HashSet<Cell>,
    cleared_frontier: HashSet<Cell>,
}

impl PlanState {
    fn new() -> PlanState {
        PlanState {
            path: Vec::new(),
            cursor: 0,
            goal: None,
            prediction: None,
            steps_since_select: 0,
            steps_since_path: 0,
            force_replan: true,
            target_distance_m: None,
            visited_frontier: HashSet::new(),
            cleared_frontier: HashSet::new(),
        }
    }
}

/// Keeps only frontier cells worth steering toward. A cell is dropped when
/// no cell in its 3x3 neighborhood has finite travel time (a sliver of free
/// space walled in on all sides stays visible on the map yet can never be
/// approached through the inflated planning grid), or when the agent has
/// already stood next to it and learned nothing (`cleared`). Chasing either
/// kind parks the agent beside a wall for the rest of the episode.
fn retain_promising(frontier: &mut FrontierSet, travel: &TravelTimeField, cleared: &HashSet<Cell>) {
    frontier.cells.retain(|cell| {
        if cleared.contains(cell) {
            return false;
        }
        (-1..=1).any(|dr| {
            (-1..=1).any(|dc| {
                travel
                    .arrival_at(Cell::new(cell.row + dr, cell.col + dc))
                    .is_finite()
            })
        })
    });
}

/// The sense-map-plan-act loop shared by evaluation episodes and
/// exploration rollouts. `target` of `None` means explore forever (until
/// `max_steps`). The observer sees every completed step and can abort by
/// returning false.
#[allow(clippy::too_many_arguments)]
fn run_engine(
    scene: &Scene,
    start: Pose,
    target: Option<u8>,
    success_radius_m: f64,
    max_steps: usize,
    strategy: Strategy,
    predictor: Option<&dyn DistancePredictor>,
    params: &RunParams,
    rng: &mut ChaCha8Rng,
    observer: &mut dyn FnMut(&StepEvent) -> bool,
) -> EngineOutput {
    let mut map = SemanticGrid::new(
        scene.height,
        scene.width,
        params.n_categories,
        scene.cell_size_m,
    );
    let mut pose = start;
    let mut plan = PlanState::new();
    let mut out = EngineOutput {
        final_pose: start,
        actions: Vec::new(),
        trajectory: vec![start],
        collisions: 0,
        path_length_m: 0.0,
        stopped: false,
    };
    // Goals are held for a commit window so one noisy prediction cannot
    // drag the agent across the map every few steps, while the path to the
    // held goal is refreshed often enough to route around newly mapped
    // obstacles.
    let select_period = params.goal_period.max(1);
    let path_period = select_period.min(5);

    for t in 0..max_steps {
        let obs = sense(scene, &pose, &params.sensor);
        update_map(&mut map, &obs, pose.cell(), &params.noise, rng);
        let agent = pose.cell();

        let target_mapped = target.is_some_and(|tg| map.has_category(tg));
        // A goal counts as reached within one forward step: the agent cannot
        // position itself more precisely than its motion quantum.
        let reach_cells = params.kinematics.forward_step_m / scene.cell_size_m;
        let goal_reached = plan
            .goal
            .map(|g| agent.center_distance(&g.cell) <= reach_cells)
            .unwrap_or(true);
        // A held frontier goal expires as soon as the map explains it away.
        let goal_stale = plan.goal.as_ref().is_some_and(|g| {
            g.kind == GoalKind::Frontier && !is_frontier_cell(&map, g.cell, params.adjacency)
        });
        let reselect = plan.force_replan
            || target_mapped
            || goal_reached
            || goal_stale
            || plan.steps_since_select >= select_period;
        let refresh_path = reselect || plan.steps_since_path >= path_period;

        let mut pending_stop = false;
        if reselect {
            // A frontier cell that still borders unknown space after the
            // agent has stood next to it is occluded for good; remember it
            // so selection stops revisiting a vantage that taught nothing.
            if goal_reached {
                if let Some(g) = &plan.goal {
                    if g.kind == GoalKind::Frontier {
                        plan.cleared_frontier.insert(g.cell);
                    }
                }
            }
            plan.force_replan = false;
            plan.steps_since_select = 0;
            plan.steps_since_path = 0;
            plan.target_distance_m = None;

            let mut planned = false;
            if let Some(tg) = target {
                if target_mapped {
                    // Conservative distance through known free space backs
                    // the stop decision; it never undershoots the judge.
                    let known_free = map.known_free_grid();
                    let target_cells = map.category_cells(tg);
                    let conservative =
                        geodesic_field(&known_free, target_cells, scene.cell_size_m)
                            .expect("mapped target cells are in bounds");
                    let d = conservative.distance_m(agent);
                    if d.is_finite() {
                        plan.target_distance_m = Some(d);
                    }
                    if d <= success_radius_m {
                        pending_stop = true;
                        planned = true;
                    } else {
                        // Head for the nearest mapped target cell through
                        // optimistically-free space.
                        let nearest = target_cells
                            .iter()
                            .copied()
                            .min_by(|a, b| {
                                let da = agent.center_distance(a);
                                let db = agent.center_distance(b);
                                da.partial_cmp(&db)
                                    .unwrap()
                                    .then((a.row, a.col).cmp(&(b.row, b.col)))
                            })
                            .expect("has_category implies at least one cell");
                        let grid = planning_grid(&map, agent, params.inflation_cells);
                        if let Ok(travel) = solve_with(params.planner, &grid, &[agent]) {
                            if let Some(resolved) = resolve_goal(&travel, nearest) {
                                if let Ok(mut path) = extract_path(&travel, resolved) {
                                    path.reverse();
                                    plan.path = path;
                                    plan.cursor = 0;
                                    plan.goal = Some(MidTermGoal {
                                        cell: nearest,
                                        kind: GoalKind::Target,
                                        chosen_by: strategy,
                                    });
                                    plan.prediction = None;
                                    planned = true;
                                }
                            }
                        }
                    }
                }
            }

            if !planned {
                let grid = planning_grid(&map, agent, params.inflation_cells);
                let travel = solve_with(params.planner, &grid, &[agent])
                    .expect("agent cell is force-cleared");
                let (frontier, prediction, window_origin) = if strategy.uses_prediction() {
                    let local = crop_local(&map, agent, params.local_size);
                    let mut frontier = extract_frontier(&local.map, params.adjacency)
                        .translate(local.origin);
                    retain_promising(&mut frontier, &travel, &plan.cleared_frontier);
                    let prediction = match (predictor, target) {
                        (Some(p), Some(tg)) => Some(p.predict(&local, &frontier, tg, rng)),
                        _ => None,
                    };
                    (frontier, prediction, local.origin)
                } else {
                    let half = params.local_size as i32 / 2;
                    let origin = Cell::new(agent.row - half, agent.col - half);
                    let frontier = match strategy {
                        Strategy::FrontierExploration => {
                            let mut frontier = extract_frontier(&map, params.adjacency);
                            retain_promising(&mut frontier, &travel, &plan.cleared_frontier);
                            frontier
                        }
                        _ => FrontierSet::default(),
                    };
                    (frontier, None, origin)
                };
                let ctx = GoalContext {
                    pose: &pose,
                    frontier: &frontier,
                    prediction: prediction.as_ref(),
                    travel: &travel,
                    mapped_target: None,
                    partition: &params.partition,
                    value_mode: params.value_mode,
                    cell_size_m: scene.cell_size_m,
                    window_origin,
                    window_size: params.local_size,
                    map_height: scene.height,
                    map_width: scene.width,
                    step: t,
                    corner_period: params.corner_period,
                    door_bearing: obs.door_bearing,
                    theta_rad: params.theta_deg.to_radians(),
                };
                let goal = select_goal(strategy, &ctx, &plan.visited_frontier);
                if strategy == Strategy::FrontierExploration && goal.kind == GoalKind::Frontier {
                    plan.visited_frontier.insert(goal.cell);
                }
                let resolved = resolve_goal(&travel, goal.cell).unwrap_or(agent);
                let mut path = extract_path(&travel, resolved).unwrap_or_else(|_| vec![agent]);
                path.reverse();
                plan.path = path;
                plan.cursor = 0;
                plan.goal = Some(goal);
                plan.prediction = prediction;
            }
        } else if refresh_path {
            plan.steps_since_path = 0;
            let goal_cell = plan.goal.as_ref().map(|g| g.cell).expect("goal held");
            let grid = planning_grid(&map, agent, params.inflation_cells);
            let travel = solve_with(params.planner, &grid, &[agent])
                .expect("agent cell is force-cleared");
            let resolved = resolve_goal(&travel, goal_cell).unwrap_or(agent);
            let mut path = extract_path(&travel, resolved).unwrap_or_else(|_| vec![agent]);
            path.reverse();
            plan.path = path;
            plan.cursor = 0;
        }

        let action = if pending_stop {
            Action::Stop
        } else {
            // Monotone pursuit: advance the cursor while the next path cell
            // is no farther than the current one.
            while plan.cursor + 1 < plan.path.len()
                && pose.distance_to(plan.path[plan.cursor + 1])
                    <= pose.distance_to(plan.path[plan.cursor])
            {
                plan.cursor += 1;
            }
            path_to_action(
                &plan.path[plan.cursor.min(plan.path.len().saturating_sub(1))..],
                &pose,
                &params.kinematics,
                scene.cell_size_m,
                plan.target_distance_m,
                success_radius_m,
                &map.obstacle_grid(),
            )
        };

        let outcome = step(scene, &pose, action, &params.kinematics);
        if outcome.collided {
            out.collisions += 1;
            plan.force_replan = true;
            if let Some(blocked) = outcome.blocked {
                if map.in_bounds(blocked) {
                    map.set_obstacle(blocked);
                }
            }
        }
        let dx = outcome.pose.x - pose.x;
        let dy = outcome.pose.y - pose.y;
        out.path_length_m += (dx * dx + dy * dy).sqrt() * scene.cell_size_m;
        pose = outcome.pose;
        plan.steps_since_select += 1;
        plan.steps_since_path += 1;
        out.actions.push(action);
        out.trajectory.push(pose);

        let keep_going = observer(&StepEvent {
            step: t + 1,
            map: &map,
            pose: &pose,
            action,
            goal: plan.goal.as_ref(),
            prediction: plan.prediction.as_ref(),
            collided: outcome.collided,
        });
        if action == Action::Stop {
            out.stopped = true;
            break;
        }
        if !keep_going {
            break;
        }
    }
    out.final_pose = pose;
    out
}

/// Runs one evaluation episode and judges it against the ground-truth
/// distance field.
pub fn run_episode(
    scene: &Scene,
    spec: &EpisodeSpec,
    strategy: Strategy,
    predictor: Option<&dyn DistancePredictor>,
    judge: &DistanceField,
    params: &RunParams,
    seed: u64,
) -> EpisodeRecord {
    run_episode_observed(scene, spec, strategy, predictor, judge, params, seed, &mut |_| true)
}

/// [`run_episode`] with a step observer for snapshots and tracing.
#[allow(clippy::too_many_arguments)]
pub fn run_episode_observed(
    scene: &Scene,
    spec: &EpisodeSpec,
    strategy: Strategy,
    predictor: Option<&dyn DistancePredictor>,
    judge: &DistanceField,
    params: &RunParams,
    seed: u64,
    observer: &mut dyn FnMut(&StepEvent) -> bool,
) -> EpisodeRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_distance = judge.distance_at(spec.start.cell());
    let mut wrapped = |event: &StepEvent| -> bool {
        min_distance = min_distance.min(judge.distance_at(event.pose.cell()));
        observer(event)
    };
    let out = run_engine(
        scene,
        spec.start,
        Some(spec.target),
        spec.success_radius_m,
        spec.max_steps,
        strategy,
        predictor,
        params,
        &mut rng,
        &mut wrapped,
    );
    let final_distance_m = judge.distance_at(out.final_pose.cell());
    let success = final_distance_m <= spec.success_radius_m;
    let termination = match (out.stopped, success) {
        (true, true) => Termination::StoppedSuccess,
        (true, false) => Termination::StoppedFailure,
        (false, _) => Termination::Timeout,
    };
    let spl = if success {
        let l = spec.shortest_path_m;
        if l <= 0.0 {
            1.0
        } else {
            l / l.max(out.path_length_m)
        }
    } else {
        0.0
    };
    EpisodeRecord {
        spec: spec.clone(),
        policy: strategy.id().to_string(),
        predictor: predictor.map_or_else(|| "none".to_string(), |p| p.name()),
        steps_used: out.actions.len(),
        actions: out.actions,
        trajectory: out.trajectory,
        success,
        oracle_success: min_distance <= spec.success_radius_m,
        termination,
        collisions: out.collisions,
        path_length_m: out.path_length_m,
        final_distance_m,
        spl,
    }
}

/// Mean success over records.
pub fn success_rate(records: &[EpisodeRecord]) -> Result<f64, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyRecords);
    }
    Ok(records.iter().filter(|r| r.success).count() as f64 / records.len() as f64)
}

/// Success weighted by inverse path length: mean over episodes of
/// S * l / max(p, l), with l the shortest path and p the traveled path.
pub fn compute_spl(records: &[EpisodeRecord]) -> Result<f64, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyRecords);
    }
    Ok(records.iter().map(|r| r.spl).sum::<f64>() / records.len() as f64)
}

/// Per-episode RNG stream derived from the master seed (splitmix64 over the
/// stream id).
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a 64-bit content fingerprint, hex-encoded.
pub fn fingerprint(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

/// One benchmark arm: a policy and the predictor feeding it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSpec {
    pub policy: Strategy,
    pub predictor: PredictorSpec,
}

/// Predictor selection for a benchmark arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PredictorSpec {
    None,
    Oracle,
    NoisyOracle { p_flip: f64 },
    Constant { bin: u8 },
    Learned,
}

impl PredictorSpec {
    /// Parses flag syntax: `none`, `oracle`, `noisy:<p>`, `constant:<bin>`,
    /// `learned`.
    pub fn parse(s: &str) -> Result<PredictorSpec, String> {
        if let Some(p) = s.strip_prefix("noisy:") {
            let p_flip: f64 = p.parse().map_err(|_| format!("bad flip rate '{p}'"))?;
            if !(0.0..=1.0).contains(&p_flip) {
                return Err(format!("flip rate {p_flip} outside [0, 1]"));
            }
            return Ok(PredictorSpec::NoisyOracle { p_flip });
        }
        if let Some(b) = s.strip_prefix("constant:") {
            let bin: u8 = b.parse().map_err(|_| format!("bad bin '{b}'"))?;
            return Ok(PredictorSpec::Constant { bin });
        }
        match s {
            "none" => Ok(PredictorSpec::None),
            "oracle" => Ok(PredictorSpec::Oracle),
            "learned" => Ok(PredictorSpec::Learned),
            other => Err(format!(
                "unknown predictor '{other}' (expected none, oracle, noisy:<p>, constant:<bin>, or learned)"
            )),
        }
    }

    pub fn id(&self) -> String {
        match self {
            PredictorSpec::None => "none".into(),
            PredictorSpec::Oracle => "oracle".into(),
            PredictorSpec::NoisyOracle { p_flip } => format!("noisy:{p_flip}"),
            PredictorSpec::Constant { bin } => format!("constant:{bin}"),
            PredictorSpec::Learned => "learned".into(),
        }
    }
}

/// Aggregate metrics for one slice of episodes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CategoryStats {
    pub category: String,
    pub episodes: usize,
    pub success_rate: f64,
    pub spl: f64,
    pub mean_steps: f64,
    pub mean_path_len_m: f64,
}

fn stats_for(category: &str, records: &[&EpisodeRecord]) -> CategoryStats {
    let n = records.len();
    let nf = n as f64;
    CategoryStats {
        category: category.to_string(),
        episodes: n,
        success_rate: records.iter().filter(|r| r.success).count() as f64 / nf,
        spl: records.iter().map(|r| r.spl).sum::<f64>() / nf,
        mean_steps: records.iter().map(|r| r.steps_used as f64).sum::<f64>() / nf,
        mean_path_len_m: records.iter().map(|r| r.path_length_m).sum::<f64>() / nf,
    }
}

/// Per-arm benchmark report: per-category rows plus the overall row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArmReport {
    pub policy: String,
    pub predictor: String,
    pub rows: Vec<CategoryStats>,
    pub overall: CategoryStats,
    /// Target categories with no episodes in this benchmark.
    pub skipped_categories: Vec<String>,
}

pub struct BenchmarkRun {
    pub reports: Vec<ArmReport>,
    /// Records per arm, in episode order.
    pub records: Vec<Vec<EpisodeRecord>>,
}

/// Inputs to a benchmark: shared scenes, a fixed episode set, and the arms
/// to compare on it.
pub struct BenchmarkRequest<'a> {
    pub scenes: &'a [(String, Scene)],
    pub episodes: &'a [EpisodeSpec],
    pub arms: &'a [ArmSpec],
    pub params: &'a RunParams,
    pub model: Option<&'a crate::predictor::RelationModel>,
    /// Names of the target categories, indexed by category id.
    pub target_names: &'a [String],
    pub master_seed: u64,
    pub parallel: bool,
}

/// Runs every arm over the shared episode set. Episode seeds depend only on
/// the episode id, so arms are compared under identical conditions and the
/// result is byte-identical whether run serially or in parallel.
pub fn run_benchmark(req: &BenchmarkRequest) -> Result<BenchmarkRun, EvalError> {
    let scene_index: HashMap<&str, usize> = req
        .scenes
        .iter()
        .enumerate()
        .map(|(i, (id, _))| (id.as_str(), i))
        .collect();
    for spec in req.episodes {
        if !scene_index.contains_key(spec.scene_id.as_str()) {
            return Err(EvalError::UnknownScene(spec.scene_id.clone()));
        }
    }

    // Judges: ground-truth fields per scene and target used by the episode
    // set.
    let mut judges: Vec<HashMap<u8, DistanceField>> =
        req.scenes.iter().map(|_| HashMap::new()).collect();
    for spec in req.episodes {
        let si = scene_index[spec.scene_id.as_str()];
        judges[si]
            .entry(spec.target)
            .or_insert_with(|| build_gt_field(&req.scenes[si].1, spec.target, &req.params.partition));
    }

    // Predictor instances per arm and scene.
    let n_targets = req.target_names.len() as u8;
    let mut predictors: Vec<Vec<Option<Box<dyn DistancePredictor>>>> = Vec::new();
    for arm in req.arms {
        if arm.policy.uses_prediction() && arm.predictor == PredictorSpec::None {
            return Err(EvalError::MissingPredictor(arm.policy.id().to_string()));
        }
        let mut per_scene: Vec<Option<Box<dyn DistancePredictor>>> = Vec::new();
        for (_, scene) in req.scenes {
            let built: Option<Box<dyn DistancePredictor>> = match &arm.predictor {
                PredictorSpec::None => None,
                PredictorSpec::Oracle => Some(Box::new(crate::predictor::OraclePredictor::for_scene(
                    scene,
                    n_targets,
                    &req.params.partition,
                    req.params.band_width_m,
                ))),
                PredictorSpec::NoisyOracle { p_flip } => {
                    Some(Box::new(crate::predictor::NoisyOraclePredictor {
                        oracle: crate::predictor::OraclePredictor::for_scene(
                            scene,
                            n_targets,
                            &req.params.partition,
                            req.params.band_width_m,
                        ),
                        p_flip: *p_flip,
                    }))
                }
                PredictorSpec::Constant { bin } => Some(Box::new(crate::predictor::ConstantPredictor {
                    bin: *bin,
                    n_bins: req.params.partition.n_bins() as u8,
                    band_width_m: req.params.band_width_m,
                })),
                PredictorSpec::Learned => {
                    let model = req.model.ok_or_else(|| {
                        EvalError::MissingPredictor("learned predictor without a model".into())
                    })?;
                    Some(Box::new(crate::predictor::RelationPredictor {
                        model: model.clone(),
                        band_width_m: req.params.band_width_m,
                    }))
                }
            };
            per_scene.push(built);
        }
        predictors.push(per_scene);
    }

    let work: Vec<(usize, usize)> = (0..req.arms.len())
        .flat_map(|a| (0..req.episodes.len()).map(move |e| (a, e)))
        .collect();
    let run_one = |&(a, e): &(usize, usize)| -> EpisodeRecord {
        let spec = &req.episodes[e];
        let si = scene_index[spec.scene_id.as_str()];
        let scene = &req.scenes[si].1;
        let judge = &judges[si][&spec.target];
        let predictor = predictors[a][si].as_deref();
        let seed = derive_seed(req.master_seed, spec.episode_id);
        run_episode(scene, spec, req.arms[a].policy, predictor, judge, req.params, seed)
    };
    let flat: Vec<EpisodeRecord> = if req.parallel {
        work.par_iter().map(run_one).collect()
    } else {
        work.iter().map(run_one).collect()
    };

    let mut records: Vec<Vec<EpisodeRecord>> = req.arms.iter().map(|_| Vec::new()).collect();
    for ((a, _), record) in work.into_iter().zip(flat) {
        records[a].push(record);
    }

    let reports = req
        .arms
        .iter()
        .zip(&records)
        .map(|(arm, arm_records)| {
            let all: Vec<&EpisodeRecord> = arm_records.iter().collect();
            let mut rows = Vec::new();
            let mut skipped = Vec::new();
            for (cat, name) in req.target_names.iter().enumerate() {
                let subset: Vec<&EpisodeRecord> = arm_records
                    .iter()
                    .filter(|r| r.spec.target as usize == cat)
                    .collect();
                if subset.is_empty() {
                    skipped.push(name.clone());
                } else {
                    rows.push(stats_for(name, &subset));
                }
            }
            ArmReport {
                policy: arm.policy.id().to_string(),
                predictor: arm.predictor.id(),
                rows,
                overall: stats_for("all", &all),
                skipped_categories: skipped,
            }
        })
        .collect();

    Ok(BenchmarkRun { reports, records })
}

/// Serializes reports to the results CSV: one row per category per arm plus
/// each arm's `all` row.
pub fn results_csv(config_id: &str, reports: &[ArmReport]) -> String {
    let mut out =
        String::from("config_id,policy,predictor,category,episodes,success_rate,spl,mean_steps,mean_path_len\n");
    for report in reports {
        for row in report.rows.iter().chain(std::iter::once(&report.overall)) {
            out.push_str(&format!(
                "{},{},{},{},{},{:.6},{:.6},{:.6},{:.6}\n",
                config_id,
                report.policy,
                report.predictor,
                row.category,
                row.episodes,
                row.success_rate,
                row.spl,
                row.mean_steps,
                row.mean_path_len_m,
            ));
        }
    }
    out
}

/// Sample-collection knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CollectConfig {
    /// Total samples to emit across all rollouts.
    pub count: usize,
    /// Capture cadence in steps within a rollout.
    pub interval: usize,
    /// Steps per exploration rollout.
    pub rollout_steps: usize,
    /// Exploration policy driving the rollouts.
    pub policy: Strategy,
    /// Number of target categories eligible for labels.
    pub n_targets: u8,
}

impl Default for CollectConfig {
    fn default() -> Self {
        CollectConfig {
            count: 600,
            interval: 25,
            rollout_steps: 300,
            policy: Strategy::RandomExploration,
            n_targets: 6,
        }
    }
}

/// Rolls exploration episodes over the scenes and captures one training
/// sample per present target at every capture step, until `count` samples
/// have been emitted. Returns how many were emitted; fewer than requested
/// means the rollout budget ran out.
pub fn collect_training_samples(
    scenes: &[(String, Scene)],
    params: &RunParams,
    collect: &CollectConfig,
    master_seed: u64,
    sink: &mut dyn FnMut(TrainingSample),
) -> Result<usize, EvalError> {
    if scenes.is_empty() {
        return Err(EvalError::Collect("no scenes".into()));
    }
    if collect.interval == 0 {
        return Err(EvalError::Collect("interval must be positive".into()));
    }
    // Ground-truth fields per scene for its present targets.
    let gt: Vec<Vec<(u8, DistanceField)>> = scenes
        .iter()
        .map(|(_, scene)| {
            (0..collect.n_targets)
                .filter(|&t| scene.has_category(t))
                .map(|t| (t, build_gt_field(scene, t, &params.partition)))
                .collect()
        })
        .collect();
    if gt.iter().all(|g| g.is_empty()) {
        return Err(EvalError::Collect(
            "no scene contains any target category".into(),
        ));
    }

    let mut emitted = 0usize;
    let max_rollouts = 16 + 4 * collect.count;
    for rollout in 0..max_rollouts {
        if emitted >= collect.count {
            break;
        }
        let (scene_id, scene) = &scenes[rollout % scenes.len()];
        let fields = &gt[rollout % scenes.len()];
        if fields.is_empty() {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master_seed, rollout as u64));
        if scene.spawn_cells.is_empty() {
            continue;
        }
        let cell = scene.spawn_cells[rng.random_range(0..scene.spawn_cells.len())];
        let heading = rng.random::<f64>() * std::f64::consts::TAU;
        let start = Pose::new(cell.col as f64 + 0.5, cell.row as f64 + 0.5, heading);

        let mut capture = |event: &StepEvent| -> bool {
            if event.step % collect.interval != 0 {
                return true;
            }
            let local = crop_local(event.map, event.pose.cell(), params.local_size);
            let frontier = extract_frontier(&local.map, params.adjacency);
            if frontier.is_empty() {
                return true;
            }
            let mask = frontier_band_mask(&local.map, &frontier, params.band_width_m);
            if !mask.data().iter().any(|&m| m) {
                return true;
            }
            let size = params.local_size;
            let mut gt_bins = Grid::filled(size, size, BIN_UNKNOWN);
            for (target, field) in fields {
                for lc in gt_bins.cells() {
                    let global = local.to_global(lc);
                    gt_bins[lc] = if field.bins.in_bounds(global) {
                        field.bin_at(global)
                    } else {
                        BIN_UNKNOWN
                    };
                }
                sink(TrainingSample {
                    scene_id: scene_id.clone(),
                    target: *target,
                    local: local.clone(),
                    gt_bins: gt_bins.clone(),
                    mask: mask.clone(),
                });
                emitted += 1;
                if emitted >= collect.count {
                    return false;
                }
            }
            true
        };
        run_engine(
            scene,
            start,
            None,
            0.0,
            collect.rollout_steps,
            collect.policy,
            None,
            params,
            &mut rng,
            &mut capture,
        );
    }
    Ok(emitted)
}
