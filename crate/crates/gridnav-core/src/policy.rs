//! Mid-term goal selection: five strategies that turn the current frontier,
//! prediction, and travel-time field into one goal cell.
//!
//! Shared rules, applied in order by the dispatcher: a mapped target cell
//! overrides everything; an empty frontier or a prediction with nothing
//! better than the last bin falls back to the exploration corner; otherwise
//! the strategy's argmin runs with deterministic tie-breaks (smaller key,
//! then smaller travel time, then row-major order).

use std::collections::HashSet;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distance::{Partition, BIN_UNKNOWN};
use crate::frontier::{door_sector, FrontierSet};
use crate::grid::Cell;
use crate::planner::TravelTimeField;
use crate::predictor::DistancePrediction;
use crate::scene::Pose;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Minimize travel time to the frontier plus predicted remaining
    /// distance.
    PathPlanning,
    /// Minimize predicted remaining distance alone.
    ClosestFirst,
    /// Closest-first restricted to the door-facing sector when a door is in
    /// view.
    DoorFirst,
    /// Ignore predictions; cycle through the local window's corners.
    RandomExploration,
    /// Ignore predictions; visit the nearest unvisited frontier cell.
    FrontierExploration,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::PathPlanning,
        Strategy::ClosestFirst,
        Strategy::DoorFirst,
        Strategy::RandomExploration,
        Strategy::FrontierExploration,
    ];

    /// Flag/report identifier.
    pub fn id(&self) -> &'static str {
        match self {
            Strategy::PathPlanning => "pp",
            Strategy::ClosestFirst => "cf",
            Strategy::DoorFirst => "def",
            Strategy::RandomExploration => "random",
            Strategy::FrontierExploration => "frontier",
        }
    }

    /// Whether the strategy consumes frontier distance predictions.
    pub fn uses_prediction(&self) -> bool {
        matches!(
            self,
            Strategy::PathPlanning | Strategy::ClosestFirst | Strategy::DoorFirst
        )
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Strategy, String> {
        match s {
            "pp" => Ok(Strategy::PathPlanning),
            "cf" => Ok(Strategy::ClosestFirst),
            "def" => Ok(Strategy::DoorFirst),
            "random" => Ok(Strategy::RandomExploration),
            "frontier" => Ok(Strategy::FrontierExploration),
            other => Err(format!(
                "unknown policy '{other}' (expected pp, cf, def, random, or frontier)"
            )),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

/// How a predicted bin converts to a distance value in meters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueMode {
    /// The bin's representative distance (interval midpoint).
    Representative,
    /// Expectation of the representatives under the predicted scores.
    Expected,
}

impl Default for ValueMode {
    fn default() -> Self {
        ValueMode::Representative
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalKind {
    /// A frontier cell picked by the strategy's scoring rule.
    Frontier,
    /// A mapped cell of the target category.
    Target,
    /// The exploration-fallback corner of the local window.
    ExplorationCorner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MidTermGoal {
    pub cell: Cell,
    pub kind: GoalKind,
    pub chosen_by: Strategy,
}

/// Everything goal selection reads. The travel field is sourced at the
/// agent; `mapped_target` is the nearest already-mapped target cell, if any.
pub struct GoalContext<'a> {
    pub pose: &'a Pose,
    pub frontier: &'a FrontierSet,
    pub prediction: Option<&'a DistancePrediction>,
    pub travel: &'a TravelTimeField,
    pub mapped_target: Option<Cell>,
    pub partition: &'a Partition,
    pub value_mode: ValueMode,
    pub cell_size_m: f64,
    /// Local prediction window, for the corner fallback.
    pub window_origin: Cell,
    pub window_size: usize,
    pub map_height: usize,
    pub map_width: usize,
    pub step: usize,
    pub corner_period: usize,
    pub door_bearing: Option<f64>,
    pub theta_rad: f64,
}

impl GoalContext<'_> {
    fn travel_m(&self, cell: Cell) -> f64 {
        self.travel.arrival_at(cell) * self.cell_size_m
    }

    /// Predicted remaining distance in meters; +inf when unknown.
    fn value_m(&self, cell: Cell) -> f64 {
        let Some(pred) = self.prediction else {
            return f64::INFINITY;
        };
        match self.value_mode {
            ValueMode::Representative => {
                let bin = pred.bin_at_global(cell);
                if bin == BIN_UNKNOWN {
                    f64::INFINITY
                } else {
                    self.partition.representative_m(bin)
                }
            }
            ValueMode::Expected => match pred.scores_at_global(cell) {
                Some(scores) => scores
                    .iter()
                    .enumerate()
                    .map(|(b, &p)| p * self.partition.representative_m(b as u8))
                    .sum(),
                None => f64::INFINITY,
            },
        }
    }

    /// True when no frontier cell predicts anything nearer than the last
    /// bin: the signal that prediction cannot steer and exploration should.
    fn prediction_is_uninformative(&self, cells: &[Cell]) -> bool {
        let last = (self.partition.n_bins() - 1) as u8;
        cells.iter().all(|&cell| {
            let bin = self
                .prediction
                .map_or(BIN_UNKNOWN, |p| p.bin_at_global(cell));
            bin == BIN_UNKNOWN || bin == last
        })
    }
}

/// Corner of the local window the fallback drives toward: cycles clockwise
/// from the top-left every `corner_period` steps, clamped onto the map.
pub fn corner_goal(ctx: &GoalContext) -> Cell {
    let size = ctx.window_size as i32;
    let o = ctx.window_origin;
    let corners = [
        Cell::new(o.row, o.col),
        Cell::new(o.row, o.col + size - 1),
        Cell::new(o.row + size - 1, o.col + size - 1),
        Cell::new(o.row + size - 1, o.col),
    ];
    let phase = (ctx.step / ctx.corner_period.max(1)) % 4;
    let corner = corners[phase];
    Cell::new(
        corner.row.clamp(0, ctx.map_height as i32 - 1),
        corner.col.clamp(0, ctx.map_width as i32 - 1),
    )
}

fn fallback(ctx: &GoalContext, strategy: Strategy) -> MidTermGoal {
    MidTermGoal {
        cell: corner_goal(ctx),
        kind: GoalKind::ExplorationCorner,
        chosen_by: strategy,
    }
}

/// Argmin over `cells` by (key, travel time, row-major order). `cells` must
/// already be in row-major order for the final tie-break to hold.
fn argmin_by_key(
    ctx: &GoalContext,
    cells: &[Cell],
    key: impl Fn(&GoalContext, Cell) -> f64,
) -> Option<(Cell, f64)> {
    let mut best: Option<(f64, f64, Cell)> = None;
    for &cell in cells {
        let k = key(ctx, cell);
        if !k.is_finite() {
            continue;
        }
        let t = ctx.travel_m(cell);
        let better = match best {
            None => true,
            Some((bk, bt, _)) => k < bk || (k == bk && t < bt),
        };
        if better {
            best = Some((k, t, cell));
        }
    }
    best.map(|(k, _, cell)| (cell, k))
}

/// Path-planning selection: travel time to the frontier cell plus its
/// predicted remaining distance.
pub fn select_path_planning(ctx: &GoalContext) -> MidTermGoal {
    select_with_key(ctx, Strategy::PathPlanning, |ctx, cell| {
        ctx.travel_m(cell) + ctx.value_m(cell)
    })
}

/// Closest-first selection: predicted remaining distance alone.
pub fn select_closest_first(ctx: &GoalContext) -> MidTermGoal {
    select_with_key(ctx, Strategy::ClosestFirst, |ctx, cell| ctx.value_m(cell))
}

fn select_with_key(
    ctx: &GoalContext,
    strategy: Strategy,
    key: impl Fn(&GoalContext, Cell) -> f64,
) -> MidTermGoal {
    if let Some(cell) = ctx.mapped_target {
        return MidTermGoal {
            cell,
            kind: GoalKind::Target,
            chosen_by: strategy,
        };
    }
    if ctx.frontier.is_empty() || ctx.prediction_is_uninformative(&ctx.frontier.cells) {
        return fallback(ctx, strategy);
    }
    match argmin_by_key(ctx, &ctx.frontier.cells, key) {
        Some((cell, _)) => MidTermGoal {
            cell,
            kind: GoalKind::Frontier,
            chosen_by: strategy,
        },
        None => fallback(ctx, strategy),
    }
}

/// Door-first selection: when a door is in view and frontier cells lie in
/// its sector, run closest-first over that sector; otherwise over the full
/// frontier.
pub fn select_door_first(ctx: &GoalContext) -> MidTermGoal {
    if let Some(cell) = ctx.mapped_target {
        return MidTermGoal {
            cell,
            kind: GoalKind::Target,
            chosen_by: Strategy::DoorFirst,
        };
    }
    let with_sector = door_sector(ctx.frontier, ctx.pose, ctx.door_bearing, ctx.theta_rad);
    let sector = with_sector.door_sector.as_deref().unwrap_or(&[]);
    let cells: &[Cell] = if sector.is_empty() {
        &ctx.frontier.cells
    } else {
        sector
    };
    if cells.is_empty() || ctx.prediction_is_uninformative(cells) {
        return fallback(ctx, Strategy::DoorFirst);
    }
    match argmin_by_key(ctx, cells, |ctx, cell| ctx.value_m(cell)) {
        Some((cell, _)) => MidTermGoal {
            cell,
            kind: GoalKind::Frontier,
            chosen_by: Strategy::DoorFirst,
        },
        None => fallback(ctx, Strategy::DoorFirst),
    }
}

/// Random-exploration baseline: always the cycling window corner.
pub fn select_random_exploration(ctx: &GoalContext) -> MidTermGoal {
    MidTermGoal {
        cell: corner_goal(ctx),
        kind: GoalKind::ExplorationCorner,
        chosen_by: Strategy::RandomExploration,
    }
}

/// Frontier-exploration baseline: the nearest frontier cell (by travel
/// time) not yet selected before; the corner when none remains.
pub fn select_frontier_exploration(ctx: &GoalContext, visited: &HashSet<Cell>) -> MidTermGoal {
    let candidates: Vec<Cell> = ctx
        .frontier
        .cells
        .iter()
        .copied()
        .filter(|c| !visited.contains(c))
        .collect();
    match argmin_by_key(ctx, &candidates, |ctx, cell| ctx.travel_m(cell)) {
        Some((cell, _)) => MidTermGoal {
            cell,
            kind: GoalKind::Frontier,
            chosen_by: Strategy::FrontierExploration,
        },
        None => fallback(ctx, Strategy::FrontierExploration),
    }
}

/// Dispatcher applying the shared target override before any strategy runs,
/// so every policy walks to the target once it is mapped. `visited` is the
/// frontier-exploration memory of previously selected cells; the caller
/// inserts the returned cell.
pub fn select_goal(
    strategy: Strategy,
    ctx: &GoalContext,
    visited: &HashSet<Cell>,
) -> MidTermGoal {
    if let Some(cell) = ctx.mapped_target {
        return MidTermGoal {
            cell,
            kind: GoalKind::Target,
            chosen_by: strategy,
        };
    }
    match strategy {
        Strategy::PathPlanning => select_path_planning(ctx),
        Strategy::ClosestFirst => select_closest_first(ctx),
        Strategy::DoorFirst => select_door_first(ctx),
        Strategy::RandomExploration => select_random_exploration(ctx),
        Strategy::FrontierExploration => select_frontier_exploration(ctx, visited),
    }
}
