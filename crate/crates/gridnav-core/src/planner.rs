//! Travel-time planning on the partially known map: a fast-marching solver
//! for the eikonal equation, an exact-geodesic alternative, gradient-descent
//! path extraction, and the one-step controller that turns a path into an
//! action.
//!
//! Planning treats unexplored cells as free, inflates mapped obstacles by
//! one cell, and always clears the agent's own cell.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distance::geodesic_field;
use crate::grid::{walk_supercover, wrap_angle, Cell, Grid, KING_OFFSETS, ORTHO_OFFSETS};
use crate::scene::{Action, Kinematics, Pose};
use crate::sensing::SemanticGrid;

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("no source cells given")]
    EmptySources,
    #[error("source cell ({}, {}) lies on an obstacle", .0.row, .0.col)]
    SourceOnObstacle(Cell),
    #[error("cell ({}, {}) has no finite arrival time", .0.row, .0.col)]
    UnreachableCell(Cell),
}

/// Which solver fills in the travel-time field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerBackend {
    /// First-order fast-marching solution of the eikonal equation.
    Fmm,
    /// Exact 8-connected geodesic distances.
    Dijkstra,
}

impl Default for PlannerBackend {
    fn default() -> Self {
        PlannerBackend::Fmm
    }
}

/// Arrival time from the nearest source, in cell units; +inf where blocked
/// or unreached.
#[derive(Debug, Clone)]
pub struct TravelTimeField {
    pub arrival: Grid<f64>,
    pub sources: Vec<Cell>,
}

impl TravelTimeField {
    pub fn arrival_at(&self, cell: Cell) -> f64 {
        self.arrival.get(cell).copied().unwrap_or(f64::INFINITY)
    }
}

/// Solves the unit-speed eikonal equation from `sources` with a first-order
/// upwind stencil. Obstacle cells never receive a finite arrival.
pub fn fmm_solve(obstacle: &Grid<bool>, sources: &[Cell]) -> Result<TravelTimeField, PlannerError> {
    solve_with(PlannerBackend::Fmm, obstacle, sources)
}

/// Exact 8-connected geodesic arrivals; same interface as [`fmm_solve`].
pub fn dijkstra_solve(
    obstacle: &Grid<bool>,
    sources: &[Cell],
) -> Result<TravelTimeField, PlannerError> {
    solve_with(PlannerBackend::Dijkstra, obstacle, sources)
}

pub fn solve_with(
    backend: PlannerBackend,
    obstacle: &Grid<bool>,
    sources: &[Cell],
) -> Result<TravelTimeField, PlannerError> {
    if sources.is_empty() {
        return Err(PlannerError::EmptySources);
    }
    for &src in sources {
        if !obstacle.in_bounds(src) || obstacle[src] {
            return Err(PlannerError::SourceOnObstacle(src));
        }
    }
    let arrival = match backend {
        PlannerBackend::Fmm => fmm_arrivals(obstacle, sources),
        PlannerBackend::Dijkstra => {
            let free = Grid::from_vec(
                obstacle.height(),
                obstacle.width(),
                obstacle.data().iter().map(|&b| !b).collect(),
            );
            geodesic_field(&free, sources, 1.0)
                .expect("sources checked above")
                .to_grid_m()
        }
    };
    Ok(TravelTimeField {
        arrival,
        sources: sources.to_vec(),
    })
}

fn fmm_arrivals(obstacle: &Grid<bool>, sources: &[Cell]) -> Grid<f64> {
    let h = obstacle.height();
    let w = obstacle.width();
    let mut arrival = Grid::filled(h, w, f64::INFINITY);
    let mut accepted = Grid::filled(h, w, false);
    let mut heap: BinaryHeap<Reverse<(u64, u32)>> = BinaryHeap::new();
    for &src in sources {
        arrival[src] = 0.0;
        heap.push(Reverse((0u64, obstacle.index_of(src) as u32)));
    }
    while let Some(Reverse((bits, idx))) = heap.pop() {
        let cell = obstacle.cell_of(idx as usize);
        if accepted[cell] || f64::from_bits(bits) > arrival[cell] {
            continue;
        }
        accepted[cell] = true;
        for &(dr, dc) in &ORTHO_OFFSETS {
            let next = Cell::new(cell.row + dr, cell.col + dc);
            if !obstacle.in_bounds(next) || obstacle[next] || accepted[next] {
                continue;
            }
            let t = eikonal_update(&arrival, &accepted, next);
            if t < arrival[next] {
                arrival[next] = t;
                heap.push(Reverse((t.to_bits(), obstacle.index_of(next) as u32)));
            }
        }
    }
    arrival
}

/// Upwind update from accepted neighbors: with smaller axis value `a` and
/// larger `b`, the quadratic (T-a)^2 + (T-b)^2 = 1 when both axes
/// contribute, else T = a + 1.
fn eikonal_update(arrival: &Grid<f64>, accepted: &Grid<bool>, cell: Cell) -> f64 {
    let axis_min = |offsets: [(i32, i32); 2]| {
        offsets
            .iter()
            .map(|&(dr, dc)| Cell::new(cell.row + dr, cell.col + dc))
            .filter(|&n| accepted.get(n).copied().unwrap_or(false))
            .map(|n| arrival[n])
            .fold(f64::INFINITY, f64::min)
    };
    let horizontal = axis_min([(0, -1), (0, 1)]);
    let vertical = axis_min([(-1, 0), (1, 0)]);
    let (a, b) = if horizontal <= vertical {
        (horizontal, vertical)
    } else {
        (vertical, horizontal)
    };
    if !a.is_finite() {
        return f64::INFINITY;
    }
    if b - a >= 1.0 {
        a + 1.0
    } else {
        let diff = b - a;
        (a + b + (2.0 - diff * diff).sqrt()) / 2.0
    }
}

/// Steepest-descent path from `start` down to an arrival of zero. Each step
/// moves to the strict-minimum neighbor (row-major tie-break); diagonal
/// steps additionally require both orthogonal companions to be finite, so
/// the path never cuts an inflated corner.
pub fn extract_path(field: &TravelTimeField, start: Cell) -> Result<Vec<Cell>, PlannerError> {
    if !field.arrival_at(start).is_finite() {
        return Err(PlannerError::UnreachableCell(start));
    }
    let mut path = vec![start];
    let mut cur = start;
    let limit = field.arrival.len() + 1;
    while field.arrival_at(cur) > 0.0 {
        let mut best: Option<(f64, Cell)> = None;
        for &(dr, dc) in &KING_OFFSETS {
            let next = Cell::new(cur.row + dr, cur.col + dc);
            let t = field.arrival_at(next);
            if !t.is_finite() || t >= field.arrival_at(cur) {
                continue;
            }
            if dr != 0 && dc != 0 {
                let side_a = field.arrival_at(Cell::new(cur.row, next.col));
                let side_b = field.arrival_at(Cell::new(next.row, cur.col));
                if !side_a.is_finite() || !side_b.is_finite() {
                    continue;
                }
            }
            if best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, next));
            }
        }
        match best {
            Some((_, next)) => {
                path.push(next);
                cur = next;
            }
            None => return Err(PlannerError::UnreachableCell(cur)),
        }
        if path.len() > limit {
            return Err(PlannerError::UnreachableCell(start));
        }
    }
    Ok(path)
}

/// Nearest cell to `goal` with a finite arrival, by center distance with a
/// row-major tie-break. `None` only if the whole field is infinite.
pub fn resolve_goal(field: &TravelTimeField, goal: Cell) -> Option<Cell> {
    if field.arrival_at(goal).is_finite() {
        return Some(goal);
    }
    let mut best: Option<(f64, Cell)> = None;
    for cell in field.arrival.cells() {
        if !field.arrival[cell].is_finite() {
            continue;
        }
        let d = cell.center_distance(&goal);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, cell));
        }
    }
    best.map(|(_, cell)| cell)
}

/// Dilates obstacles by a Chebyshev radius.
pub fn inflate_obstacles(obstacle: &Grid<bool>, radius: i32) -> Grid<bool> {
    if radius <= 0 {
        return obstacle.clone();
    }
    let mut out = Grid::filled(obstacle.height(), obstacle.width(), false);
    for cell in obstacle.cells() {
        if !obstacle[cell] {
            continue;
        }
        for dr in -radius..=radius {
            for dc in -radius..=radius {
                let n = Cell::new(cell.row + dr, cell.col + dc);
                if out.in_bounds(n) {
                    out[n] = true;
                }
            }
        }
    }
    out
}

/// Obstacle grid used for planning: mapped obstacles inflated by
/// `inflation_cells`, unexplored space left free, and the agent's own cell
/// force-cleared so a brush with the inflation ring cannot strand it.
pub fn planning_grid(map: &SemanticGrid, agent: Cell, inflation_cells: i32) -> Grid<bool> {
    let mut grid = inflate_obstacles(&map.obstacle_grid(), inflation_cells);
    if grid.in_bounds(agent) {
        grid[agent] = false;
    }
    grid
}

/// Length of a grid path in cell units (1 per orthogonal step, sqrt(2) per
/// diagonal step).
pub fn path_length_cells(path: &[Cell]) -> f64 {
    path.windows(2)
        .map(|w| {
            if w[0].row != w[1].row && w[0].col != w[1].col {
                std::f64::consts::SQRT_2
            } else {
                1.0
            }
        })
        .sum()
}

/// Whether the straight segment between two points crosses only cells not
/// marked as obstacles, using the same supercover walk as the collision
/// sweep so the two can never disagree about a clipped corner. The cell
/// containing `from` is not checked; out-of-bounds cells count as blocked
/// and unknown cells as free.
pub fn segment_known_free(obstacle: &Grid<bool>, from: (f64, f64), to: (f64, f64)) -> bool {
    walk_supercover(from, to, |cell| obstacle.in_bounds(cell) && !obstacle[cell])
}

/// One-step waypoint controller. Stops when the known target distance is
/// within the success radius. Otherwise aims at the furthest path cell
/// that is both in line of sight and drivable: rotating to the reachable
/// heading nearest its bearing leaves the swept forward segment free of
/// known obstacles. Turns one step toward that heading, or drives once
/// aligned. With no drivable waypoint the controller degenerates to an
/// in-place scan turn, leaving termination to the stop rule.
pub fn path_to_action(
    path: &[Cell],
    pose: &Pose,
    kin: &Kinematics,
    cell_size_m: f64,
    target_distance_m: Option<f64>,
    success_radius_m: f64,
    obstacle: &Grid<bool>,
) -> Action {
    if let Some(d) = target_distance_m {
        if d <= success_radius_m {
            return Action::Stop;
        }
    }
    let origin = (pose.x, pose.y);
    let step_cells = kin.forward_step_m / cell_size_m;
    let turn = kin.turn_angle_rad();
    for &cell in path.iter().rev() {
        if pose.distance_to(cell) < 0.25 {
            continue;
        }
        let (cx, cy) = cell.center();
        if !segment_known_free(obstacle, origin, (cx, cy)) {
            continue;
        }
        // Headings are reachable only on the 30-degree lattice around the
        // current one; settle on the lattice point nearest the bearing and
        // require the forward sweep from there to be clear.
        let error = wrap_angle(pose.bearing_to(cell) - pose.heading);
        let k = (error / turn).round();
        let settle = pose.heading + k * turn;
        let ahead = (
            pose.x + settle.cos() * step_cells,
            pose.y + settle.sin() * step_cells,
        );
        if !segment_known_free(obstacle, origin, ahead) {
            continue;
        }
        return if k > 0.0 {
            Action::TurnLeft
        } else if k < 0.0 {
            Action::TurnRight
        } else {
            Action::MoveForward
        };
    }
    Action::TurnLeft
}
