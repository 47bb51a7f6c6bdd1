//! Frontier extraction: the boundary cells between explored free space and
//! unexplored space, plus the heading-anchored door sector used by the
//! door-first strategy.

use serde::{Deserialize, Serialize};

use crate::grid::{wrap_angle, Cell};
use crate::scene::Pose;
use crate::sensing::SemanticGrid;

/// Neighborhood used when testing for adjacent unexplored cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Adjacency {
    Four,
    Eight,
}

impl Default for Adjacency {
    fn default() -> Self {
        Adjacency::Eight
    }
}

/// Frontier cells in row-major order, with an optional door-sector subset.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FrontierSet {
    pub cells: Vec<Cell>,
    /// Frontier cells inside the door-facing cone; `None` until
    /// [`door_sector`] has been applied.
    pub door_sector: Option<Vec<Cell>>,
}

impl FrontierSet {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Shifts every cell by `offset`, e.g. from local-window to global
    /// coordinates.
    pub fn translate(&self, offset: Cell) -> FrontierSet {
        let shift = |cells: &[Cell]| {
            cells
                .iter()
                .map(|c| Cell::new(c.row + offset.row, c.col + offset.col))
                .collect()
        };
        FrontierSet {
            cells: shift(&self.cells),
            door_sector: self.door_sector.as_deref().map(shift),
        }
    }
}

/// Whether one cell satisfies the frontier predicate: explored, free, and
/// adjacent to at least one in-bounds unexplored cell.
pub fn is_frontier_cell(map: &SemanticGrid, cell: Cell, adjacency: Adjacency) -> bool {
    if !map.in_bounds(cell) || !map.explored(cell) || map.obstacle(cell) {
        return false;
    }
    let offsets: &[(i32, i32)] = match adjacency {
        Adjacency::Four => &crate::grid::ORTHO_OFFSETS,
        Adjacency::Eight => &crate::grid::KING_OFFSETS,
    };
    offsets.iter().any(|&(dr, dc)| {
        let n = Cell::new(cell.row + dr, cell.col + dc);
        map.in_bounds(n) && !map.explored(n)
    })
}

/// Extracts frontier cells: explored, free, and adjacent to at least one
/// in-bounds unexplored cell. Cells come out in row-major order.
pub fn extract_frontier(map: &SemanticGrid, adjacency: Adjacency) -> FrontierSet {
    let mut cells = Vec::new();
    for row in 0..map.height() as i32 {
        for col in 0..map.width() as i32 {
            let cell = Cell::new(row, col);
            if is_frontier_cell(map, cell, adjacency) {
                cells.push(cell);
            }
        }
    }
    FrontierSet {
        cells,
        door_sector: None,
    }
}

/// Splits off the frontier cells lying inside a cone of half-angle
/// `theta_rad / 2` around the agent heading. The sector is empty unless a
/// door bearing is known and itself falls inside the cone.
pub fn door_sector(
    frontier: &FrontierSet,
    pose: &Pose,
    door_bearing: Option<f64>,
    theta_rad: f64,
) -> FrontierSet {
    let half = theta_rad / 2.0;
    let sector = match door_bearing {
        Some(bearing) if wrap_angle(bearing - pose.heading).abs() <= half => frontier
            .cells
            .iter()
            .copied()
            .filter(|&cell| wrap_angle(pose.bearing_to(cell) - pose.heading).abs() <= half)
            .collect(),
        _ => Vec::new(),
    };
    FrontierSet {
        cells: frontier.cells.clone(),
        door_sector: Some(sector),
    }
}
