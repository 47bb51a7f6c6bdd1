//! Simulated semantic sensing and the incremental bird's-eye semantic map.
//!
//! The map holds k = c_S + 2 boolean channels per cell: channel 0 marks
//! obstacles, channel 1 marks explored cells, and channels 2..k mark semantic
//! categories. All updates are set-only, so every channel grows monotonically
//! over an episode.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grid::{Cell, Grid};
use crate::scene::{Pose, Scene};

const OBSTACLE_BIT: u32 = 1 << 0;
const EXPLORED_BIT: u32 = 1 << 1;
const CHANNEL_BASE: u32 = 2;

/// Multi-channel occupancy map stored as one bitmask word per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticGrid {
    bits: Grid<u32>,
    n_categories: u8,
    cell_size_m: f64,
    presence: u32,
    category_cells: Vec<Vec<Cell>>,
    explored_count: usize,
}

impl SemanticGrid {
    pub fn new(height: usize, width: usize, n_categories: u8, cell_size_m: f64) -> SemanticGrid {
        assert!(n_categories <= 30, "bitmask holds at most 30 categories");
        SemanticGrid {
            bits: Grid::filled(height, width, 0),
            n_categories,
            cell_size_m,
            presence: 0,
            category_cells: vec![Vec::new(); n_categories as usize],
            explored_count: 0,
        }
    }

    /// Rebuilds a grid from raw channel words, restoring the derived caches.
    pub fn from_bits(bits: Grid<u32>, n_categories: u8, cell_size_m: f64) -> SemanticGrid {
        assert!(n_categories <= 30);
        let mut grid = SemanticGrid {
            bits,
            n_categories,
            cell_size_m,
            presence: 0,
            category_cells: vec![Vec::new(); n_categories as usize],
            explored_count: 0,
        };
        for i in 0..grid.bits.len() {
            let word = grid.bits.data()[i];
            if word == 0 {
                continue;
            }
            let cell = grid.bits.cell_of(i);
            if word & EXPLORED_BIT != 0 {
                grid.explored_count += 1;
            }
            for c in 0..n_categories {
                if word & (1 << (CHANNEL_BASE + c as u32)) != 0 {
                    grid.presence |= 1 << c;
                    grid.category_cells[c as usize].push(cell);
                }
            }
        }
        grid
    }

    pub fn height(&self) -> usize {
        self.bits.height()
    }

    pub fn width(&self) -> usize {
        self.bits.width()
    }

    pub fn n_categories(&self) -> u8 {
        self.n_categories
    }

    /// Channel count k: obstacle + explored + one per category.
    pub fn n_channels(&self) -> usize {
        self.n_categories as usize + 2
    }

    pub fn cell_size_m(&self) -> f64 {
        self.cell_size_m
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        self.bits.in_bounds(cell)
    }

    pub fn obstacle(&self, cell: Cell) -> bool {
        self.bits.get(cell).is_some_and(|&b| b & OBSTACLE_BIT != 0)
    }

    pub fn explored(&self, cell: Cell) -> bool {
        self.bits.get(cell).is_some_and(|&b| b & EXPLORED_BIT != 0)
    }

    pub fn category(&self, cell: Cell, c: u8) -> bool {
        debug_assert!(c < self.n_categories);
        self.bits
            .get(cell)
            .is_some_and(|&b| b & (1 << (CHANNEL_BASE + c as u32)) != 0)
    }

    pub fn set_obstacle(&mut self, cell: Cell) {
        self.set_explored(cell);
        self.bits[cell] |= OBSTACLE_BIT;
    }

    pub fn set_explored(&mut self, cell: Cell) {
        let word = &mut self.bits[cell];
        if *word & EXPLORED_BIT == 0 {
            *word |= EXPLORED_BIT;
            self.explored_count += 1;
        }
    }

    /// Marks a semantic category; implies explored, keeping the
    /// semantic-implies-explored invariant structural.
    pub fn set_category(&mut self, cell: Cell, c: u8) {
        assert!(c < self.n_categories, "category {c} out of range");
        self.set_explored(cell);
        let mask = 1 << (CHANNEL_BASE + c as u32);
        let word = &mut self.bits[cell];
        if *word & mask == 0 {
            *word |= mask;
            self.presence |= 1 << c;
            self.category_cells[c as usize].push(cell);
        }
    }

    /// Lowest category marked at `cell`, if any.
    pub fn category_label(&self, cell: Cell) -> Option<u8> {
        let word = self.raw_bits(cell) >> CHANNEL_BASE;
        if word == 0 {
            None
        } else {
            Some(word.trailing_zeros() as u8)
        }
    }

    /// Whether any cell carries category `c`. O(1).
    pub fn has_category(&self, c: u8) -> bool {
        c < self.n_categories && self.presence & (1 << c) != 0
    }

    /// Cells carrying category `c`, in the order they were first marked.
    pub fn category_cells(&self, c: u8) -> &[Cell] {
        &self.category_cells[c as usize]
    }

    /// Distinct categories with at least one marked cell, ascending.
    pub fn categories_present(&self) -> Vec<u8> {
        (0..self.n_categories)
            .filter(|&c| self.presence & (1 << c) != 0)
            .collect()
    }

    pub fn explored_count(&self) -> usize {
        self.explored_count
    }

    pub fn raw_bits(&self, cell: Cell) -> u32 {
        self.bits.get(cell).copied().unwrap_or(0)
    }

    /// Obstacle channel as a plain boolean grid.
    pub fn obstacle_grid(&self) -> Grid<bool> {
        Grid::from_vec(
            self.height(),
            self.width(),
            self.bits.data().iter().map(|&b| b & OBSTACLE_BIT != 0).collect(),
        )
    }

    /// Explored-and-free cells as a traversability grid.
    pub fn known_free_grid(&self) -> Grid<bool> {
        Grid::from_vec(
            self.height(),
            self.width(),
            self.bits
                .data()
                .iter()
                .map(|&b| b & EXPLORED_BIT != 0 && b & OBSTACLE_BIT == 0)
                .collect(),
        )
    }

    /// Value of channel `plane` (0 = obstacle, 1 = explored, 2.. = category)
    /// at `cell`, for channel exports.
    pub fn channel(&self, cell: Cell, plane: usize) -> bool {
        let word = self.raw_bits(cell);
        word & (1 << plane as u32) != 0
    }
}

/// Agent-centered window into the global map.
#[derive(Debug, Clone)]
pub struct LocalMap {
    pub map: SemanticGrid,
    /// Global coordinates of the window's (0, 0) cell; may be negative when
    /// the window hangs off the global map.
    pub origin: Cell,
}

impl LocalMap {
    pub fn to_global(&self, local: Cell) -> Cell {
        Cell::new(local.row + self.origin.row, local.col + self.origin.col)
    }

    pub fn to_local(&self, global: Cell) -> Option<Cell> {
        let local = Cell::new(global.row - self.origin.row, global.col - self.origin.col);
        self.map.in_bounds(local).then_some(local)
    }
}

/// Crops a `size` x `size` window centered on `center`, zero-padding beyond
/// the global map edges.
pub fn crop_local(map: &SemanticGrid, center: Cell, size: usize) -> LocalMap {
    let half = size as i32 / 2;
    let origin = Cell::new(center.row - half, center.col - half);
    let mut bits = Grid::filled(size, size, 0u32);
    let h = map.height() as i32;
    let w = map.width() as i32;
    for lr in 0..size as i32 {
        let gr = origin.row + lr;
        if gr < 0 || gr >= h {
            continue;
        }
        let g0 = origin.col.clamp(0, w);
        let g1 = (origin.col + size as i32).clamp(0, w);
        if g0 >= g1 {
            continue;
        }
        let l0 = (g0 - origin.col) as usize;
        let src_row = map.bits.row_slice(gr as usize);
        let dst_row = bits.row_slice_mut(lr as usize);
        dst_row[l0..l0 + (g1 - g0) as usize]
            .copy_from_slice(&src_row[g0 as usize..g1 as usize]);
    }
    LocalMap {
        map: SemanticGrid::from_bits(bits, map.n_categories(), map.cell_size_m()),
        origin,
    }
}

/// How cell visibility is decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VisibilityMode {
    /// A fan of rays marched with DDA grid traversal; cells are visible
    /// where some ray reaches them. Resolution set by `rays_per_degree`.
    RayFan,
    /// Exact per-cell test: a cell is visible when the straight line of
    /// cells between it and the agent (a supercover-style Bresenham walk,
    /// canonicalized so visibility is symmetric) contains no obstacle.
    PerCell,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorConfig {
    pub fov_deg: f64,
    pub range_m: f64,
    pub rays_per_degree: f64,
    pub mode: VisibilityMode,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig {
            fov_deg: 90.0,
            range_m: 5.0,
            rays_per_degree: 1.0,
            mode: VisibilityMode::RayFan,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObservedCell {
    pub cell: Cell,
    pub is_obstacle: bool,
    pub category: Option<u8>,
}

#[derive(Debug, Clone)]
pub struct Observation {
    /// Visible cells in deterministic visit order, without duplicates.
    pub cells: Vec<ObservedCell>,
    pub door_visible: bool,
    pub door_bearing: Option<f64>,
}

/// Casts the sensor from `pose` and reports every visible cell. Obstacle
/// cells terminate visibility but are themselves visible.
pub fn sense(scene: &Scene, pose: &Pose, config: &SensorConfig) -> Observation {
    let range_cells = config.range_m / scene.cell_size_m;
    let mut seen = Grid::filled(scene.height, scene.width, false);
    let mut cells = Vec::new();
    let emit = |cell: Cell, seen: &mut Grid<bool>, cells: &mut Vec<ObservedCell>| {
        if !seen[cell] {
            seen[cell] = true;
            cells.push(ObservedCell {
                cell,
                is_obstacle: !scene.is_traversable(cell),
                category: scene.category_at(cell),
            });
        }
    };

    let start = pose.cell();
    if scene.traversable.in_bounds(start) {
        emit(start, &mut seen, &mut cells);
    }

    match config.mode {
        VisibilityMode::RayFan => {
            let fov = config.fov_deg.to_radians();
            let n_rays = ((config.fov_deg * config.rays_per_degree).ceil() as usize).max(1) + 1;
            for i in 0..n_rays {
                let angle = if n_rays == 1 {
                    pose.heading
                } else {
                    pose.heading - fov / 2.0 + fov * i as f64 / (n_rays - 1) as f64
                };
                cast_ray(scene, pose, angle, range_cells, &mut |cell| {
                    emit(cell, &mut seen, &mut cells)
                });
            }
        }
        VisibilityMode::PerCell => {
            let fov = config.fov_deg.to_radians();
            let full_circle = config.fov_deg >= 360.0 - 1e-9;
            let r = range_cells.floor() as i32;
            for dr in -r..=r {
                for dc in -r..=r {
                    let cell = Cell::new(start.row + dr, start.col + dc);
                    if cell == start || !scene.traversable.in_bounds(cell) {
                        continue;
                    }
                    if pose.distance_to(cell) > range_cells {
                        continue;
                    }
                    if !full_circle {
                        let err = crate::grid::wrap_angle(pose.bearing_to(cell) - pose.heading);
                        if err.abs() > fov / 2.0 + 1e-9 {
                            continue;
                        }
                    }
                    if line_of_sight(scene, start, cell) {
                        emit(cell, &mut seen, &mut cells);
                    }
                }
            }
        }
    }

    let mut door_bearing = None;
    let mut best = f64::INFINITY;
    for oc in &cells {
        if scene.is_door(oc.cell) {
            let d = pose.distance_to(oc.cell);
            if d < best {
                best = d;
                door_bearing = Some(pose.bearing_to(oc.cell));
            }
        }
    }
    Observation {
        door_visible: door_bearing.is_some(),
        door_bearing,
        cells,
    }
}

/// DDA grid traversal from the pose along `angle`, visiting cells in order
/// until the range, the grid edge, or an obstacle cell (emitted, then stop).
fn cast_ray(
    scene: &Scene,
    pose: &Pose,
    angle: f64,
    range_cells: f64,
    emit: &mut impl FnMut(Cell),
) {
    let dx = angle.cos();
    let dy = angle.sin();
    let mut row = pose.y.floor() as i32;
    let mut col = pose.x.floor() as i32;
    let step_c: i32 = if dx > 0.0 { 1 } else { -1 };
    let step_r: i32 = if dy > 0.0 { 1 } else { -1 };
    let mut t_max_c = if dx.abs() < 1e-12 {
        f64::INFINITY
    } else if dx > 0.0 {
        (col as f64 + 1.0 - pose.x) / dx
    } else {
        (pose.x - col as f64) / -dx
    };
    let mut t_max_r = if dy.abs() < 1e-12 {
        f64::INFINITY
    } else if dy > 0.0 {
        (row as f64 + 1.0 - pose.y) / dy
    } else {
        (pose.y - row as f64) / -dy
    };
    let t_delta_c = if dx.abs() < 1e-12 { f64::INFINITY } else { 1.0 / dx.abs() };
    let t_delta_r = if dy.abs() < 1e-12 { f64::INFINITY } else { 1.0 / dy.abs() };

    loop {
        let t = t_max_c.min(t_max_r);
        if t > range_cells {
            return;
        }
        if t_max_c <= t_max_r {
            t_max_c += t_delta_c;
            col += step_c;
        } else {
            t_max_r += t_delta_r;
            row += step_r;
        }
        let cell = Cell::new(row, col);
        if !scene.traversable.in_bounds(cell) {
            return;
        }
        emit(cell);
        if !scene.traversable[cell] {
            return;
        }
    }
}

/// True when no obstacle lies strictly between `a` and `b`. Endpoints are
/// ordered before the walk so the answer is symmetric in `a` and `b`.
fn line_of_sight(scene: &Scene, a: Cell, b: Cell) -> bool {
    let (from, to) = if (a.row, a.col) <= (b.row, b.col) {
        (a, b)
    } else {
        (b, a)
    };
    for cell in bresenham(from, to) {
        if cell == from || cell == to {
            continue;
        }
        if !scene.traversable[cell] {
            return false;
        }
    }
    true
}

/// Integer Bresenham line from `a` to `b`, inclusive.
fn bresenham(a: Cell, b: Cell) -> Vec<Cell> {
    let mut cells = Vec::new();
    let dr = (b.row - a.row).abs();
    let dc = (b.col - a.col).abs();
    let sr = if a.row < b.row { 1 } else { -1 };
    let sc = if a.col < b.col { 1 } else { -1 };
    let mut err = dc - dr;
    let (mut r, mut c) = (a.row, a.col);
    loop {
        cells.push(Cell::new(r, c));
        if r == b.row && c == b.col {
            break;
        }
        let e2 = 2 * err;
        if e2 > -dr {
            err -= dr;
            c += sc;
        }
        if e2 < dc {
            err += dc;
            r += sr;
        }
    }
    cells
}

/// Sensor corruption applied while writing observations into the map:
/// a semantic detection is dropped with probability `p_miss`, and an
/// undropped one is relabeled to a uniformly random other category with
/// probability `p_sem`. Obstacle and explored channels are never corrupted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    pub p_sem: f64,
    pub p_miss: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            p_sem: 0.0,
            p_miss: 0.0,
        }
    }
}

/// Writes an observation into the map. Cells only ever gain marks.
pub fn update_map(
    map: &mut SemanticGrid,
    obs: &Observation,
    agent_cell: Cell,
    noise: &NoiseModel,
    rng: &mut ChaCha8Rng,
) {
    if map.in_bounds(agent_cell) {
        map.set_explored(agent_cell);
    }
    let n = map.n_categories();
    for oc in &obs.cells {
        map.set_explored(oc.cell);
        if oc.is_obstacle {
            map.set_obstacle(oc.cell);
        }
        if let Some(c) = oc.category {
            if noise.p_miss > 0.0 && rng.random::<f64>() < noise.p_miss {
                continue;
            }
            let label = if noise.p_sem > 0.0 && rng.random::<f64>() < noise.p_sem && n > 1 {
                (c + 1 + rng.random_range(0..n as u32 - 1) as u8) % n
            } else {
                c
            };
            map.set_category(oc.cell, label);
        }
    }
}
