//! Dense row-major grid storage and cell arithmetic.

use serde::{Deserialize, Serialize};

/// A grid coordinate. `row` 0 is the top row.
///
/// Stored as `i32` so that off-grid intermediate results (crop origins,
/// neighbor probes at the border) stay representable; accessors that take a
/// `Cell` treat out-of-bounds as absent rather than panicking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub row: i32,
    pub col: i32,
}

impl Cell {
    pub const fn new(row: i32, col: i32) -> Self {
        Cell { row, col }
    }

    /// Center of the cell in continuous (x, y) = (col, row) coordinates.
    pub fn center(&self) -> (f64, f64) {
        (self.col as f64 + 0.5, self.row as f64 + 0.5)
    }

    /// Euclidean distance between cell centers, in cell units.
    pub fn center_distance(&self, other: &Cell) -> f64 {
        let dr = (self.row - other.row) as f64;
        let dc = (self.col - other.col) as f64;
        (dr * dr + dc * dc).sqrt()
    }

    /// Chebyshev (8-connected king move) distance to `other`.
    pub fn chebyshev(&self, other: &Cell) -> i32 {
        (self.row - other.row).abs().max((self.col - other.col).abs())
    }
}

/// The four axis-aligned offsets, in row-major scan order.
pub const ORTHO_OFFSETS: [(i32, i32); 4] = [(-1, 0), (0, -1), (0, 1), (1, 0)];

/// All eight neighbor offsets, in row-major scan order.
pub const KING_OFFSETS: [(i32, i32); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// Dense row-major grid of `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(height: usize, width: usize, value: T) -> Self {
        Grid {
            height,
            width,
            data: vec![value; height * width],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(height: usize, width: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), height * width, "grid data length mismatch");
        Grid {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.row >= 0
            && cell.col >= 0
            && (cell.row as usize) < self.height
            && (cell.col as usize) < self.width
    }

    pub fn index_of(&self, cell: Cell) -> usize {
        debug_assert!(self.in_bounds(cell));
        cell.row as usize * self.width + cell.col as usize
    }

    pub fn cell_of(&self, index: usize) -> Cell {
        Cell::new((index / self.width) as i32, (index % self.width) as i32)
    }

    pub fn get(&self, cell: Cell) -> Option<&T> {
        if self.in_bounds(cell) {
            Some(&self.data[cell.row as usize * self.width + cell.col as usize])
        } else {
            None
        }
    }

    pub fn set(&mut self, cell: Cell, value: T) {
        let idx = self.index_of(cell);
        self.data[idx] = value;
    }

    /// All cells in row-major order. Captures the dimensions by value so
    /// the grid itself stays free to mutate during iteration.
    pub fn cells(&self) -> impl Iterator<Item = Cell> {
        let width = self.width;
        (0..self.height * self.width).map(move |i| Cell::new((i / width) as i32, (i % width) as i32))
    }

    /// In-bounds orthogonal neighbors of `cell`, in row-major order.
    pub fn ortho_neighbors(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        ORTHO_OFFSETS
            .iter()
            .map(move |&(dr, dc)| Cell::new(cell.row + dr, cell.col + dc))
            .filter(move |c| self.in_bounds(*c))
    }

    /// In-bounds 8-connected neighbors of `cell`, in row-major order.
    pub fn king_neighbors(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        KING_OFFSETS
            .iter()
            .map(move |&(dr, dc)| Cell::new(cell.row + dr, cell.col + dc))
            .filter(move |c| self.in_bounds(*c))
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn row_slice(&self, row: usize) -> &[T] {
        &self.data[row * self.width..(row + 1) * self.width]
    }

    pub fn row_slice_mut(&mut self, row: usize) -> &mut [T] {
        &mut self.data[row * self.width..(row + 1) * self.width]
    }
}

impl<T> std::ops::Index<Cell> for Grid<T> {
    type Output = T;

    fn index(&self, cell: Cell) -> &T {
        assert!(self.in_bounds(cell), "cell {cell:?} out of bounds");
        &self.data[cell.row as usize * self.width + cell.col as usize]
    }
}

impl<T> std::ops::IndexMut<Cell> for Grid<T> {
    fn index_mut(&mut self, cell: Cell) -> &mut T {
        assert!(self.in_bounds(cell), "cell {cell:?} out of bounds");
        &mut self.data[cell.row as usize * self.width + cell.col as usize]
    }
}

/// Visits every cell the open segment from `from` to `to` passes through,
/// in order, excluding the cell containing `from`. Crossing a lattice corner
/// exactly visits both cells adjacent to the corner as well, so the walk
/// over-approximates any sampled traversal of the same segment. Returns
/// false as soon as `visit` does; points use (x, y) = (col, row) axes.
pub fn walk_supercover(
    from: (f64, f64),
    to: (f64, f64),
    mut visit: impl FnMut(Cell) -> bool,
) -> bool {
    let (mut cx, mut cy) = (from.0.floor() as i64, from.1.floor() as i64);
    let (ex, ey) = (to.0.floor() as i64, to.1.floor() as i64);
    let (dx, dy) = (to.0 - from.0, to.1 - from.1);
    let sx: i64 = if dx > 0.0 { 1 } else { -1 };
    let sy: i64 = if dy > 0.0 { 1 } else { -1 };
    let mut t_max_x = if dx != 0.0 {
        ((cx + (dx > 0.0) as i64) as f64 - from.0) / dx
    } else {
        f64::INFINITY
    };
    let mut t_max_y = if dy != 0.0 {
        ((cy + (dy > 0.0) as i64) as f64 - from.1) / dy
    } else {
        f64::INFINITY
    };
    let t_delta_x = if dx != 0.0 { 1.0 / dx.abs() } else { f64::INFINITY };
    let t_delta_y = if dy != 0.0 { 1.0 / dy.abs() } else { f64::INFINITY };
    let mut guard = 2 * ((ex - cx).abs() + (ey - cy).abs()) + 4;
    while (cx, cy) != (ex, ey) {
        guard -= 1;
        if guard < 0 {
            return false;
        }
        if t_max_x == t_max_y {
            if !visit(Cell::new(cy as i32, (cx + sx) as i32))
                || !visit(Cell::new((cy + sy) as i32, cx as i32))
            {
                return false;
            }
            cx += sx;
            cy += sy;
            t_max_x += t_delta_x;
            t_max_y += t_delta_y;
        } else if t_max_x < t_max_y {
            cx += sx;
            t_max_x += t_delta_x;
        } else {
            cy += sy;
            t_max_y += t_delta_y;
        }
        if !visit(Cell::new(cy as i32, cx as i32)) {
            return false;
        }
    }
    true
}

/// Wrap an angle to the half-open interval `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut a = theta.rem_euclid(two_pi);
    if a > std::f64::consts::PI {
        a -= two_pi;
    }
    a
}

/// Normalize an angle to `[0, 2*pi)`.
pub fn normalize_angle(theta: f64) -> f64 {
    theta.rem_euclid(2.0 * std::f64::consts::PI)
}
