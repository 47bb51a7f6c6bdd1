//! Independent reference implementations the integration suites check the
//! library against, plus fixture builders. The geodesic oracle here uses
//! fixpoint value iteration with exact integer arithmetic instead of a
//! priority queue, so it shares no code path with the library solver.

#![allow(dead_code)]

use gridnav_core::grid::{Cell, Grid};
use gridnav_core::scene::{Instance, Scene};

/// Exact step-count pair: `s` orthogonal steps plus `d` diagonal steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepPair {
    pub s: u32,
    pub d: u32,
}

pub const UNREACHED: StepPair = StepPair {
    s: u32::MAX,
    d: u32::MAX,
};

impl StepPair {
    pub fn meters(&self, cell_size_m: f64) -> f64 {
        if *self == UNREACHED {
            f64::INFINITY
        } else {
            (self.s as f64 + self.d as f64 * std::f64::consts::SQRT_2) * cell_size_m
        }
    }
}

/// Exact comparison of `a.s + a.d * sqrt(2)` against the same for `b`,
/// in integers: reduce to comparing `x` with `y * sqrt(2)` for signed
/// `x = b.s - a.s`, `y = a.d - b.d`, i.e. `x^2` with `2 y^2` minding signs.
pub fn pair_less(a: StepPair, b: StepPair) -> bool {
    if b == UNREACHED {
        return a != UNREACHED;
    }
    if a == UNREACHED {
        return false;
    }
    let x = b.s as i64 - a.s as i64;
    let y = a.d as i64 - b.d as i64;
    // a < b  <=>  y * sqrt(2) < x.
    if y <= 0 {
        // Nonpositive left side: need x > 0, and magnitude check when both
        // nonpositive reduces to 2 y^2 > x^2 with x <= 0.
        if x > 0 {
            return true;
        }
        return 2 * y * y > x * x;
    }
    // Positive left side: need x positive and x^2 > 2 y^2.
    x > 0 && x * x > 2 * y * y
}

fn pair_add(p: StepPair, diagonal: bool) -> StepPair {
    if diagonal {
        StepPair { s: p.s, d: p.d + 1 }
    } else {
        StepPair { s: p.s + 1, d: p.d }
    }
}

/// 8-connected geodesic by value iteration to a fixpoint. Diagonal moves
/// are forbidden only when both orthogonal intermediates are blocked.
/// Sources count even on non-traversable cells; expansion then continues
/// through traversable cells only.
pub fn oracle_geodesic(traversable: &Grid<bool>, sources: &[Cell]) -> Grid<StepPair> {
    let mut dist = Grid::filled(traversable.height(), traversable.width(), UNREACHED);
    for &src in sources {
        dist.set(src, StepPair { s: 0, d: 0 });
    }
    let offsets: [(i32, i32); 8] = [
        (-1, -1),
        (-1, 0),
        (-1, 1),
        (0, -1),
        (0, 1),
        (1, -1),
        (1, 0),
        (1, 1),
    ];
    let mut changed = true;
    while changed {
        changed = false;
        for cell in dist.cells() {
            if !traversable[cell] || dist[cell] == UNREACHED {
                continue;
            }
            let here = dist[cell];
            for (dr, dc) in offsets {
                let n = Cell::new(cell.row + dr, cell.col + dc);
                if !traversable.in_bounds(n) || !traversable[n] {
                    continue;
                }
                let diagonal = dr != 0 && dc != 0;
                if diagonal {
                    let a = Cell::new(cell.row + dr, cell.col);
                    let b = Cell::new(cell.row, cell.col + dc);
                    if !traversable[a] && !traversable[b] {
                        continue;
                    }
                }
                let candidate = pair_add(here, diagonal);
                if pair_less(candidate, dist[n]) {
                    dist.set(n, candidate);
                    changed = true;
                }
            }
        }
        // Seeds on blocked cells relax their neighbors once; the loop above
        // skips them, so do it explicitly.
        for &src in sources {
            if traversable.get(src).copied().unwrap_or(false) {
                continue;
            }
            for (dr, dc) in offsets {
                let n = Cell::new(src.row + dr, src.col + dc);
                if !traversable.in_bounds(n) || !traversable[n] {
                    continue;
                }
                let diagonal = dr != 0 && dc != 0;
                if diagonal {
                    let a = Cell::new(src.row + dr, src.col);
                    let b = Cell::new(src.row, src.col + dc);
                    if !traversable[a] && !traversable[b] {
                        continue;
                    }
                }
                let candidate = pair_add(StepPair { s: 0, d: 0 }, diagonal);
                if pair_less(candidate, dist[n]) {
                    dist.set(n, candidate);
                    changed = true;
                }
            }
        }
    }
    dist
}

/// 4-connected hop distance by BFS; `u32::MAX` marks unreachable.
pub fn oracle_bfs4(traversable: &Grid<bool>, sources: &[Cell]) -> Grid<u32> {
    let mut dist = Grid::filled(traversable.height(), traversable.width(), u32::MAX);
    let mut queue = std::collections::VecDeque::new();
    for &src in sources {
        if traversable.in_bounds(src) && dist[src] == u32::MAX {
            dist.set(src, 0);
            queue.push_back(src);
        }
    }
    while let Some(cell) = queue.pop_front() {
        for (dr, dc) in [(-1, 0), (0, -1), (0, 1), (1, 0)] {
            let n = Cell::new(cell.row + dr, cell.col + dc);
            if traversable.in_bounds(n) && traversable[n] && dist[n] == u32::MAX {
                dist.set(n, dist[cell] + 1);
                queue.push_back(n);
            }
        }
    }
    dist
}

/// Builds a scene from an ASCII picture: `#` wall, `.` free space (and
/// spawnable), letters `a`..`l` object cells of categories 0..11 (one
/// instance per letter). Rows must share one width.
pub fn ascii_scene(rows: &[&str], cell_size_m: f64) -> Scene {
    let height = rows.len();
    let width = rows[0].len();
    let mut traversable = Grid::filled(height, width, false);
    let mut by_letter: std::collections::BTreeMap<u8, Vec<Cell>> = std::collections::BTreeMap::new();
    let mut spawn = Vec::new();
    for (r, row) in rows.iter().enumerate() {
        assert_eq!(row.len(), width, "ragged ascii scene");
        for (c, ch) in row.bytes().enumerate() {
            let cell = Cell::new(r as i32, c as i32);
            match ch {
                b'#' => {}
                b'.' => {
                    traversable.set(cell, true);
                    spawn.push(cell);
                }
                b'a'..=b'l' => {
                    by_letter.entry(ch - b'a').or_default().push(cell);
                }
                other => panic!("ascii scene: unexpected byte {other:?}"),
            }
        }
    }
    let instances = by_letter
        .into_iter()
        .map(|(category, cells)| Instance { category, cells })
        .collect();
    Scene::new(
        width,
        height,
        cell_size_m,
        traversable,
        instances,
        vec![],
        spawn,
        0,
    )
    .expect("ascii scene must validate")
}

/// Uniformly random open-space grid with the border walled, for randomized
/// cross-checks.
pub fn random_traversable(
    height: usize,
    width: usize,
    p_blocked: f64,
    rng: &mut impl rand::Rng,
) -> Grid<bool> {
    let mut grid = Grid::filled(height, width, false);
    for r in 1..height.saturating_sub(1) {
        for c in 1..width.saturating_sub(1) {
            grid.set(
                Cell::new(r as i32, c as i32),
                rng.random::<f64>() >= p_blocked,
            );
        }
    }
    grid
}
