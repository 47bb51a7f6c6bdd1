//! Procedural floorplan generation: BSP room splits, door carving, and
//! relation-aware object placement.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grid::{Cell, Grid};
use crate::scene::{
    CategorySet, Door, DoorOrientation, Instance, Scene, SceneError,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    pub width: usize,
    pub height: usize,
    pub cell_size_m: f64,
    /// Inclusive room-count range the BSP aims for.
    pub rooms: [usize; 2],
    pub min_room_m: f64,
    pub door_width_cells: usize,
    pub furniture_per_room: [usize; 2],
    /// Instances placed per chosen target category, inclusive range.
    pub target_instances: [usize; 2],
    pub min_target_categories: usize,
    pub categories: CategorySet,
    pub max_retries: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            width: 480,
            height: 480,
            cell_size_m: 0.05,
            rooms: [3, 6],
            min_room_m: 2.0,
            door_width_cells: 5,
            furniture_per_room: [1, 2],
            target_instances: [1, 2],
            min_target_categories: 3,
            categories: CategorySet::default(),
            max_retries: 25,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), SceneError> {
        self.categories.validate()?;
        let min_side = (self.min_room_m / self.cell_size_m).ceil() as usize;
        if self.width < min_side + 2 || self.height < min_side + 2 {
            return Err(SceneError::Invalid(format!(
                "{}x{} grid cannot hold a {} m room",
                self.width, self.height, self.min_room_m
            )));
        }
        if self.rooms[0] == 0 || self.rooms[0] > self.rooms[1] {
            return Err(SceneError::Invalid(format!(
                "bad room-count range {:?}",
                self.rooms
            )));
        }
        // Rooms must be able to host the largest object plus its one-cell
        // clearance ring, or placement can never succeed.
        let largest = (0..self.categories.total())
            .map(|id| {
                let [h, w] = self.categories.footprint(id);
                h.max(w)
            })
            .max()
            .unwrap_or(0);
        let needed_m = (largest + 2) as f64 * self.cell_size_m;
        if self.min_room_m < needed_m {
            return Err(SceneError::Invalid(format!(
                "minimum room size {} m cannot host a {} m object footprint",
                self.min_room_m, needed_m
            )));
        }
        if self.door_width_cells == 0 {
            return Err(SceneError::Invalid("door width must be positive".into()));
        }
        if self.furniture_per_room[0] > self.furniture_per_room[1]
            || self.target_instances[0] == 0
            || self.target_instances[0] > self.target_instances[1]
        {
            return Err(SceneError::Invalid("bad placement count range".into()));
        }
        if self.min_target_categories > self.categories.targets.len() {
            return Err(SceneError::Invalid(format!(
                "min_target_categories {} exceeds the {} defined targets",
                self.min_target_categories,
                self.categories.targets.len()
            )));
        }
        Ok(())
    }
}

/// Axis-aligned floor rectangle, inclusive bounds.
#[derive(Debug, Clone, Copy)]
struct Rect {
    r0: i32,
    c0: i32,
    r1: i32,
    c1: i32,
}

impl Rect {
    fn height(&self) -> usize {
        (self.r1 - self.r0 + 1) as usize
    }

    fn width(&self) -> usize {
        (self.c1 - self.c0 + 1) as usize
    }

    fn area(&self) -> usize {
        self.height() * self.width()
    }
}

struct Wall {
    cells: Vec<Cell>,
    orientation: DoorOrientation,
}

/// Generates a scene. Identical `(config, seed)` always produces an
/// identical scene; the seed is recorded in the output.
pub fn generate_scene(config: &GeneratorConfig, seed: u64) -> Result<Scene, SceneError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last_reason = String::new();
    for _ in 0..config.max_retries {
        match try_generate(config, seed, &mut rng) {
            Ok(scene) => return Ok(scene),
            Err(reason) => last_reason = reason,
        }
    }
    Err(SceneError::GenerationFailed {
        attempts: config.max_retries,
        reason: last_reason,
    })
}

fn try_generate(
    config: &GeneratorConfig,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Scene, String> {
    let (h, w) = (config.height, config.width);
    let min_side = (config.min_room_m / config.cell_size_m).ceil() as usize;

    let mut traversable = Grid::filled(h, w, false);
    for r in 1..h - 1 {
        for c in 1..w - 1 {
            traversable.set(Cell::new(r as i32, c as i32), true);
        }
    }

    let interior = Rect {
        r0: 1,
        c0: 1,
        r1: h as i32 - 2,
        c1: w as i32 - 2,
    };
    let target_rooms = rng.random_range(config.rooms[0]..=config.rooms[1]);
    let mut rooms = vec![interior];
    let mut walls: Vec<Wall> = Vec::new();
    while rooms.len() < target_rooms {
        // Split the largest splittable room; a split consumes one wall line,
        // so each half must still fit the minimum side.
        let candidate = rooms
            .iter()
            .enumerate()
            .filter(|(_, r)| r.height().max(r.width()) >= 2 * min_side + 1)
            .max_by_key(|(_, r)| r.area())
            .map(|(i, _)| i);
        let Some(idx) = candidate else {
            if rooms.len() >= config.rooms[0] {
                break;
            }
            return Err(format!(
                "cannot reach {} rooms with min side {min_side}",
                config.rooms[0]
            ));
        };
        let room = rooms.swap_remove(idx);
        if room.height() >= room.width() {
            let wr = rng.random_range(room.r0 + min_side as i32..=room.r1 - min_side as i32);
            let cells: Vec<Cell> = (room.c0..=room.c1).map(|c| Cell::new(wr, c)).collect();
            for &cell in &cells {
                traversable.set(cell, false);
            }
            walls.push(Wall {
                cells,
                orientation: DoorOrientation::Horizontal,
            });
            rooms.push(Rect { r1: wr - 1, ..room });
            rooms.push(Rect { r0: wr + 1, ..room });
        } else {
            let wc = rng.random_range(room.c0 + min_side as i32..=room.c1 - min_side as i32);
            let cells: Vec<Cell> = (room.r0..=room.r1).map(|r| Cell::new(r, wc)).collect();
            for &cell in &cells {
                traversable.set(cell, false);
            }
            walls.push(Wall {
                cells,
                orientation: DoorOrientation::Vertical,
            });
            rooms.push(Rect { c1: wc - 1, ..room });
            rooms.push(Rect { c0: wc + 1, ..room });
        }
    }

    let mut doors = Vec::new();
    for wall in &walls {
        let door = carve_door(&mut traversable, wall, config.door_width_cells, rng)?;
        doors.push(door);
    }

    let mut instances: Vec<Instance> = Vec::new();
    let cats = &config.categories;
    let n_targets = cats.n_targets();

    for room in &rooms {
        let n = rng.random_range(config.furniture_per_room[0]..=config.furniture_per_room[1]);
        for _ in 0..n {
            let cat = n_targets + rng.random_range(0..cats.furniture.len()) as u8;
            // Placement is best-effort; crowded rooms just get less.
            let _ = place_in_room(&mut traversable, &mut instances, cat, cats, room, rng);
        }
    }

    let mut target_order: Vec<u8> = (0..n_targets).collect();
    shuffle(&mut target_order, rng);
    let mut placed_categories = 0usize;
    for &target in &target_order {
        let count = rng.random_range(config.target_instances[0]..=config.target_instances[1]);
        let mut placed_any = false;
        for _ in 0..count {
            if place_near_furniture(&mut traversable, &mut instances, target, cats, &rooms, rng) {
                placed_any = true;
            }
        }
        if placed_any {
            placed_categories += 1;
        }
    }
    if placed_categories < config.min_target_categories {
        return Err(format!(
            "only {placed_categories} target categories placed, need {}",
            config.min_target_categories
        ));
    }

    if !connected(&traversable) {
        return Err("traversable region disconnected".into());
    }

    let spawn_cells = spawn_region(&traversable);
    if spawn_cells.len() < 20 {
        return Err(format!("only {} spawn cells", spawn_cells.len()));
    }

    let scene = Scene::new(
        w,
        h,
        config.cell_size_m,
        traversable,
        instances,
        doors,
        spawn_cells,
        seed,
    )
    .map_err(|e| e.to_string())?;
    scene.validate().map_err(|e| e.to_string())?;
    Ok(scene)
}

/// Opens a door somewhere along `wall` where floor lies on both sides for
/// the full door width, so the opening actually joins the two rooms.
fn carve_door(
    traversable: &mut Grid<bool>,
    wall: &Wall,
    door_width: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Door, String> {
    let open_on_both_sides = |cell: Cell| -> bool {
        let (a, b) = match wall.orientation {
            DoorOrientation::Horizontal => (
                Cell::new(cell.row - 1, cell.col),
                Cell::new(cell.row + 1, cell.col),
            ),
            DoorOrientation::Vertical => (
                Cell::new(cell.row, cell.col - 1),
                Cell::new(cell.row, cell.col + 1),
            ),
        };
        traversable.get(a).copied().unwrap_or(false)
            && traversable.get(b).copied().unwrap_or(false)
    };
    let usable: Vec<bool> = wall.cells.iter().map(|&c| open_on_both_sides(c)).collect();
    let mut starts = Vec::new();
    if wall.cells.len() >= door_width {
        for start in 0..=wall.cells.len() - door_width {
            if usable[start..start + door_width].iter().all(|&u| u) {
                starts.push(start);
            }
        }
    }
    if starts.is_empty() {
        return Err("no usable door position on wall".into());
    }
    let start = starts[rng.random_range(0..starts.len())];
    let cells: Vec<Cell> = wall.cells[start..start + door_width].to_vec();
    for &cell in &cells {
        traversable.set(cell, true);
    }
    Ok(Door {
        cells,
        orientation: wall.orientation,
    })
}

/// Cells covered by an object footprint anchored at `(r0, c0)`.
fn footprint_cells(r0: i32, c0: i32, fh: usize, fw: usize) -> Vec<Cell> {
    let mut cells = Vec::with_capacity(fh * fw);
    for r in 0..fh as i32 {
        for c in 0..fw as i32 {
            cells.push(Cell::new(r0 + r, c0 + c));
        }
    }
    cells
}

/// Marks `cells` non-traversable if the footprint and a one-cell clearance
/// ring are currently floor and the floor stays connected. Returns false and
/// leaves the grid untouched otherwise.
fn commit_object(traversable: &mut Grid<bool>, cells: &[Cell]) -> bool {
    let min_r = cells.iter().map(|c| c.row).min().unwrap();
    let max_r = cells.iter().map(|c| c.row).max().unwrap();
    let min_c = cells.iter().map(|c| c.col).min().unwrap();
    let max_c = cells.iter().map(|c| c.col).max().unwrap();
    for r in min_r - 1..=max_r + 1 {
        for c in min_c - 1..=max_c + 1 {
            if !traversable.get(Cell::new(r, c)).copied().unwrap_or(false) {
                return false;
            }
        }
    }
    for &cell in cells {
        traversable.set(cell, false);
    }
    if connected(traversable) {
        true
    } else {
        for &cell in cells {
            traversable.set(cell, true);
        }
        false
    }
}

fn place_in_room(
    traversable: &mut Grid<bool>,
    instances: &mut Vec<Instance>,
    category: u8,
    cats: &CategorySet,
    room: &Rect,
    rng: &mut ChaCha8Rng,
) -> bool {
    let [mut fh, mut fw] = cats.footprint(category);
    if rng.random_bool(0.5) {
        std::mem::swap(&mut fh, &mut fw);
    }
    // Keep the clearance ring inside the room.
    let r_max = room.r1 - fh as i32;
    let c_max = room.c1 - fw as i32;
    if r_max < room.r0 + 1 || c_max < room.c0 + 1 {
        return false;
    }
    for _ in 0..12 {
        let r0 = rng.random_range(room.r0 + 1..=r_max);
        let c0 = rng.random_range(room.c0 + 1..=c_max);
        let cells = footprint_cells(r0, c0, fh, fw);
        if commit_object(traversable, &cells) {
            instances.push(Instance {
                category,
                cells,
            });
            return true;
        }
    }
    false
}

/// Places one target instance adjacent to an instance of its related
/// furniture category, separated by a 1-2 cell floor gap. Places the
/// furniture first if none exists yet.
fn place_near_furniture(
    traversable: &mut Grid<bool>,
    instances: &mut Vec<Instance>,
    target: u8,
    cats: &CategorySet,
    rooms: &[Rect],
    rng: &mut ChaCha8Rng,
) -> bool {
    let furniture = cats.near_furniture(target);
    if !instances.iter().any(|i| i.category == furniture) {
        let room = &rooms[rng.random_range(0..rooms.len())];
        if !place_in_room(traversable, instances, furniture, cats, room, rng) {
            return false;
        }
    }
    let anchors: Vec<(Cell, Cell)> = instances
        .iter()
        .filter(|i| i.category == furniture)
        .map(|i| {
            let min = Cell::new(
                i.cells.iter().map(|c| c.row).min().unwrap(),
                i.cells.iter().map(|c| c.col).min().unwrap(),
            );
            let max = Cell::new(
                i.cells.iter().map(|c| c.row).max().unwrap(),
                i.cells.iter().map(|c| c.col).max().unwrap(),
            );
            (min, max)
        })
        .collect();
    let [fh, fw] = cats.footprint(target);
    for _ in 0..16 {
        let (min, max) = anchors[rng.random_range(0..anchors.len())];
        let gap = rng.random_range(1..=2) as i32;
        let side = rng.random_range(0..4);
        let (r0, c0) = match side {
            0 => (
                min.row - gap - fh as i32,
                rng.random_range(min.col - fw as i32 + 1..=max.col),
            ),
            1 => (
                rng.random_range(min.row - fh as i32 + 1..=max.row),
                max.col + 1 + gap,
            ),
            2 => (
                max.row + 1 + gap,
                rng.random_range(min.col - fw as i32 + 1..=max.col),
            ),
            _ => (
                rng.random_range(min.row - fh as i32 + 1..=max.row),
                min.col - gap - fw as i32,
            ),
        };
        let cells = footprint_cells(r0, c0, fh, fw);
        if commit_object(traversable, &cells) {
            instances.push(Instance {
                category: target,
                cells,
            });
            return true;
        }
    }
    false
}

fn connected(traversable: &Grid<bool>) -> bool {
    let total = traversable.data().iter().filter(|&&t| t).count();
    if total == 0 {
        return false;
    }
    let seed = traversable.cells().find(|&c| traversable[c]).unwrap();
    let mut seen = Grid::filled(traversable.height(), traversable.width(), false);
    let mut stack = vec![seed];
    seen[seed] = true;
    let mut count = 0;
    while let Some(cell) = stack.pop() {
        count += 1;
        for n in traversable.ortho_neighbors(cell) {
            if traversable[n] && !seen[n] {
                seen[n] = true;
                stack.push(n);
            }
        }
    }
    count == total
}

/// Traversable cells whose full 5x5 neighborhood is traversable, row-major.
fn spawn_region(traversable: &Grid<bool>) -> Vec<Cell> {
    let mut cells = Vec::new();
    'outer: for cell in traversable.cells() {
        for dr in -2..=2 {
            for dc in -2..=2 {
                let n = Cell::new(cell.row + dr, cell.col + dc);
                if !traversable.get(n).copied().unwrap_or(false) {
                    continue 'outer;
                }
            }
        }
        cells.push(cell);
    }
    cells
}

/// Fisher-Yates shuffle driven by the generator's RNG stream.
fn shuffle<T>(items: &mut [T], rng: &mut ChaCha8Rng) {
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(rooms: [usize; 2]) -> GeneratorConfig {
        GeneratorConfig {
            width: 128,
            height: 128,
            rooms,
            ..GeneratorConfig::default()
        }
    }

    #[test]
    fn single_room_is_rectangle_minus_objects() {
        let config = small_config([1, 1]);
        let scene = generate_scene(&config, 0).unwrap();
        assert!(scene.doors.is_empty());
        let object_cells: usize = scene.instances.iter().map(|i| i.cells.len()).sum();
        let interior = (scene.height - 2) * (scene.width - 2);
        let open = scene.traversable.data().iter().filter(|&&t| t).count();
        assert_eq!(open, interior - object_cells);
        // Border stays wall.
        for c in 0..scene.width as i32 {
            assert!(!scene.traversable[Cell::new(0, c)]);
            assert!(!scene.traversable[Cell::new(scene.height as i32 - 1, c)]);
        }
    }

    #[test]
    fn same_seed_same_scene() {
        let config = small_config([2, 4]);
        let a = generate_scene(&config, 11).unwrap();
        let b = generate_scene(&config, 11).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn different_seeds_differ() {
        let config = small_config([2, 4]);
        let a = generate_scene(&config, 1).unwrap();
        let b = generate_scene(&config, 2).unwrap();
        assert_ne!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn four_room_scene_is_connected() {
        let config = GeneratorConfig {
            width: 192,
            height: 192,
            rooms: [4, 4],
            ..GeneratorConfig::default()
        };
        let scene = generate_scene(&config, 7).unwrap();
        assert_eq!(scene.doors.len(), 3);

        // Flood fill from a spawn cell must reach every traversable cell.
        let start = scene.spawn_cells[0];
        let mut seen = Grid::filled(scene.height, scene.width, false);
        let mut stack = vec![start];
        seen[start] = true;
        let mut reached = 0;
        while let Some(cell) = stack.pop() {
            reached += 1;
            for n in scene.traversable.ortho_neighbors(cell) {
                if scene.traversable[n] && !seen[n] {
                    seen[n] = true;
                    stack.push(n);
                }
            }
        }
        let total = scene.traversable.data().iter().filter(|&&t| t).count();
        assert_eq!(reached, total);
    }

    #[test]
    fn scenes_hold_enough_target_categories() {
        let config = small_config([2, 3]);
        for seed in 0..8 {
            let scene = generate_scene(&config, seed).unwrap();
            let targets = scene
                .categories_present()
                .into_iter()
                .filter(|&c| c < config.categories.n_targets())
                .count();
            assert!(targets >= config.min_target_categories, "seed {seed}");
            scene.validate().unwrap();
        }
    }

    #[test]
    fn doors_connect_rooms() {
        let config = small_config([3, 3]);
        let scene = generate_scene(&config, 5).unwrap();
        for door in &scene.doors {
            assert_eq!(door.cells.len(), config.door_width_cells);
            for &cell in &door.cells {
                assert!(scene.traversable[cell]);
                let (a, b) = match door.orientation {
                    DoorOrientation::Horizontal => (
                        Cell::new(cell.row - 1, cell.col),
                        Cell::new(cell.row + 1, cell.col),
                    ),
                    DoorOrientation::Vertical => (
                        Cell::new(cell.row, cell.col - 1),
                        Cell::new(cell.row, cell.col + 1),
                    ),
                };
                assert!(scene.traversable[a] && scene.traversable[b]);
            }
        }
    }

    #[test]
    fn infeasible_params_fail_with_error() {
        let config = GeneratorConfig {
            width: 60,
            height: 60,
            rooms: [4, 4],
            max_retries: 3,
            ..GeneratorConfig::default()
        };
        // 60 cells = 3 m cannot be split into 2 m rooms.
        match generate_scene(&config, 0) {
            Err(SceneError::GenerationFailed { attempts, .. }) => assert_eq!(attempts, 3),
            other => panic!("expected generation failure, got {other:?}"),
        }
    }
}
