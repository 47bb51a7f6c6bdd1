//! Immutable ground-truth scenes, agent kinematics, and scene file IO.
//!
//! A [`Scene`] is a 2D occupancy grid with semantic object instances, door
//! annotations, and a spawn region. Scenes never change after construction;
//! episodes own all mutable state.

mod episode;
mod generate;

pub use episode::{sample_episode, EpisodeConfig, EpisodeSpec};
pub use generate::{generate_scene, GeneratorConfig};

use std::collections::HashSet;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{normalize_angle, walk_supercover, Cell, Grid};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("scene generation failed after {attempts} attempts: {reason}")]
    GenerationFailed { attempts: usize, reason: String },
    #[error("no reachable instance of category {target} satisfies the start constraints: {reason}")]
    NoReachableTarget { target: u8, reason: String },
    #[error("invalid scene: {0}")]
    Invalid(String),
    #[error("invalid category set: {0}")]
    InvalidCategories(String),
    #[error("scene io: {0}")]
    Io(#[from] std::io::Error),
    #[error("scene json: {0}")]
    Json(#[from] serde_json::Error),
}

/// One object instance: a category id and the cells its footprint covers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub category: u8,
    pub cells: Vec<Cell>,
}

/// Orientation of the wall a door sits in. A `Vertical` door pierces a wall
/// that runs along a column and so connects rooms east-west.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DoorOrientation {
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Door {
    pub cells: Vec<Cell>,
    pub orientation: DoorOrientation,
}

/// Immutable ground-truth world.
///
/// `category_map` and `door_map` are derived caches rebuilt on load; only the
/// declared fields appear in the scene file.
#[derive(Debug, Clone)]
pub struct Scene {
    pub width: usize,
    pub height: usize,
    pub cell_size_m: f64,
    pub traversable: Grid<bool>,
    pub instances: Vec<Instance>,
    pub doors: Vec<Door>,
    pub spawn_cells: Vec<Cell>,
    pub seed: u64,
    category_map: Grid<i16>,
    door_map: Grid<bool>,
}

impl Scene {
    pub fn new(
        width: usize,
        height: usize,
        cell_size_m: f64,
        traversable: Grid<bool>,
        instances: Vec<Instance>,
        doors: Vec<Door>,
        spawn_cells: Vec<Cell>,
        seed: u64,
    ) -> Result<Scene, SceneError> {
        if traversable.height() != height || traversable.width() != width {
            return Err(SceneError::Invalid(format!(
                "traversable grid is {}x{}, declared {}x{}",
                traversable.height(),
                traversable.width(),
                height,
                width
            )));
        }
        if !(cell_size_m.is_finite() && cell_size_m > 0.0) {
            return Err(SceneError::Invalid(format!("bad cell size {cell_size_m}")));
        }
        let mut category_map = Grid::filled(height, width, -1i16);
        for inst in &instances {
            for &cell in &inst.cells {
                if !traversable.in_bounds(cell) {
                    return Err(SceneError::Invalid(format!(
                        "instance cell {cell:?} out of bounds"
                    )));
                }
                category_map[cell] = inst.category as i16;
            }
        }
        let mut door_map = Grid::filled(height, width, false);
        for door in &doors {
            for &cell in &door.cells {
                if !traversable.in_bounds(cell) {
                    return Err(SceneError::Invalid(format!(
                        "door cell {cell:?} out of bounds"
                    )));
                }
                if !traversable[cell] {
                    return Err(SceneError::Invalid(format!(
                        "door cell {cell:?} is not traversable"
                    )));
                }
                door_map[cell] = true;
            }
        }
        for &cell in &spawn_cells {
            if !traversable.in_bounds(cell) || !traversable[cell] {
                return Err(SceneError::Invalid(format!(
                    "spawn cell {cell:?} is not a traversable cell"
                )));
            }
        }
        Ok(Scene {
            width,
            height,
            cell_size_m,
            traversable,
            instances,
            doors,
            spawn_cells,
            seed,
            category_map,
            door_map,
        })
    }

    /// Category at `cell`, if any instance covers it.
    pub fn category_at(&self, cell: Cell) -> Option<u8> {
        match self.category_map.get(cell) {
            Some(&c) if c >= 0 => Some(c as u8),
            _ => None,
        }
    }

    pub fn is_door(&self, cell: Cell) -> bool {
        self.door_map.get(cell).copied().unwrap_or(false)
    }

    pub fn is_traversable(&self, cell: Cell) -> bool {
        self.traversable.get(cell).copied().unwrap_or(false)
    }

    /// All cells covered by instances of `category`.
    pub fn category_cells(&self, category: u8) -> Vec<Cell> {
        let mut cells: Vec<Cell> = self
            .instances
            .iter()
            .filter(|i| i.category == category)
            .flat_map(|i| i.cells.iter().copied())
            .collect();
        cells.sort();
        cells.dedup();
        cells
    }

    pub fn has_category(&self, category: u8) -> bool {
        self.instances.iter().any(|i| i.category == category)
    }

    /// Distinct categories present, ascending.
    pub fn categories_present(&self) -> Vec<u8> {
        let mut cats: Vec<u8> = self.instances.iter().map(|i| i.category).collect();
        cats.sort();
        cats.dedup();
        cats
    }

    /// Checks the structural scene invariants: instance and door cells in
    /// bounds, doors and spawn cells traversable, and the traversable region
    /// a single 4-connected component.
    pub fn validate(&self) -> Result<(), SceneError> {
        // Scene::new re-checks bounds and traversability of the annotations.
        let rebuilt = Scene::new(
            self.width,
            self.height,
            self.cell_size_m,
            self.traversable.clone(),
            self.instances.clone(),
            self.doors.clone(),
            self.spawn_cells.clone(),
            self.seed,
        )?;
        let total = rebuilt.traversable.data().iter().filter(|&&t| t).count();
        if total == 0 {
            return Err(SceneError::Invalid("no traversable cells".into()));
        }
        let seed_cell = rebuilt
            .traversable
            .cells()
            .find(|&c| rebuilt.traversable[c])
            .unwrap();
        let reached = flood_count(&rebuilt.traversable, seed_cell);
        if reached != total {
            return Err(SceneError::Invalid(format!(
                "traversable region is disconnected ({reached} of {total} cells reachable)"
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, SceneError> {
        let file = SceneFile::from_scene(self);
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(json: &str) -> Result<Scene, SceneError> {
        let file: SceneFile = serde_json::from_str(json)?;
        file.into_scene()
    }

    pub fn save(&self, path: &Path) -> Result<(), SceneError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_json()?.as_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Scene, SceneError> {
        let json = std::fs::read_to_string(path)?;
        Scene::from_json(&json)
    }
}

/// Number of 4-connected traversable cells reachable from `seed`.
fn flood_count(traversable: &Grid<bool>, seed: Cell) -> usize {
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
    count
}

#[derive(Serialize, Deserialize)]
struct SceneFile {
    width: usize,
    height: usize,
    cell_size_m: f64,
    traversable: Vec<u8>,
    instances: Vec<InstanceFile>,
    doors: Vec<DoorFile>,
    spawn_cells: Vec<[i32; 2]>,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    category: u8,
    cells: Vec<[i32; 2]>,
}

#[derive(Serialize, Deserialize)]
struct DoorFile {
    cells: Vec<[i32; 2]>,
    orientation: DoorOrientation,
}

impl SceneFile {
    fn from_scene(scene: &Scene) -> SceneFile {
        SceneFile {
            width: scene.width,
            height: scene.height,
            cell_size_m: scene.cell_size_m,
            traversable: scene
                .traversable
                .data()
                .iter()
                .map(|&t| u8::from(t))
                .collect(),
            instances: scene
                .instances
                .iter()
                .map(|i| InstanceFile {
                    category: i.category,
                    cells: i.cells.iter().map(|c| [c.row, c.col]).collect(),
                })
                .collect(),
            doors: scene
                .doors
                .iter()
                .map(|d| DoorFile {
                    cells: d.cells.iter().map(|c| [c.row, c.col]).collect(),
                    orientation: d.orientation,
                })
                .collect(),
            spawn_cells: scene.spawn_cells.iter().map(|c| [c.row, c.col]).collect(),
            seed: scene.seed,
        }
    }

    fn into_scene(self) -> Result<Scene, SceneError> {
        if self.traversable.len() != self.width * self.height {
            return Err(SceneError::Invalid(format!(
                "traversable has {} cells, expected {}",
                self.traversable.len(),
                self.width * self.height
            )));
        }
        let mut cells = Vec::with_capacity(self.traversable.len());
        for &v in &self.traversable {
            match v {
                0 => cells.push(false),
                1 => cells.push(true),
                other => {
                    return Err(SceneError::Invalid(format!(
                        "traversable entries must be 0 or 1, found {other}"
                    )))
                }
            }
        }
        let to_cells = |pairs: Vec<[i32; 2]>| -> Vec<Cell> {
            pairs.into_iter().map(|[r, c]| Cell::new(r, c)).collect()
        };
        Scene::new(
            self.width,
            self.height,
            self.cell_size_m,
            Grid::from_vec(self.height, self.width, cells),
            self.instances
                .into_iter()
                .map(|i| Instance {
                    category: i.category,
                    cells: to_cells(i.cells),
                })
                .collect(),
            self.doors
                .into_iter()
                .map(|d| Door {
                    cells: to_cells(d.cells),
                    orientation: d.orientation,
                })
                .collect(),
            to_cells(self.spawn_cells),
            self.seed,
        )
    }
}

/// One target category: its footprint and the furniture category it is
/// placed next to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetDef {
    pub name: String,
    pub footprint: [usize; 2],
    pub near: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FurnitureDef {
    pub name: String,
    pub footprint: [usize; 2],
}

/// The semantic category scheme: target categories first, furniture after.
///
/// Category ids are implicit by position: targets get `0..n_targets`,
/// furniture continues from `n_targets`. The `near` field of each target
/// names the furniture category its instances are placed adjacent to, which
/// is the spatial regularity the learned predictor can pick up.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategorySet {
    pub targets: Vec<TargetDef>,
    pub furniture: Vec<FurnitureDef>,
}

impl Default for CategorySet {
    fn default() -> Self {
        let t = |name: &str, h: usize, w: usize, near: &str| TargetDef {
            name: name.into(),
            footprint: [h, w],
            near: near.into(),
        };
        let f = |name: &str, h: usize, w: usize| FurnitureDef {
            name: name.into(),
            footprint: [h, w],
        };
        CategorySet {
            targets: vec![
                t("chair", 6, 6, "table"),
                t("couch", 8, 16, "tv_stand"),
                t("plant", 5, 5, "shelf"),
                t("bed", 16, 24, "nightstand"),
                t("toilet", 7, 9, "sink"),
                t("tv", 4, 12, "cabinet"),
            ],
            furniture: vec![
                f("table", 12, 18),
                f("tv_stand", 6, 14),
                f("shelf", 6, 16),
                f("nightstand", 5, 5),
                f("sink", 5, 7),
                f("cabinet", 8, 12),
            ],
        }
    }
}

impl CategorySet {
    /// Total category count (targets + furniture).
    pub fn total(&self) -> u8 {
        (self.targets.len() + self.furniture.len()) as u8
    }

    pub fn n_targets(&self) -> u8 {
        self.targets.len() as u8
    }

    pub fn name(&self, id: u8) -> &str {
        let id = id as usize;
        if id < self.targets.len() {
            &self.targets[id].name
        } else {
            &self.furniture[id - self.targets.len()].name
        }
    }

    pub fn index(&self, name: &str) -> Option<u8> {
        if let Some(i) = self.targets.iter().position(|t| t.name == name) {
            return Some(i as u8);
        }
        self.furniture
            .iter()
            .position(|f| f.name == name)
            .map(|i| (i + self.targets.len()) as u8)
    }

    pub fn footprint(&self, id: u8) -> [usize; 2] {
        let id = id as usize;
        if id < self.targets.len() {
            self.targets[id].footprint
        } else {
            self.furniture[id - self.targets.len()].footprint
        }
    }

    /// Furniture category id the given target is placed next to.
    pub fn near_furniture(&self, target: u8) -> u8 {
        let name = &self.targets[target as usize].near;
        self.index(name).expect("validated category set")
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if self.targets.is_empty() {
            return Err(SceneError::InvalidCategories("no target categories".into()));
        }
        if self.targets.len() + self.furniture.len() > 30 {
            return Err(SceneError::InvalidCategories(
                "at most 30 categories supported".into(),
            ));
        }
        let mut names = HashSet::new();
        for name in self
            .targets
            .iter()
            .map(|t| &t.name)
            .chain(self.furniture.iter().map(|f| &f.name))
        {
            if !names.insert(name.clone()) {
                return Err(SceneError::InvalidCategories(format!(
                    "duplicate category name {name:?}"
                )));
            }
        }
        for t in &self.targets {
            if self.furniture.iter().all(|f| f.name != t.near) {
                return Err(SceneError::InvalidCategories(format!(
                    "target {:?} references unknown furniture {:?}",
                    t.name, t.near
                )));
            }
            if t.footprint[0] == 0 || t.footprint[1] == 0 {
                return Err(SceneError::InvalidCategories(format!(
                    "target {:?} has an empty footprint",
                    t.name
                )));
            }
        }
        for f in &self.furniture {
            if f.footprint[0] == 0 || f.footprint[1] == 0 {
                return Err(SceneError::InvalidCategories(format!(
                    "furniture {:?} has an empty footprint",
                    f.name
                )));
            }
        }
        Ok(())
    }
}

/// Continuous agent pose in cell coordinates: `x` along columns, `y` along
/// rows, heading 0 pointing in the +col direction and increasing toward +row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Pose {
        Pose {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }

    /// Cell containing this pose.
    pub fn cell(&self) -> Cell {
        Cell::new(self.y.floor() as i32, self.x.floor() as i32)
    }

    /// Bearing from this pose to the center of `cell`.
    pub fn bearing_to(&self, cell: Cell) -> f64 {
        let (cx, cy) = cell.center();
        (cy - self.y).atan2(cx - self.x)
    }

    /// Euclidean distance to the center of `cell`, in cell units.
    pub fn distance_to(&self, cell: Cell) -> f64 {
        let (cx, cy) = cell.center();
        ((cx - self.x).powi(2) + (cy - self.y).powi(2)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    MoveForward,
    TurnLeft,
    TurnRight,
    Stop,
}

/// Discrete action parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Kinematics {
    pub forward_step_m: f64,
    pub turn_angle_deg: f64,
}

impl Default for Kinematics {
    fn default() -> Self {
        Kinematics {
            forward_step_m: 0.25,
            turn_angle_deg: 30.0,
        }
    }
}

impl Kinematics {
    pub fn turn_angle_rad(&self) -> f64 {
        self.turn_angle_deg.to_radians()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub pose: Pose,
    pub collided: bool,
    /// First non-traversable cell on the swept segment of a blocked move.
    pub blocked: Option<Cell>,
}

/// Applies one action. A blocked `MoveForward` leaves the pose unchanged and
/// reports the blocking cell; turns are exact; `Stop` is the identity.
pub fn step(scene: &Scene, pose: &Pose, action: Action, kin: &Kinematics) -> StepOutcome {
    match action {
        Action::Stop => StepOutcome {
            pose: *pose,
            collided: false,
            blocked: None,
        },
        Action::TurnLeft => StepOutcome {
            pose: Pose::new(pose.x, pose.y, pose.heading + kin.turn_angle_rad()),
            collided: false,
            blocked: None,
        },
        Action::TurnRight => StepOutcome {
            pose: Pose::new(pose.x, pose.y, pose.heading - kin.turn_angle_rad()),
            collided: false,
            blocked: None,
        },
        Action::MoveForward => {
            let dist_cells = kin.forward_step_m / scene.cell_size_m;
            let dx = pose.heading.cos() * dist_cells;
            let dy = pose.heading.sin() * dist_cells;
            // Exact supercover sweep: every crossed cell must be free, so
            // the move can never tunnel through a wall corner.
            let mut blocked = None;
            let clear = walk_supercover(
                (pose.x, pose.y),
                (pose.x + dx, pose.y + dy),
                |cell| {
                    if scene.is_traversable(cell) {
                        true
                    } else {
                        blocked = Some(cell);
                        false
                    }
                },
            );
            if clear {
                StepOutcome {
                    pose: Pose::new(pose.x + dx, pose.y + dy, pose.heading),
                    collided: false,
                    blocked: None,
                }
            } else {
                StepOutcome {
                    pose: *pose,
                    collided: true,
                    blocked,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn open_room(height: usize, width: usize) -> Scene {
        let mut traversable = Grid::filled(height, width, false);
        for r in 1..height - 1 {
            for c in 1..width - 1 {
                traversable.set(Cell::new(r as i32, c as i32), true);
            }
        }
        let spawn = vec![Cell::new(height as i32 / 2, width as i32 / 2)];
        Scene::new(width, height, 0.05, traversable, vec![], vec![], spawn, 0).unwrap()
    }

    #[test]
    fn blocked_move_leaves_pose_unchanged() {
        let scene = open_room(20, 20);
        // Facing the east wall from 10 cm (2 cells) away.
        let pose = Pose::new(17.0, 10.0, 0.0);
        let out = step(&scene, &pose, Action::MoveForward, &Kinematics::default());
        assert_eq!(out.pose, pose);
        assert!(out.collided);
        assert_eq!(out.blocked, Some(Cell::new(10, 19)));
    }

    #[test]
    fn turn_left_is_exact() {
        let scene = open_room(20, 20);
        let pose = Pose::new(10.0, 10.0, 0.0);
        let out = step(&scene, &pose, Action::TurnLeft, &Kinematics::default());
        assert!((out.pose.heading - std::f64::consts::FRAC_PI_6).abs() < 1e-12);
        assert!(!out.collided);
    }

    #[test]
    fn forward_step_displaces_quarter_meter() {
        let scene = open_room(40, 40);
        let pose = Pose::new(10.0, 20.0, 0.0);
        let out = step(&scene, &pose, Action::MoveForward, &Kinematics::default());
        let moved = ((out.pose.x - pose.x).powi(2) + (out.pose.y - pose.y).powi(2)).sqrt();
        assert!((moved * scene.cell_size_m - 0.25).abs() < 1e-12);
        assert_eq!(out.pose.heading, 0.0);
    }

    #[test]
    fn turns_compose_to_identity() {
        let scene = open_room(10, 10);
        let pose = Pose::new(5.0, 5.0, 1.0);
        let left = step(&scene, &pose, Action::TurnLeft, &Kinematics::default()).pose;
        let back = step(&scene, &left, Action::TurnRight, &Kinematics::default()).pose;
        assert!((back.heading - pose.heading).abs() < 1e-12);
    }

    #[test]
    fn stop_is_identity() {
        let scene = open_room(10, 10);
        let pose = Pose::new(5.0, 5.0, 2.0);
        let out = step(&scene, &pose, Action::Stop, &Kinematics::default());
        assert_eq!(out.pose, pose);
    }

    #[test]
    fn scene_json_round_trip() {
        let mut scene = open_room(12, 16);
        scene.instances.push(Instance {
            category: 2,
            cells: vec![Cell::new(3, 3), Cell::new(3, 4)],
        });
        let scene = Scene::new(
            scene.width,
            scene.height,
            scene.cell_size_m,
            scene.traversable.clone(),
            scene.instances.clone(),
            vec![Door {
                cells: vec![Cell::new(5, 5)],
                orientation: DoorOrientation::Vertical,
            }],
            scene.spawn_cells.clone(),
            scene.seed,
        )
        .unwrap();
        let json = scene.to_json().unwrap();
        let loaded = Scene::from_json(&json).unwrap();
        assert_eq!(loaded.width, scene.width);
        assert_eq!(loaded.traversable, scene.traversable);
        assert_eq!(loaded.instances, scene.instances);
        assert_eq!(loaded.doors, scene.doors);
        assert_eq!(loaded.spawn_cells, scene.spawn_cells);
        assert_eq!(loaded.category_at(Cell::new(3, 4)), Some(2));
        assert!(loaded.is_door(Cell::new(5, 5)));
    }

    #[test]
    fn non_binary_traversable_rejected() {
        let scene = open_room(4, 4);
        let mut json: serde_json::Value = serde_json::from_str(&scene.to_json().unwrap()).unwrap();
        json["traversable"][5] = serde_json::json!(2);
        let err = Scene::from_json(&json.to_string()).unwrap_err();
        assert!(matches!(err, SceneError::Invalid(_)));
    }

    #[test]
    fn out_of_bounds_instance_rejected() {
        let room = open_room(4, 4);
        let err = Scene::new(
            4,
            4,
            0.05,
            room.traversable.clone(),
            vec![Instance {
                category: 0,
                cells: vec![Cell::new(9, 9)],
            }],
            vec![],
            room.spawn_cells.clone(),
            0,
        )
        .unwrap_err();
        assert!(matches!(err, SceneError::Invalid(_)));
    }

    #[test]
    fn default_category_set_is_valid() {
        let cats = CategorySet::default();
        cats.validate().unwrap();
        assert_eq!(cats.total(), 12);
        assert_eq!(cats.n_targets(), 6);
        assert_eq!(cats.name(0), "chair");
        assert_eq!(cats.index("table"), Some(6));
        assert_eq!(cats.near_furniture(0), 6);
    }

    #[test]
    fn validate_detects_disconnected_region() {
        let mut traversable = Grid::filled(5, 5, false);
        traversable.set(Cell::new(1, 1), true);
        traversable.set(Cell::new(3, 3), true);
        let scene = Scene::new(5, 5, 0.05, traversable, vec![], vec![], vec![], 0).unwrap();
        assert!(scene.validate().is_err());
    }
}
