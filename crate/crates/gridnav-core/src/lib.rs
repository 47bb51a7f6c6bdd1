//! Grid-world object-goal navigation.
//!
//! An agent is dropped into an unseen multi-room scene and must reach an
//! instance of a named object category. The crate covers the full loop:
//! synthetic scene generation, egocentric sensing into a bird's-eye semantic
//! map, ground-truth geodesic distance fields, frontier extraction, learned
//! frontier-to-target distance prediction, mid-term goal selection, low-level
//! path planning, and a benchmark harness with success-weighted path length.
//!
//! Conventions used throughout:
//!
//! * Grids are row-major, `(row, col)` indexed, row 0 at the top.
//! * Continuous pose coordinates are in cell units: `x` along columns,
//!   `y` along rows, heading 0 pointing in the +col direction and increasing
//!   toward +row.
//! * Distances returned to callers are in meters unless a name says otherwise.

pub mod distance;
pub mod eval;
pub mod frontier;
pub mod grid;
pub mod planner;
pub mod policy;
pub mod predictor;
pub mod scene;
pub mod sensing;
pub mod snapshot;

pub use grid::{Cell, Grid};
