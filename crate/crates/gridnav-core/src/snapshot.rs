//! Visual and binary snapshots of the mapped world: PPM renderings of the
//! semantic map with optional overlays, bin-field renderings, and a raw
//! channel dump for external tooling.

use std::io::{self, Write as _};
use std::path::Path;

use crate::distance::BIN_UNKNOWN;
use crate::grid::{Cell, Grid};
use crate::sensing::SemanticGrid;

const UNEXPLORED: [u8; 3] = [120, 120, 120];
const EXPLORED_FREE: [u8; 3] = [255, 255, 255];
const OBSTACLE: [u8; 3] = [0, 0, 0];
const FRONTIER: [u8; 3] = [0, 200, 200];
const PATH: [u8; 3] = [255, 170, 0];
const GOAL: [u8; 3] = [0, 0, 255];
const AGENT: [u8; 3] = [255, 0, 0];
const UNKNOWN_BIN: [u8; 3] = [40, 40, 40];

/// Category colors, cycled when a map carries more categories.
const CATEGORY_COLORS: [[u8; 3]; 12] = [
    [230, 25, 75],
    [60, 180, 75],
    [255, 225, 25],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
    [210, 245, 60],
    [170, 110, 40],
    [128, 0, 0],
    [0, 128, 128],
];

pub fn category_color(category: u8) -> [u8; 3] {
    CATEGORY_COLORS[category as usize % CATEGORY_COLORS.len()]
}

/// Optional markers drawn over a map rendering, later entries on top.
#[derive(Default)]
pub struct Overlay<'a> {
    pub frontier: Option<&'a [Cell]>,
    pub path: Option<&'a [Cell]>,
    pub goal: Option<Cell>,
    pub agent: Option<Cell>,
}

fn ppm_bytes(pixels: &Grid<[u8; 3]>) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + pixels.len() * 3);
    out.extend_from_slice(format!("P6\n{} {}\n255\n", pixels.width(), pixels.height()).as_bytes());
    for px in pixels.data() {
        out.extend_from_slice(px);
    }
    out
}

fn paint(pixels: &mut Grid<[u8; 3]>, cell: Cell, color: [u8; 3]) {
    if pixels.in_bounds(cell) {
        pixels.set(cell, color);
    }
}

/// Renders the mapped world as binary PPM: obstacles black, explored free
/// space white, unexplored gray, semantic categories colored, overlays on
/// top.
pub fn map_to_ppm(map: &SemanticGrid, overlay: &Overlay) -> Vec<u8> {
    let mut pixels = Grid::filled(map.height(), map.width(), UNEXPLORED);
    for cell in pixels.cells() {
        if !map.explored(cell) {
            continue;
        }
        let color = if let Some(cat) = map.category_label(cell) {
            category_color(cat)
        } else if map.obstacle(cell) {
            OBSTACLE
        } else {
            EXPLORED_FREE
        };
        pixels.set(cell, color);
    }
    if let Some(frontier) = overlay.frontier {
        for &cell in frontier {
            paint(&mut pixels, cell, FRONTIER);
        }
    }
    if let Some(path) = overlay.path {
        for &cell in path {
            paint(&mut pixels, cell, PATH);
        }
    }
    if let Some(goal) = overlay.goal {
        paint(&mut pixels, goal, GOAL);
    }
    if let Some(agent) = overlay.agent {
        paint(&mut pixels, agent, AGENT);
    }
    ppm_bytes(&pixels)
}

/// Renders a bin field as PPM: near bins green shading to red for far ones,
/// unlabeled cells dark gray.
pub fn bins_to_ppm(bins: &Grid<u8>, n_bins: usize) -> Vec<u8> {
    let mut pixels = Grid::filled(bins.height(), bins.width(), UNKNOWN_BIN);
    let denom = n_bins.saturating_sub(1).max(1) as f64;
    for cell in bins.cells() {
        let b = bins[cell];
        if b == BIN_UNKNOWN {
            continue;
        }
        let t = (b as f64 / denom).clamp(0.0, 1.0);
        let color = [
            (t * 255.0).round() as u8,
            ((1.0 - t) * 255.0).round() as u8,
            40,
        ];
        pixels.set(cell, color);
    }
    ppm_bytes(&pixels)
}

const CHANNEL_MAGIC: &[u8; 8] = b"NAVCHN01";

/// Dumps the map's channel stack as raw bytes: magic, u32 height, u32
/// width, u32 channel count (little endian), then one 0/1 byte plane per
/// channel in the order obstacle, explored, category 0, category 1, ...
pub fn write_channels(map: &SemanticGrid) -> Vec<u8> {
    let k = 2 + map.n_categories() as usize;
    let mut out = Vec::with_capacity(20 + k * map.height() * map.width());
    out.extend_from_slice(CHANNEL_MAGIC);
    out.extend_from_slice(&(map.height() as u32).to_le_bytes());
    out.extend_from_slice(&(map.width() as u32).to_le_bytes());
    out.extend_from_slice(&(k as u32).to_le_bytes());
    for plane in 0..k {
        for row in 0..map.height() as i32 {
            for col in 0..map.width() as i32 {
                out.push(map.channel(Cell::new(row, col), plane) as u8);
            }
        }
    }
    out
}

pub fn save_bytes(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(bytes)
}
