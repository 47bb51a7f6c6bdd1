//! Geodesic distance fields over the grid, distance-bin partitions,
//! ground-truth frontier labels, and the training-sample container with its
//! binary serialization.
//!
//! Geodesics use 8-connected moves with step costs 1 and sqrt(2) cell sizes.
//! A diagonal move is forbidden only when both cells it squeezes between are
//! blocked. Distances are tracked internally as an exact integer pair
//! (straight steps, diagonal steps); the canonical f64 value
//! `(s + d * sqrt(2)) * cell_size` is a strictly monotone function of that
//! pair, so ordering and comparisons are exact.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Seek, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontier::FrontierSet;
use crate::grid::{Cell, Grid, KING_OFFSETS};
use crate::scene::Scene;
use crate::sensing::{LocalMap, SemanticGrid};

/// Bin value marking cells with no defined label or prediction.
pub const BIN_UNKNOWN: u8 = 255;

/// Default partition edges in meters; the final bin is implicitly unbounded.
pub const DEFAULT_PARTITION_M: [f64; 4] = [1.0, 2.0, 4.0, 8.0];

const SQRT_2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Error)]
pub enum DistanceError {
    #[error("no source cells given")]
    EmptySources,
    #[error("source cell ({0}, {1}) is out of bounds")]
    SourceOutOfBounds(i32, i32),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("sample io: {0}")]
    Io(#[from] io::Error),
    #[error("sample file corrupt: {0}")]
    Corrupt(String),
}

/// Distance to the nearest source as an exact (straight, diagonal) step pair.
#[derive(Debug, Clone)]
pub struct GeodesicField {
    straight: Grid<u32>,
    diagonal: Grid<u32>,
    cell_size_m: f64,
}

const UNREACHED: u32 = u32::MAX;

impl GeodesicField {
    pub fn reached(&self, cell: Cell) -> bool {
        self.straight.get(cell).is_some_and(|&s| s != UNREACHED)
    }

    /// Distance in cell units; +inf when unreached.
    pub fn distance_cells(&self, cell: Cell) -> f64 {
        match self.straight.get(cell) {
            Some(&s) if s != UNREACHED => s as f64 + self.diagonal[cell] as f64 * SQRT_2,
            _ => f64::INFINITY,
        }
    }

    /// Distance in meters; +inf when unreached.
    pub fn distance_m(&self, cell: Cell) -> f64 {
        self.distance_cells(cell) * self.cell_size_m
    }

    /// The whole field in meters as a plain grid.
    pub fn to_grid_m(&self) -> Grid<f64> {
        let mut out = Grid::filled(self.straight.height(), self.straight.width(), f64::INFINITY);
        for i in 0..out.len() {
            let s = self.straight.data()[i];
            if s != UNREACHED {
                out.data_mut()[i] =
                    (s as f64 + self.diagonal.data()[i] as f64 * SQRT_2) * self.cell_size_m;
            }
        }
        out
    }
}

/// Multi-source shortest geodesic distances over `traversable`. Sources may
/// sit on non-traversable cells (object footprints); paths expand only into
/// traversable cells.
pub fn geodesic_field(
    traversable: &Grid<bool>,
    sources: &[Cell],
    cell_size_m: f64,
) -> Result<GeodesicField, DistanceError> {
    if sources.is_empty() {
        return Err(DistanceError::EmptySources);
    }
    let h = traversable.height();
    let w = traversable.width();
    let mut straight = Grid::filled(h, w, UNREACHED);
    let mut diagonal = Grid::filled(h, w, 0u32);
    let mut heap: BinaryHeap<Reverse<(u64, u32)>> = BinaryHeap::new();

    let key = |s: u32, d: u32| (s as f64 + d as f64 * SQRT_2).to_bits();

    for &src in sources {
        if !traversable.in_bounds(src) {
            return Err(DistanceError::SourceOutOfBounds(src.row, src.col));
        }
        if straight[src] != 0 || diagonal[src] != 0 {
            straight[src] = 0;
            diagonal[src] = 0;
        }
        heap.push(Reverse((key(0, 0), traversable.index_of(src) as u32)));
    }

    while let Some(Reverse((bits, idx))) = heap.pop() {
        let cell = traversable.cell_of(idx as usize);
        let (s, d) = (straight[cell], diagonal[cell]);
        if s == UNREACHED || bits > key(s, d) {
            continue;
        }
        for &(dr, dc) in &KING_OFFSETS {
            let next = Cell::new(cell.row + dr, cell.col + dc);
            if !traversable.in_bounds(next) || !traversable[next] {
                continue;
            }
            let diag = dr != 0 && dc != 0;
            if diag {
                let side_a = Cell::new(cell.row, next.col);
                let side_b = Cell::new(next.row, cell.col);
                if !traversable[side_a] && !traversable[side_b] {
                    continue;
                }
            }
            let (ns, nd) = if diag { (s, d + 1) } else { (s + 1, d) };
            let nbits = key(ns, nd);
            let better = straight[next] == UNREACHED || nbits < key(straight[next], diagonal[next]);
            if better {
                straight[next] = ns;
                diagonal[next] = nd;
                heap.push(Reverse((nbits, traversable.index_of(next) as u32)));
            }
        }
    }

    Ok(GeodesicField {
        straight,
        diagonal,
        cell_size_m,
    })
}

/// Multi-source geodesic distances in meters; +inf where unreachable.
pub fn compute_geodesic(
    traversable: &Grid<bool>,
    sources: &[Cell],
    cell_size_m: f64,
) -> Result<Grid<f64>, DistanceError> {
    geodesic_field(traversable, sources, cell_size_m).map(|f| f.to_grid_m())
}

/// Distance-bin partition: ascending finite edges in meters, with one final
/// unbounded bin. `[1, 2, 4, 8]` yields bins [0,1), [1,2), [2,4), [4,8),
/// [8,inf).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Partition {
    edges_m: Vec<f64>,
}

impl Partition {
    pub fn new(edges_m: Vec<f64>) -> Result<Partition, DistanceError> {
        if edges_m.is_empty() {
            return Err(DistanceError::InvalidPartition("no edges".into()));
        }
        for window in edges_m.windows(2) {
            if window[0] >= window[1] {
                return Err(DistanceError::InvalidPartition(format!(
                    "edges must be strictly ascending, got {} then {}",
                    window[0], window[1]
                )));
            }
        }
        if edges_m[0] <= 0.0 || edges_m.iter().any(|e| !e.is_finite()) {
            return Err(DistanceError::InvalidPartition(
                "edges must be finite and positive".into(),
            ));
        }
        Ok(Partition { edges_m })
    }

    pub fn default_partition() -> Partition {
        Partition::new(DEFAULT_PARTITION_M.to_vec()).unwrap()
    }

    pub fn edges_m(&self) -> &[f64] {
        &self.edges_m
    }

    pub fn n_bins(&self) -> usize {
        self.edges_m.len() + 1
    }

    /// Bin index for a distance: the first edge strictly greater than the
    /// distance; +inf and anything past the last edge land in the final bin.
    pub fn bin_of(&self, distance_m: f64) -> u8 {
        self.edges_m
            .iter()
            .position(|&edge| distance_m < edge)
            .unwrap_or(self.edges_m.len()) as u8
    }

    /// Representative distance used when scoring a bin: the interval
    /// midpoint, with the unbounded bin pinned to 1.5x its lower edge.
    pub fn representative_m(&self, bin: u8) -> f64 {
        let b = bin as usize;
        let last = self.edges_m.len();
        if b == 0 {
            self.edges_m[0] / 2.0
        } else if b < last {
            (self.edges_m[b - 1] + self.edges_m[b]) / 2.0
        } else {
            self.edges_m[last - 1] * 1.5
        }
    }

    /// Human-readable bin label, e.g. "1-2m" or ">8m".
    pub fn label(&self, bin: u8) -> String {
        let b = bin as usize;
        if b == 0 {
            format!("0-{}m", self.edges_m[0])
        } else if b < self.edges_m.len() {
            format!("{}-{}m", self.edges_m[b - 1], self.edges_m[b])
        } else {
            format!(">{}m", self.edges_m[self.edges_m.len() - 1])
        }
    }
}

impl TryFrom<Vec<f64>> for Partition {
    type Error = String;

    fn try_from(edges: Vec<f64>) -> Result<Self, String> {
        Partition::new(edges).map_err(|e| e.to_string())
    }
}

impl From<Partition> for Vec<f64> {
    fn from(p: Partition) -> Vec<f64> {
        p.edges_m
    }
}

/// Dense target-distance field over a scene: exact distances in meters plus
/// their bin indices under a partition.
#[derive(Debug, Clone)]
pub struct DistanceField {
    pub target: u8,
    pub partition: Partition,
    pub distances_m: Grid<f64>,
    pub bins: Grid<u8>,
}

impl DistanceField {
    pub fn distance_at(&self, cell: Cell) -> f64 {
        self.distances_m.get(cell).copied().unwrap_or(f64::INFINITY)
    }

    pub fn bin_at(&self, cell: Cell) -> u8 {
        self.bins
            .get(cell)
            .copied()
            .unwrap_or((self.partition.n_bins() - 1) as u8)
    }
}

/// Ground-truth distance field for one target category: zero exactly on the
/// target's instance cells, geodesic elsewhere, +inf on unreachable cells and
/// every non-target obstacle cell. A target absent from the scene yields an
/// all-infinite field.
pub fn build_gt_field(scene: &Scene, target: u8, partition: &Partition) -> DistanceField {
    let sources = scene.category_cells(target);
    let distances_m = if sources.is_empty() {
        Grid::filled(scene.height, scene.width, f64::INFINITY)
    } else {
        compute_geodesic(&scene.traversable, &sources, scene.cell_size_m)
            .expect("sources are validated scene cells")
    };
    let bins = Grid::from_vec(
        scene.height,
        scene.width,
        distances_m.data().iter().map(|&d| partition.bin_of(d)).collect(),
    );
    DistanceField {
        target,
        partition: partition.clone(),
        distances_m,
        bins,
    }
}

/// Cells within `band_width_m` of a frontier cell, measured in Chebyshev
/// steps through non-obstacle cells (unexplored cells included). Frontier
/// cells outside the map are ignored.
pub fn frontier_band_mask(
    map: &SemanticGrid,
    frontier: &FrontierSet,
    band_width_m: f64,
) -> Grid<bool> {
    let radius = (band_width_m / map.cell_size_m() + 1e-9).floor() as u32;
    let mut depth: Grid<u32> = Grid::filled(map.height(), map.width(), u32::MAX);
    let mut mask = Grid::filled(map.height(), map.width(), false);
    let mut queue = std::collections::VecDeque::new();
    for &cell in &frontier.cells {
        if map.in_bounds(cell) && !map.obstacle(cell) {
            depth[cell] = 0;
            mask[cell] = true;
            queue.push_back(cell);
        }
    }
    while let Some(cell) = queue.pop_front() {
        let d = depth[cell];
        if d >= radius {
            continue;
        }
        for &(dr, dc) in &KING_OFFSETS {
            let next = Cell::new(cell.row + dr, cell.col + dc);
            if map.in_bounds(next) && !map.obstacle(next) && depth[next] == u32::MAX {
                depth[next] = d + 1;
                mask[next] = true;
                queue.push_back(next);
            }
        }
    }
    mask
}

/// One supervised example: a local map crop with ground-truth distance bins
/// over the frontier band.
#[derive(Debug, Clone)]
pub struct TrainingSample {
    pub scene_id: String,
    pub target: u8,
    pub local: LocalMap,
    /// Ground-truth bin per local cell; [`BIN_UNKNOWN`] outside the global
    /// map.
    pub gt_bins: Grid<u8>,
    /// True on cells belonging to the frontier band at capture time.
    pub mask: Grid<bool>,
}

const SAMPLE_MAGIC: &[u8; 8] = b"NAVSMP01";

/// Fixed per-file properties shared by all samples in a sample file.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMeta {
    pub local_size: usize,
    pub n_categories: u8,
    pub n_targets: u8,
    pub cell_size_m: f64,
    pub partition: Partition,
}

/// Index line written per sample alongside the binary file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleIndexEntry {
    pub offset: u64,
    pub scene_id: String,
    pub target: u8,
}

fn index_path(bin_path: &Path) -> PathBuf {
    bin_path.with_extension("idx.jsonl")
}

/// Streaming writer producing the binary sample file plus a JSONL index of
/// (offset, scene id, target) per sample.
pub struct SampleWriter {
    meta: SampleMeta,
    out: BufWriter<File>,
    index: BufWriter<File>,
    offset: u64,
    written: usize,
}

impl SampleWriter {
    pub fn create(path: &Path, meta: SampleMeta) -> Result<SampleWriter, DistanceError> {
        let mut out = BufWriter::new(File::create(path)?);
        let index = BufWriter::new(File::create(index_path(path))?);
        out.write_all(SAMPLE_MAGIC)?;
        out.write_all(&(meta.local_size as u32).to_le_bytes())?;
        out.write_all(&[meta.n_categories, meta.n_targets])?;
        out.write_all(&meta.cell_size_m.to_le_bytes())?;
        out.write_all(&(meta.partition.edges_m().len() as u32).to_le_bytes())?;
        for &edge in meta.partition.edges_m() {
            out.write_all(&edge.to_le_bytes())?;
        }
        let offset = 8 + 4 + 2 + 8 + 4 + 8 * meta.partition.edges_m().len() as u64;
        Ok(SampleWriter {
            meta,
            out,
            index,
            offset,
            written: 0,
        })
    }

    pub fn write(&mut self, sample: &TrainingSample) -> Result<(), DistanceError> {
        let s = self.meta.local_size;
        assert_eq!(sample.local.map.height(), s, "sample window size mismatch");
        assert_eq!(sample.local.map.n_categories(), self.meta.n_categories);

        let mut record = Vec::new();
        let id_bytes = sample.scene_id.as_bytes();
        record.extend_from_slice(&(id_bytes.len() as u16).to_le_bytes());
        record.extend_from_slice(id_bytes);
        record.push(sample.target);
        record.extend_from_slice(&sample.local.origin.row.to_le_bytes());
        record.extend_from_slice(&sample.local.origin.col.to_le_bytes());
        for plane in 0..self.meta.n_categories as usize + 2 {
            record.extend_from_slice(&pack_plane(&sample.local.map, plane, s));
        }
        record.extend_from_slice(sample.gt_bins.data());
        record.extend_from_slice(&pack_bools(sample.mask.data()));

        self.out.write_all(&record)?;
        let entry = SampleIndexEntry {
            offset: self.offset,
            scene_id: sample.scene_id.clone(),
            target: sample.target,
        };
        serde_json::to_writer(&mut self.index, &entry).map_err(io::Error::other)?;
        self.index.write_all(b"\n")?;
        self.offset += record.len() as u64;
        self.written += 1;
        Ok(())
    }

    pub fn written(&self) -> usize {
        self.written
    }

    pub fn finish(mut self) -> Result<usize, DistanceError> {
        self.out.flush()?;
        self.index.flush()?;
        Ok(self.written)
    }
}

fn pack_plane(map: &SemanticGrid, plane: usize, size: usize) -> Vec<u8> {
    let mut bytes = vec![0u8; (size * size).div_ceil(8)];
    for r in 0..size {
        for c in 0..size {
            if map.channel(Cell::new(r as i32, c as i32), plane) {
                let i = r * size + c;
                bytes[i / 8] |= 1 << (i % 8);
            }
        }
    }
    bytes
}

fn pack_bools(bits: &[bool]) -> Vec<u8> {
    let mut bytes = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            bytes[i / 8] |= 1 << (i % 8);
        }
    }
    bytes
}

fn unpack_bools(bytes: &[u8], len: usize) -> Vec<bool> {
    (0..len).map(|i| bytes[i / 8] & (1 << (i % 8)) != 0).collect()
}

/// Streaming reader over a sample file; iterates samples in write order.
pub struct SampleReader {
    meta: SampleMeta,
    input: BufReader<File>,
    done: bool,
}

impl SampleReader {
    pub fn open(path: &Path) -> Result<SampleReader, DistanceError> {
        let mut input = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != SAMPLE_MAGIC {
            return Err(DistanceError::Corrupt("bad magic".into()));
        }
        let local_size = read_u32(&mut input)? as usize;
        let mut pair = [0u8; 2];
        input.read_exact(&mut pair)?;
        let cell_size_m = read_f64(&mut input)?;
        let n_edges = read_u32(&mut input)? as usize;
        if n_edges > 64 {
            return Err(DistanceError::Corrupt(format!("{n_edges} partition edges")));
        }
        let mut edges = Vec::with_capacity(n_edges);
        for _ in 0..n_edges {
            edges.push(read_f64(&mut input)?);
        }
        let partition = Partition::new(edges)
            .map_err(|e| DistanceError::Corrupt(format!("partition: {e}")))?;
        if local_size == 0 || local_size > 4096 {
            return Err(DistanceError::Corrupt(format!("window size {local_size}")));
        }
        Ok(SampleReader {
            meta: SampleMeta {
                local_size,
                n_categories: pair[0],
                n_targets: pair[1],
                cell_size_m,
                partition,
            },
            input,
            done: false,
        })
    }

    pub fn meta(&self) -> &SampleMeta {
        &self.meta
    }

    fn read_sample(&mut self) -> Result<Option<TrainingSample>, DistanceError> {
        let mut len_bytes = [0u8; 2];
        match self.input.read_exact(&mut len_bytes) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
            Err(e) => return Err(e.into()),
        }
        let id_len = u16::from_le_bytes(len_bytes) as usize;
        let mut id = vec![0u8; id_len];
        self.input.read_exact(&mut id)?;
        let scene_id = String::from_utf8(id)
            .map_err(|_| DistanceError::Corrupt("scene id not utf-8".into()))?;
        let mut target = [0u8; 1];
        self.input.read_exact(&mut target)?;
        let mut origin = [0u8; 8];
        self.input.read_exact(&mut origin)?;
        let row = i32::from_le_bytes(origin[0..4].try_into().unwrap());
        let col = i32::from_le_bytes(origin[4..8].try_into().unwrap());

        let s = self.meta.local_size;
        let n_cells = s * s;
        let plane_bytes = n_cells.div_ceil(8);
        let mut bits = Grid::filled(s, s, 0u32);
        let mut buf = vec![0u8; plane_bytes];
        for plane in 0..self.meta.n_categories as usize + 2 {
            self.input.read_exact(&mut buf)?;
            for i in 0..n_cells {
                if buf[i / 8] & (1 << (i % 8)) != 0 {
                    bits.data_mut()[i] |= 1 << plane as u32;
                }
            }
        }
        let mut gt = vec![0u8; n_cells];
        self.input.read_exact(&mut gt)?;
        let n_bins = self.meta.partition.n_bins() as u8;
        if gt.iter().any(|&b| b != BIN_UNKNOWN && b >= n_bins) {
            return Err(DistanceError::Corrupt("bin index out of range".into()));
        }
        let mut mask_buf = vec![0u8; plane_bytes];
        self.input.read_exact(&mut mask_buf)?;

        Ok(Some(TrainingSample {
            scene_id,
            target: target[0],
            local: LocalMap {
                map: SemanticGrid::from_bits(bits, self.meta.n_categories, self.meta.cell_size_m),
                origin: Cell::new(row, col),
            },
            gt_bins: Grid::from_vec(s, s, gt),
            mask: Grid::from_vec(s, s, unpack_bools(&mask_buf, n_cells)),
        }))
    }

    /// Jumps to a byte offset from the JSONL index.
    pub fn seek_to(&mut self, offset: u64) -> Result<(), DistanceError> {
        self.input.seek(io::SeekFrom::Start(offset))?;
        self.done = false;
        Ok(())
    }
}

impl Iterator for SampleReader {
    type Item = Result<TrainingSample, DistanceError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.read_sample() {
            Ok(Some(sample)) => Some(Ok(sample)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Reads the JSONL index that accompanies a sample file.
pub fn read_sample_index(bin_path: &Path) -> Result<Vec<SampleIndexEntry>, DistanceError> {
    let text = std::fs::read_to_string(index_path(bin_path))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|e| DistanceError::Corrupt(format!("index: {e}")))
        })
        .collect()
}

fn read_u32(r: &mut impl Read) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Instance;

    fn open_grid(h: usize, w: usize) -> Grid<bool> {
        Grid::filled(h, w, true)
    }

    #[test]
    fn single_source_small_grid() {
        let grid = open_grid(3, 3);
        let d = compute_geodesic(&grid, &[Cell::new(1, 1)], 1.0).unwrap();
        assert_eq!(d[Cell::new(1, 1)], 0.0);
        assert_eq!(d[Cell::new(1, 2)], 1.0);
        assert_eq!(d[Cell::new(0, 0)], SQRT_2);
        assert_eq!(d[Cell::new(0, 2)], SQRT_2);
    }

    #[test]
    fn cell_size_scales_distances() {
        let grid = open_grid(3, 3);
        let d = compute_geodesic(&grid, &[Cell::new(0, 0)], 0.05).unwrap();
        assert_eq!(d[Cell::new(0, 2)], 2.0 * 0.05);
        assert_eq!(d[Cell::new(2, 2)], 2.0 * SQRT_2 * 0.05);
    }

    #[test]
    fn wall_forces_detour() {
        // 5x5 with a wall column except one gap at the bottom.
        let mut grid = open_grid(5, 5);
        for r in 0..4 {
            grid.set(Cell::new(r, 2), false);
        }
        let d = compute_geodesic(&grid, &[Cell::new(0, 0)], 1.0).unwrap();
        // Straight line would be 4; the detour goes down and around.
        assert!(d[Cell::new(0, 4)] > 4.0);
        assert_eq!(d[Cell::new(0, 2)], f64::INFINITY);
    }

    #[test]
    fn diagonal_blocked_only_by_double_corner() {
        // One blocked side cell still allows the diagonal.
        let mut grid = open_grid(2, 2);
        grid.set(Cell::new(0, 1), false);
        let d = compute_geodesic(&grid, &[Cell::new(0, 0)], 1.0).unwrap();
        assert_eq!(d[Cell::new(1, 1)], SQRT_2);

        // Both side cells blocked: the diagonal is sealed.
        let mut grid = open_grid(2, 2);
        grid.set(Cell::new(0, 1), false);
        grid.set(Cell::new(1, 0), false);
        let d = compute_geodesic(&grid, &[Cell::new(0, 0)], 1.0).unwrap();
        assert_eq!(d[Cell::new(1, 1)], f64::INFINITY);
    }

    #[test]
    fn sealed_region_is_unreachable() {
        let mut grid = open_grid(5, 5);
        for i in 0..5 {
            grid.set(Cell::new(2, i), false);
        }
        let d = compute_geodesic(&grid, &[Cell::new(0, 0)], 1.0).unwrap();
        for c in 0..5 {
            assert_eq!(d[Cell::new(4, c)], f64::INFINITY);
        }
    }

    #[test]
    fn source_on_obstacle_expands_outward() {
        let mut grid = open_grid(3, 3);
        grid.set(Cell::new(1, 1), false);
        let d = compute_geodesic(&grid, &[Cell::new(1, 1)], 1.0).unwrap();
        assert_eq!(d[Cell::new(1, 1)], 0.0);
        assert_eq!(d[Cell::new(0, 1)], 1.0);
        assert_eq!(d[Cell::new(0, 0)], SQRT_2);
    }

    #[test]
    fn empty_sources_rejected() {
        let grid = open_grid(2, 2);
        assert!(matches!(
            compute_geodesic(&grid, &[], 1.0),
            Err(DistanceError::EmptySources)
        ));
    }

    #[test]
    fn partition_binning_matches_interval_rule() {
        let p = Partition::default_partition();
        assert_eq!(p.n_bins(), 5);
        assert_eq!(p.bin_of(0.0), 0);
        assert_eq!(p.bin_of(0.99), 0);
        assert_eq!(p.bin_of(1.0), 1);
        assert_eq!(p.bin_of(3.1), 2);
        assert_eq!(p.bin_of(8.0), 4);
        assert_eq!(p.bin_of(f64::INFINITY), 4);
    }

    #[test]
    fn partition_representatives() {
        let p = Partition::default_partition();
        assert_eq!(p.representative_m(0), 0.5);
        assert_eq!(p.representative_m(1), 1.5);
        assert_eq!(p.representative_m(2), 3.0);
        assert_eq!(p.representative_m(3), 6.0);
        assert_eq!(p.representative_m(4), 12.0);
    }

    #[test]
    fn partition_rejects_bad_edges() {
        assert!(Partition::new(vec![]).is_err());
        assert!(Partition::new(vec![2.0, 1.0]).is_err());
        assert!(Partition::new(vec![1.0, 1.0]).is_err());
        assert!(Partition::new(vec![-1.0, 2.0]).is_err());
    }

    #[test]
    fn partition_labels() {
        let p = Partition::default_partition();
        assert_eq!(p.label(0), "0-1m");
        assert_eq!(p.label(2), "2-4m");
        assert_eq!(p.label(4), ">8m");
    }

    fn scene_with_target(target: u8) -> Scene {
        let mut traversable = Grid::filled(20, 20, false);
        for r in 1..19 {
            for c in 1..19 {
                traversable.set(Cell::new(r, c), true);
            }
        }
        let block = vec![Cell::new(10, 10), Cell::new(10, 11)];
        for &cell in &block {
            traversable.set(cell, false);
        }
        Scene::new(
            20,
            20,
            0.05,
            traversable,
            vec![Instance {
                category: target,
                cells: block,
            }],
            vec![],
            vec![Cell::new(2, 2)],
            0,
        )
        .unwrap()
    }

    #[test]
    fn gt_field_zero_on_target_and_inf_on_walls() {
        let scene = scene_with_target(1);
        let field = build_gt_field(&scene, 1, &Partition::default_partition());
        assert_eq!(field.distance_at(Cell::new(10, 10)), 0.0);
        assert_eq!(field.distance_at(Cell::new(10, 11)), 0.0);
        assert_eq!(field.distance_at(Cell::new(0, 0)), f64::INFINITY);
        assert_eq!(field.bin_at(Cell::new(0, 0)), 4);
        // Adjacent free cell is one step of 5 cm away.
        assert_eq!(field.distance_at(Cell::new(9, 10)), 0.05);
        assert_eq!(field.bin_at(Cell::new(9, 10)), 0);
    }

    #[test]
    fn gt_field_absent_target_is_all_infinite() {
        let scene = scene_with_target(1);
        let field = build_gt_field(&scene, 3, &Partition::default_partition());
        assert!(field.distances_m.data().iter().all(|d| d.is_infinite()));
        assert!(field.bins.data().iter().all(|&b| b == 4));
    }

    #[test]
    fn band_mask_is_chebyshev_disk_in_open_space() {
        let mut map = SemanticGrid::new(60, 60, 2, 0.05);
        for r in 0..60 {
            for c in 0..30 {
                map.set_explored(Cell::new(r, c));
            }
        }
        let frontier = FrontierSet {
            cells: vec![Cell::new(30, 29)],
            door_sector: None,
        };
        let mask = frontier_band_mask(&map, &frontier, 1.0);
        let count = mask.data().iter().filter(|&&m| m).count();
        // 1 m at 5 cm/cell is 20 steps: a 41x41 Chebyshev disk.
        assert_eq!(count, 41 * 41);
        assert!(mask[Cell::new(10, 29)]);
        assert!(mask[Cell::new(30, 49)], "band extends into unexplored space");
        assert!(!mask[Cell::new(30, 50)]);
    }

    #[test]
    fn band_mask_does_not_cross_obstacles() {
        let mut map = SemanticGrid::new(20, 20, 2, 0.05);
        for r in 0..20 {
            for c in 0..20 {
                map.set_explored(Cell::new(r, c));
            }
        }
        for r in 0..20 {
            if r != 19 {
                map.set_obstacle(Cell::new(r, 10));
            }
        }
        let frontier = FrontierSet {
            cells: vec![Cell::new(0, 5)],
            door_sector: None,
        };
        let mask = frontier_band_mask(&map, &frontier, 0.25);
        // 5 steps of reach; the far side of the wall requires a long detour.
        assert!(mask[Cell::new(0, 9)]);
        assert!(!mask[Cell::new(0, 10)], "obstacle cell excluded");
        assert!(!mask[Cell::new(0, 11)], "blocked by the wall");
    }

    fn tiny_sample(scene_id: &str, target: u8, size: usize) -> TrainingSample {
        let mut map = SemanticGrid::new(size, size, 3, 0.05);
        map.set_obstacle(Cell::new(1, 1));
        map.set_category(Cell::new(1, 1), 2);
        map.set_explored(Cell::new(0, 0));
        let mut gt = Grid::filled(size, size, BIN_UNKNOWN);
        gt.set(Cell::new(0, 0), 1);
        gt.set(Cell::new(0, 1), 4);
        let mut mask = Grid::filled(size, size, false);
        mask.set(Cell::new(0, 0), true);
        mask.set(Cell::new(0, 1), true);
        TrainingSample {
            scene_id: scene_id.to_string(),
            target,
            local: LocalMap {
                map,
                origin: Cell::new(-3, 7),
            },
            gt_bins: gt,
            mask,
        }
    }

    #[test]
    fn sample_file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("samples.bin");
        let meta = SampleMeta {
            local_size: 8,
            n_categories: 3,
            n_targets: 2,
            cell_size_m: 0.05,
            partition: Partition::default_partition(),
        };
        let mut writer = SampleWriter::create(&path, meta.clone()).unwrap();
        let a = tiny_sample("scene_a", 0, 8);
        let b = tiny_sample("scene_b", 1, 8);
        writer.write(&a).unwrap();
        writer.write(&b).unwrap();
        assert_eq!(writer.finish().unwrap(), 2);

        let mut reader = SampleReader::open(&path).unwrap();
        assert_eq!(reader.meta(), &meta);
        let ra = reader.next().unwrap().unwrap();
        let rb = reader.next().unwrap().unwrap();
        assert!(reader.next().is_none());

        assert_eq!(ra.scene_id, "scene_a");
        assert_eq!(ra.target, 0);
        assert_eq!(ra.local.origin, Cell::new(-3, 7));
        assert_eq!(ra.gt_bins, a.gt_bins);
        assert_eq!(ra.mask, a.mask);
        assert!(ra.local.map.obstacle(Cell::new(1, 1)));
        assert!(ra.local.map.category(Cell::new(1, 1), 2));
        assert_eq!(ra.local.map.explored_count(), a.local.map.explored_count());
        assert_eq!(rb.scene_id, "scene_b");

        let index = read_sample_index(&path).unwrap();
        assert_eq!(index.len(), 2);
        assert_eq!(index[0].scene_id, "scene_a");
        assert!(index[1].offset > index[0].offset);

        // Seeking to the second sample's offset re-reads it.
        let mut reader = SampleReader::open(&path).unwrap();
        reader.seek_to(index[1].offset).unwrap();
        let again = reader.next().unwrap().unwrap();
        assert_eq!(again.scene_id, "scene_b");
    }

    #[test]
    fn sample_reader_rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        std::fs::write(&path, b"not a sample file at all").unwrap();
        assert!(matches!(
            SampleReader::open(&path),
            Err(DistanceError::Corrupt(_))
        ));
    }
}
