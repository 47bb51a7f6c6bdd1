//! Frontier distance-bin predictors: the ground-truth oracle, its noisy
//! variant, a constant baseline, the learned co-occurrence model, and the
//! offline evaluation harness that scores any of them on recorded samples.

mod relation;

pub use relation::{train_relation_model, RelationModel, RelationPredictor, TrainSettings};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::distance::{
    build_gt_field, frontier_band_mask, DistanceField, Partition, TrainingSample, BIN_UNKNOWN,
};
use crate::frontier::{extract_frontier, Adjacency, FrontierSet};
use crate::grid::{Cell, Grid};
use crate::scene::Scene;
use crate::sensing::LocalMap;

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error("no samples to work with")]
    EmptySamples,
    #[error("model config: {0}")]
    Config(String),
    #[error("model io: {0}")]
    Io(#[from] std::io::Error),
    #[error("model file corrupt: {0}")]
    Corrupt(String),
}

/// Per-cell distance-bin estimates over a local window. `bins` holds the
/// argmax bin, [`BIN_UNKNOWN`] where nothing was predicted; `scores` holds
/// the full per-bin distribution for exactly the predicted cells.
#[derive(Debug, Clone)]
pub struct DistancePrediction {
    pub target: u8,
    pub origin: Cell,
    pub n_bins: u8,
    pub bins: Grid<u8>,
    scores: Vec<(Cell, Box<[f64]>)>,
}

impl DistancePrediction {
    /// All-unknown prediction over a window.
    pub fn unknown(target: u8, origin: Cell, size: usize, n_bins: u8) -> DistancePrediction {
        DistancePrediction {
            target,
            origin,
            n_bins,
            bins: Grid::filled(size, size, BIN_UNKNOWN),
            scores: Vec::new(),
        }
    }

    /// Wraps hard bin labels as a prediction with one-hot scores.
    pub fn from_bins(target: u8, origin: Cell, bins: Grid<u8>, n_bins: u8) -> DistancePrediction {
        let mut scores = Vec::new();
        for cell in bins.cells() {
            let b = bins[cell];
            if b != BIN_UNKNOWN {
                debug_assert!(b < n_bins);
                let mut dist = vec![0.0; n_bins as usize].into_boxed_slice();
                dist[b as usize] = 1.0;
                scores.push((cell, dist));
            }
        }
        DistancePrediction {
            target,
            origin,
            n_bins,
            bins,
            scores,
        }
    }

    /// Builds from per-cell score vectors; the argmax (lowest bin on ties)
    /// becomes the hard label.
    pub fn from_scores(
        target: u8,
        origin: Cell,
        size: usize,
        n_bins: u8,
        scores: Vec<(Cell, Box<[f64]>)>,
    ) -> DistancePrediction {
        let mut bins = Grid::filled(size, size, BIN_UNKNOWN);
        for (cell, dist) in &scores {
            debug_assert_eq!(dist.len(), n_bins as usize);
            let mut best = 0usize;
            for b in 1..dist.len() {
                if dist[b] > dist[best] {
                    best = b;
                }
            }
            bins[*cell] = best as u8;
        }
        DistancePrediction {
            target,
            origin,
            n_bins,
            bins,
            scores,
        }
    }

    /// Hard bin at a global cell; [`BIN_UNKNOWN`] outside the window.
    pub fn bin_at_global(&self, global: Cell) -> u8 {
        let local = Cell::new(global.row - self.origin.row, global.col - self.origin.col);
        self.bins.get(local).copied().unwrap_or(BIN_UNKNOWN)
    }

    /// Score vector at a global cell, if that cell was predicted.
    pub fn scores_at_global(&self, global: Cell) -> Option<&[f64]> {
        let local = Cell::new(global.row - self.origin.row, global.col - self.origin.col);
        self.scores
            .iter()
            .find(|(c, _)| *c == local)
            .map(|(_, s)| s.as_ref())
    }

    /// Predicted local cells with their score vectors.
    pub fn scored_cells(&self) -> &[(Cell, Box<[f64]>)] {
        &self.scores
    }

    pub fn defined_count(&self) -> usize {
        self.scores.len()
    }
}

/// Online predictor interface: estimate distance bins for the frontier band
/// of the current local map. Frontier cells arrive in global coordinates.
pub trait DistancePredictor: Sync {
    fn name(&self) -> String;

    fn predict(
        &self,
        local: &LocalMap,
        frontier: &FrontierSet,
        target: u8,
        rng: &mut ChaCha8Rng,
    ) -> DistancePrediction;
}

fn band_bins_from_field(
    field: &DistanceField,
    local: &LocalMap,
    frontier: &FrontierSet,
    band_width_m: f64,
) -> Grid<u8> {
    let size = local.map.height();
    let local_frontier = frontier.translate(Cell::new(-local.origin.row, -local.origin.col));
    let mask = frontier_band_mask(&local.map, &local_frontier, band_width_m);
    let mut bins = Grid::filled(size, size, BIN_UNKNOWN);
    for cell in mask.cells() {
        if mask[cell] {
            let global = local.to_global(cell);
            if field.bins.in_bounds(global) {
                bins[cell] = field.bin_at(global);
            }
        }
    }
    bins
}

/// Perfect predictor: reads the scene's ground-truth field over the frontier
/// band. Holds one field per target category, so one instance serves a whole
/// scene.
pub struct OraclePredictor {
    fields: Vec<DistanceField>,
    band_width_m: f64,
}

impl OraclePredictor {
    pub fn for_scene(
        scene: &Scene,
        n_targets: u8,
        partition: &Partition,
        band_width_m: f64,
    ) -> OraclePredictor {
        let fields = (0..n_targets)
            .map(|t| build_gt_field(scene, t, partition))
            .collect();
        OraclePredictor {
            fields,
            band_width_m,
        }
    }

    /// Ground-truth field for one target, usable directly as the judge.
    pub fn field(&self, target: u8) -> &DistanceField {
        &self.fields[target as usize]
    }
}

impl DistancePredictor for OraclePredictor {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn predict(
        &self,
        local: &LocalMap,
        frontier: &FrontierSet,
        target: u8,
        _rng: &mut ChaCha8Rng,
    ) -> DistancePrediction {
        let field = self.field(target);
        let bins = band_bins_from_field(field, local, frontier, self.band_width_m);
        DistancePrediction::from_bins(
            target,
            local.origin,
            bins,
            field.partition.n_bins() as u8,
        )
    }
}

/// Oracle with label noise: each predicted bin is nudged one bin up or down
/// with probability `p_flip`, reflecting at the ends of the range.
pub struct NoisyOraclePredictor {
    pub oracle: OraclePredictor,
    pub p_flip: f64,
}

impl DistancePredictor for NoisyOraclePredictor {
    fn name(&self) -> String {
        format!("noisy-oracle(p={})", self.p_flip)
    }

    fn predict(
        &self,
        local: &LocalMap,
        frontier: &FrontierSet,
        target: u8,
        rng: &mut ChaCha8Rng,
    ) -> DistancePrediction {
        let mut pred = self.oracle.predict(local, frontier, target, rng);
        let last = pred.n_bins - 1;
        for cell in pred.bins.cells() {
            let b = pred.bins[cell];
            if b == BIN_UNKNOWN || self.p_flip <= 0.0 {
                continue;
            }
            if rng.random::<f64>() < self.p_flip {
                let up = rng.random::<bool>();
                let flipped = if b == 0 {
                    1.min(last)
                } else if b == last {
                    last.saturating_sub(1)
                } else if up {
                    b + 1
                } else {
                    b - 1
                };
                pred.bins[cell] = flipped;
            }
        }
        // Rebuild one-hot scores to match the flipped labels.
        DistancePrediction::from_bins(pred.target, pred.origin, pred.bins, pred.n_bins)
    }
}

/// Predicts the same bin everywhere in the band.
pub struct ConstantPredictor {
    pub bin: u8,
    pub n_bins: u8,
    pub band_width_m: f64,
}

impl DistancePredictor for ConstantPredictor {
    fn name(&self) -> String {
        format!("constant(bin={})", self.bin)
    }

    fn predict(
        &self,
        local: &LocalMap,
        frontier: &FrontierSet,
        target: u8,
        _rng: &mut ChaCha8Rng,
    ) -> DistancePrediction {
        let size = local.map.height();
        let local_frontier = frontier.translate(Cell::new(-local.origin.row, -local.origin.col));
        let mask = frontier_band_mask(&local.map, &local_frontier, self.band_width_m);
        let mut bins = Grid::filled(size, size, BIN_UNKNOWN);
        for cell in mask.cells() {
            if mask[cell] {
                bins[cell] = self.bin;
            }
        }
        DistancePrediction::from_bins(target, local.origin, bins, self.n_bins)
    }
}

/// Offline predictor interface over recorded samples. Any online
/// [`DistancePredictor`] evaluates by re-extracting the frontier from the
/// stored local map.
pub trait SamplePredictor: Sync {
    fn name(&self) -> String;

    fn predict_sample(&self, sample: &TrainingSample, rng: &mut ChaCha8Rng) -> DistancePrediction;
}

impl<T: DistancePredictor> SamplePredictor for T {
    fn name(&self) -> String {
        DistancePredictor::name(self)
    }

    fn predict_sample(&self, sample: &TrainingSample, rng: &mut ChaCha8Rng) -> DistancePrediction {
        let frontier =
            extract_frontier(&sample.local.map, Adjacency::Eight).translate(sample.local.origin);
        self.predict(&sample.local, &frontier, sample.target, rng)
    }
}

/// Replays the labels stored in a sample: the upper bound every predictor is
/// compared against.
pub struct SampleGtOracle;

impl SamplePredictor for SampleGtOracle {
    fn name(&self) -> String {
        "sample-gt".into()
    }

    fn predict_sample(&self, sample: &TrainingSample, _rng: &mut ChaCha8Rng) -> DistancePrediction {
        let size = sample.local.map.height();
        let n_bins = sample
            .gt_bins
            .data()
            .iter()
            .filter(|&&b| b != BIN_UNKNOWN)
            .max()
            .map_or(1, |&m| m + 1);
        let mut bins = Grid::filled(size, size, BIN_UNKNOWN);
        for cell in bins.cells() {
            if sample.mask[cell] {
                bins[cell] = sample.gt_bins[cell];
            }
        }
        DistancePrediction::from_bins(sample.target, sample.local.origin, bins, n_bins)
    }
}

/// Per-bin and aggregate classification quality of a predictor on a sample
/// set.
#[derive(Debug, Clone)]
pub struct PredictorReport {
    pub predictor: String,
    pub n_bins: usize,
    /// confusion[gt][predicted], over labeled band cells the predictor
    /// committed on.
    pub confusion: Vec<Vec<u64>>,
    /// Labeled band cells where the predictor abstained.
    pub abstained: u64,
    pub samples: usize,
}

impl PredictorReport {
    pub fn evaluated(&self) -> u64 {
        self.confusion.iter().flatten().sum()
    }

    pub fn support(&self, bin: usize) -> u64 {
        self.confusion[bin].iter().sum()
    }

    pub fn predicted_count(&self, bin: usize) -> u64 {
        self.confusion.iter().map(|row| row[bin]).sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.n_bins).map(|b| self.confusion[b][b]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        let n = self.evaluated();
        if n == 0 {
            0.0
        } else {
            self.correct() as f64 / n as f64
        }
    }

    /// Fraction of labeled band cells the predictor committed on.
    pub fn coverage(&self) -> f64 {
        let total = self.evaluated() + self.abstained;
        if total == 0 {
            0.0
        } else {
            self.evaluated() as f64 / total as f64
        }
    }

    pub fn precision(&self, bin: usize) -> Option<f64> {
        let p = self.predicted_count(bin);
        (p > 0).then(|| self.confusion[bin][bin] as f64 / p as f64)
    }

    pub fn recall(&self, bin: usize) -> Option<f64> {
        let s = self.support(bin);
        (s > 0).then(|| self.confusion[bin][bin] as f64 / s as f64)
    }

    /// Unweighted mean precision over all bins; bins with no predictions
    /// contribute zero.
    pub fn macro_precision(&self) -> f64 {
        (0..self.n_bins)
            .map(|b| self.precision(b).unwrap_or(0.0))
            .sum::<f64>()
            / self.n_bins as f64
    }

    /// Unweighted mean recall over all bins; bins with no support contribute
    /// zero.
    pub fn macro_recall(&self) -> f64 {
        (0..self.n_bins)
            .map(|b| self.recall(b).unwrap_or(0.0))
            .sum::<f64>()
            / self.n_bins as f64
    }

    /// One row per bin (precision, recall, support) plus a macro summary
    /// row.
    pub fn to_csv(&self, partition: &Partition) -> String {
        let mut out = String::from("predictor,bin,range,precision,recall,support,predicted\n");
        for b in 0..self.n_bins {
            out.push_str(&format!(
                "{},{},{},{:.6},{:.6},{},{}\n",
                self.predictor,
                b,
                partition.label(b as u8),
                self.precision(b).unwrap_or(0.0),
                self.recall(b).unwrap_or(0.0),
                self.support(b),
                self.predicted_count(b),
            ));
        }
        out.push_str(&format!(
            "{},macro,all,{:.6},{:.6},{},{}\n",
            self.predictor,
            self.macro_precision(),
            self.macro_recall(),
            self.evaluated(),
            self.evaluated(),
        ));
        out
    }
}

/// Scores a predictor against the stored labels of each sample, over the
/// stored band mask. Cells without a label are skipped; labeled cells the
/// predictor abstains on count toward coverage, not error.
pub fn evaluate_predictor<P: SamplePredictor + ?Sized>(
    predictor: &P,
    samples: impl IntoIterator<Item = TrainingSample>,
    n_bins: usize,
    rng: &mut ChaCha8Rng,
) -> Result<PredictorReport, PredictorError> {
    let mut confusion = vec![vec![0u64; n_bins]; n_bins];
    let mut abstained = 0u64;
    let mut count = 0usize;
    for sample in samples {
        let pred = predictor.predict_sample(&sample, rng);
        for cell in sample.mask.cells() {
            if !sample.mask[cell] {
                continue;
            }
            let gt = sample.gt_bins[cell];
            if gt == BIN_UNKNOWN || gt as usize >= n_bins {
                continue;
            }
            let p = pred.bin_at_global(sample.local.to_global(cell));
            if p == BIN_UNKNOWN {
                abstained += 1;
            } else if (p as usize) < n_bins {
                confusion[gt as usize][p as usize] += 1;
            }
        }
        count += 1;
    }
    if count == 0 {
        return Err(PredictorError::EmptySamples);
    }
    Ok(PredictorReport {
        predictor: SamplePredictor::name(predictor),
        n_bins,
        confusion,
        abstained,
        samples: count,
    })
}
