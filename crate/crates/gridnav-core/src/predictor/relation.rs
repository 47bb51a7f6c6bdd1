//! Learned frontier-distance model: a naive-Bayes classifier over
//! co-occurrence statistics between the target's distance bin and the
//! bucketed geodesic distance to each observed semantic category.
//!
//! Counts are integers, so training is exactly order-independent; the
//! serialized model is bit-for-bit reproducible from the same samples.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand_chacha::ChaCha8Rng;

use super::{DistancePrediction, DistancePredictor, PredictorError};
use crate::distance::{frontier_band_mask, geodesic_field, Partition, TrainingSample, BIN_UNKNOWN};
use crate::frontier::FrontierSet;
use crate::grid::{Cell, Grid};
use crate::sensing::LocalMap;

const MODEL_MAGIC: &[u8; 8] = b"NRELMD01";
const MODEL_VERSION: u32 = 1;

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSettings {
    /// Laplace smoothing mass. Zero means no smoothing: a seen bucket with a
    /// zero count then rules its bin out entirely, while a never-seen bucket
    /// is skipped and the posterior falls back to the prior.
    pub alpha: f64,
    /// Feature bucket edges in meters; defaults to the partition edges.
    pub bucket_edges_m: Option<Vec<f64>>,
    /// Integer weight applied to a cell's counts by its ground-truth bin;
    /// near bins typically weigh more.
    pub bin_weights: Vec<u64>,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            alpha: 1.0,
            bucket_edges_m: None,
            bin_weights: vec![5, 4, 3, 2, 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationModel {
    n_targets: u8,
    n_categories: u8,
    n_buckets: u8,
    n_bins: u8,
    alpha: f64,
    bucket_edges_m: Vec<f64>,
    bin_weights: Vec<u64>,
    /// prior_counts[target][bin]
    prior_counts: Vec<u64>,
    /// counts[target][category][bucket][bin]
    counts: Vec<u64>,
    train_scene_ids: BTreeSet<String>,
}

impl RelationModel {
    pub fn new(
        n_targets: u8,
        n_categories: u8,
        partition: &Partition,
        settings: &TrainSettings,
    ) -> Result<RelationModel, PredictorError> {
        let n_bins = partition.n_bins();
        if settings.bin_weights.len() != n_bins {
            return Err(PredictorError::Config(format!(
                "{} bin weights for {} bins",
                settings.bin_weights.len(),
                n_bins
            )));
        }
        if settings.alpha < 0.0 || !settings.alpha.is_finite() {
            return Err(PredictorError::Config("alpha must be non-negative".into()));
        }
        let edges = settings
            .bucket_edges_m
            .clone()
            .unwrap_or_else(|| partition.edges_m().to_vec());
        Partition::new(edges.clone())
            .map_err(|e| PredictorError::Config(format!("bucket edges: {e}")))?;
        let n_buckets = edges.len() + 1;
        Ok(RelationModel {
            n_targets,
            n_categories,
            n_buckets: n_buckets as u8,
            n_bins: n_bins as u8,
            alpha: settings.alpha,
            bucket_edges_m: edges,
            bin_weights: settings.bin_weights.clone(),
            prior_counts: vec![0; n_targets as usize * n_bins],
            counts: vec![0; n_targets as usize * n_categories as usize * n_buckets * n_bins],
            train_scene_ids: BTreeSet::new(),
        })
    }

    pub fn n_bins(&self) -> u8 {
        self.n_bins
    }

    pub fn n_targets(&self) -> u8 {
        self.n_targets
    }

    pub fn n_categories(&self) -> u8 {
        self.n_categories
    }

    pub fn train_scene_ids(&self) -> impl Iterator<Item = &str> {
        self.train_scene_ids.iter().map(|s| s.as_str())
    }

    fn bucket_of(&self, distance_m: f64) -> usize {
        self.bucket_edges_m
            .iter()
            .position(|&edge| distance_m < edge)
            .unwrap_or(self.bucket_edges_m.len())
    }

    fn count_idx(&self, target: u8, category: u8, bucket: usize, bin: usize) -> usize {
        ((target as usize * self.n_categories as usize + category as usize)
            * self.n_buckets as usize
            + bucket)
            * self.n_bins as usize
            + bin
    }

    /// Accumulates one sample's labeled band cells into the count tensors.
    pub fn ingest(&mut self, sample: &TrainingSample) {
        if sample.target >= self.n_targets {
            return;
        }
        let labeled: Vec<Cell> = sample
            .mask
            .cells()
            .filter(|&c| sample.mask[c] && sample.gt_bins[c] != BIN_UNKNOWN)
            .collect();
        if labeled.is_empty() {
            return;
        }
        self.train_scene_ids.insert(sample.scene_id.clone());
        let observed = sample.local.map.categories_present();
        let features = category_distances(&sample.local.map, &sample.mask, &observed);
        for &cell in &labeled {
            let bin = sample.gt_bins[cell] as usize;
            if bin >= self.n_bins as usize {
                continue;
            }
            let weight = self.bin_weights[bin];
            self.prior_counts[sample.target as usize * self.n_bins as usize + bin] += weight;
            for (&category, distances) in observed.iter().zip(&features) {
                let bucket = self.bucket_of(distances[cell]);
                let idx = self.count_idx(sample.target, category, bucket, bin);
                self.counts[idx] += weight;
            }
        }
    }

    /// Whether any counts exist for this target.
    pub fn is_trained_for(&self, target: u8) -> bool {
        if target >= self.n_targets {
            return false;
        }
        let base = target as usize * self.n_bins as usize;
        self.prior_counts[base..base + self.n_bins as usize]
            .iter()
            .any(|&c| c > 0)
    }

    /// Smoothed prior distribution over bins for a target; sums to one.
    pub fn priors(&self, target: u8) -> Vec<f64> {
        let n = self.n_bins as usize;
        let base = target as usize * n;
        let raw = &self.prior_counts[base..base + n];
        let total: u64 = raw.iter().sum();
        let denom = total as f64 + self.alpha * n as f64;
        if denom <= 0.0 {
            return vec![1.0 / n as f64; n];
        }
        raw.iter().map(|&c| (c as f64 + self.alpha) / denom).collect()
    }

    /// Posterior over bins for one cell given its per-category feature
    /// distances. Buckets with no training mass for this (target, category)
    /// are skipped, leaving the prior.
    fn posterior(&self, target: u8, features: &[(u8, f64)]) -> Box<[f64]> {
        let n = self.n_bins as usize;
        let mut log_post: Vec<f64> = self
            .priors(target)
            .iter()
            .map(|&p| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY })
            .collect();
        for &(category, distance_m) in features {
            let bucket = self.bucket_of(distance_m);
            let base = self.count_idx(target, category, bucket, 0);
            let row = &self.counts[base..base + n];
            let total: u64 = row.iter().sum();
            if total == 0 {
                continue;
            }
            let denom = total as f64 + self.alpha * n as f64;
            for (bin, &c) in row.iter().enumerate() {
                let p = (c as f64 + self.alpha) / denom;
                log_post[bin] += if p > 0.0 { p.ln() } else { f64::NEG_INFINITY };
            }
        }
        let max = log_post.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            // Every bin ruled out; fall back to the prior.
            return self.priors(target).into_boxed_slice();
        }
        let mut scores: Vec<f64> = log_post.iter().map(|&l| (l - max).exp()).collect();
        let sum: f64 = scores.iter().sum();
        for s in &mut scores {
            *s /= sum;
        }
        scores.into_boxed_slice()
    }

    /// Predicts distance-bin scores over the frontier band of a local map.
    pub fn predict_band(
        &self,
        local: &LocalMap,
        frontier: &FrontierSet,
        target: u8,
        band_width_m: f64,
    ) -> DistancePrediction {
        let size = local.map.height();
        if !self.is_trained_for(target) {
            return DistancePrediction::unknown(target, local.origin, size, self.n_bins);
        }
        let observed = local.map.categories_present();
        if observed.is_empty() {
            return DistancePrediction::unknown(target, local.origin, size, self.n_bins);
        }
        let local_frontier = frontier.translate(Cell::new(-local.origin.row, -local.origin.col));
        let mask = frontier_band_mask(&local.map, &local_frontier, band_width_m);
        let features = category_distances(&local.map, &mask, &observed);
        let mut scores = Vec::new();
        for cell in mask.cells() {
            if !mask[cell] {
                continue;
            }
            let cell_features: Vec<(u8, f64)> = observed
                .iter()
                .zip(&features)
                .map(|(&c, d)| (c, d[cell]))
                .collect();
            scores.push((cell, self.posterior(target, &cell_features)));
        }
        DistancePrediction::from_scores(target, local.origin, size, self.n_bins, scores)
    }

    pub fn save(&self, path: &Path) -> Result<(), PredictorError> {
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(MODEL_MAGIC)?;
        out.write_all(&MODEL_VERSION.to_le_bytes())?;
        out.write_all(&[self.n_targets, self.n_categories, self.n_buckets, self.n_bins])?;
        out.write_all(&self.alpha.to_le_bytes())?;
        out.write_all(&(self.bucket_edges_m.len() as u32).to_le_bytes())?;
        for &edge in &self.bucket_edges_m {
            out.write_all(&edge.to_le_bytes())?;
        }
        for &w in &self.bin_weights {
            out.write_all(&w.to_le_bytes())?;
        }
        for &c in &self.prior_counts {
            out.write_all(&c.to_le_bytes())?;
        }
        for &c in &self.counts {
            out.write_all(&c.to_le_bytes())?;
        }
        out.write_all(&(self.train_scene_ids.len() as u32).to_le_bytes())?;
        for id in &self.train_scene_ids {
            let bytes = id.as_bytes();
            out.write_all(&(bytes.len() as u16).to_le_bytes())?;
            out.write_all(bytes)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<RelationModel, PredictorError> {
        let mut input = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != MODEL_MAGIC {
            return Err(PredictorError::Corrupt("bad magic".into()));
        }
        let version = read_u32(&mut input)?;
        if version != MODEL_VERSION {
            return Err(PredictorError::Corrupt(format!(
                "unsupported version {version}"
            )));
        }
        let mut dims = [0u8; 4];
        input.read_exact(&mut dims)?;
        let [n_targets, n_categories, n_buckets, n_bins] = dims;
        if n_buckets == 0 || n_bins == 0 {
            return Err(PredictorError::Corrupt("zero-sized model".into()));
        }
        let alpha = read_f64(&mut input)?;
        let n_edges = read_u32(&mut input)? as usize;
        if n_edges != n_buckets as usize - 1 {
            return Err(PredictorError::Corrupt("edge count mismatch".into()));
        }
        let mut bucket_edges_m = Vec::with_capacity(n_edges);
        for _ in 0..n_edges {
            bucket_edges_m.push(read_f64(&mut input)?);
        }
        let mut bin_weights = Vec::with_capacity(n_bins as usize);
        for _ in 0..n_bins {
            bin_weights.push(read_u64(&mut input)?);
        }
        let n_priors = n_targets as usize * n_bins as usize;
        let mut prior_counts = Vec::with_capacity(n_priors);
        for _ in 0..n_priors {
            prior_counts.push(read_u64(&mut input)?);
        }
        let n_counts =
            n_targets as usize * n_categories as usize * n_buckets as usize * n_bins as usize;
        let mut counts = Vec::with_capacity(n_counts);
        for _ in 0..n_counts {
            counts.push(read_u64(&mut input)?);
        }
        let n_ids = read_u32(&mut input)? as usize;
        let mut train_scene_ids = BTreeSet::new();
        for _ in 0..n_ids {
            let mut len = [0u8; 2];
            input.read_exact(&mut len)?;
            let mut bytes = vec![0u8; u16::from_le_bytes(len) as usize];
            input.read_exact(&mut bytes)?;
            train_scene_ids.insert(
                String::from_utf8(bytes)
                    .map_err(|_| PredictorError::Corrupt("scene id not utf-8".into()))?,
            );
        }
        Ok(RelationModel {
            n_targets,
            n_categories,
            n_buckets,
            n_bins,
            alpha,
            bucket_edges_m,
            bin_weights,
            prior_counts,
            counts,
            train_scene_ids,
        })
    }
}

/// Geodesic distance in meters from the nearest cell of each observed
/// category, computed over known-free cells united with the band mask so
/// features exist on unexplored band cells too.
fn category_distances(
    map: &crate::sensing::SemanticGrid,
    mask: &Grid<bool>,
    observed: &[u8],
) -> Vec<Grid<f64>> {
    let mut domain = map.known_free_grid();
    for cell in domain.cells() {
        if mask[cell] && !map.obstacle(cell) {
            domain[cell] = true;
        }
    }
    observed
        .iter()
        .map(|&c| {
            let sources = map.category_cells(c);
            geodesic_field(&domain, sources, map.cell_size_m())
                .expect("observed categories have at least one cell")
                .to_grid_m()
        })
        .collect()
}

/// Trains a model by folding every sample into the count tensors. Integer
/// counts make the result independent of sample order.
pub fn train_relation_model(
    samples: impl IntoIterator<Item = TrainingSample>,
    n_targets: u8,
    n_categories: u8,
    partition: &Partition,
    settings: &TrainSettings,
) -> Result<RelationModel, PredictorError> {
    let mut model = RelationModel::new(n_targets, n_categories, partition, settings)?;
    let mut any = false;
    for sample in samples {
        model.ingest(&sample);
        any = true;
    }
    if !any {
        return Err(PredictorError::EmptySamples);
    }
    Ok(model)
}

/// Online adapter running the learned model inside an episode.
pub struct RelationPredictor {
    pub model: RelationModel,
    pub band_width_m: f64,
}

impl DistancePredictor for RelationPredictor {
    fn name(&self) -> String {
        "learned".into()
    }

    fn predict(
        &self,
        local: &LocalMap,
        frontier: &FrontierSet,
        target: u8,
        _rng: &mut ChaCha8Rng,
    ) -> DistancePrediction {
        self.model.predict_band(local, frontier, target, self.band_width_m)
    }
}

fn read_u32(r: &mut impl Read) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> std::io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::SemanticGrid;

    fn default_partition() -> Partition {
        Partition::default_partition()
    }

    /// One labeled band cell at (2,2) with bin `gt`, one category-0 object
    /// at distance `object_offset` cells, everything explored and free.
    fn sample_with(gt: u8, object_offset: i32) -> TrainingSample {
        let size = 64;
        let mut map = SemanticGrid::new(size, size, 4, 0.05);
        for r in 0..size as i32 {
            for c in 0..size as i32 {
                map.set_explored(Cell::new(r, c));
            }
        }
        map.set_category(Cell::new(2, 2 + object_offset), 0);
        let mut gt_bins = Grid::filled(size, size, BIN_UNKNOWN);
        gt_bins.set(Cell::new(2, 2), gt);
        let mut mask = Grid::filled(size, size, false);
        mask.set(Cell::new(2, 2), true);
        TrainingSample {
            scene_id: format!("scene-{gt}-{object_offset}"),
            target: 0,
            local: LocalMap {
                map,
                origin: Cell::new(0, 0),
            },
            gt_bins,
            mask,
        }
    }

    #[test]
    fn single_sample_counts_carry_the_bin_weight() {
        let mut model = RelationModel::new(
            2,
            4,
            &default_partition(),
            &TrainSettings::default(),
        )
        .unwrap();
        model.ingest(&sample_with(0, 3));
        // gt bin 0 has weight 5; the object sits 3 cells = 0.15 m away,
        // bucket 0.
        assert_eq!(model.prior_counts[0], 5);
        let idx = model.count_idx(0, 0, 0, 0);
        assert_eq!(model.counts[idx], 5);
        assert!(model.is_trained_for(0));
        assert!(!model.is_trained_for(1));
        assert_eq!(model.train_scene_ids().count(), 1);
    }

    #[test]
    fn posterior_matches_hand_computation() {
        // Two training samples: bin 0 always sees the object in bucket 0,
        // bin 4 in bucket 2 (the object 50 cells = 2.5 m away).
        let near = sample_with(0, 3);
        let far = {
            let size = 64;
            let mut map = SemanticGrid::new(size, size, 4, 0.05);
            for r in 0..size as i32 {
                for c in 0..size as i32 {
                    map.set_explored(Cell::new(r, c));
                }
            }
            map.set_category(Cell::new(2, 52), 0);
            let mut gt_bins = Grid::filled(size, size, BIN_UNKNOWN);
            gt_bins.set(Cell::new(2, 2), 4);
            let mut mask = Grid::filled(size, size, false);
            mask.set(Cell::new(2, 2), true);
            TrainingSample {
                scene_id: "far".into(),
                target: 0,
                local: LocalMap {
                    map,
                    origin: Cell::new(0, 0),
                },
                gt_bins,
                mask,
            }
        };
        let settings = TrainSettings {
            alpha: 1.0,
            ..TrainSettings::default()
        };
        let model =
            train_relation_model([near, far], 2, 4, &default_partition(), &settings).unwrap();

        // Hand computation. Priors: counts (5,0,0,0,1), alpha 1, total 6:
        // p = (6/11, 1/11, 1/11, 1/11, 2/11).
        let priors = model.priors(0);
        assert!((priors[0] - 6.0 / 11.0).abs() < 1e-12);
        assert!((priors[4] - 2.0 / 11.0).abs() < 1e-12);
        assert!((priors.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        // Feature: object in bucket 0. Count row (5,0,0,0,0), total 5,
        // denom 10: likelihoods (6/10, 1/10, 1/10, 1/10, 1/10).
        // posterior[b] proportional to prior[b] * likelihood[b].
        let post = model.posterior(0, &[(0, 0.15)]);
        let unnorm: Vec<f64> = vec![
            6.0 / 11.0 * 6.0 / 10.0,
            1.0 / 11.0 * 1.0 / 10.0,
            1.0 / 11.0 * 1.0 / 10.0,
            1.0 / 11.0 * 1.0 / 10.0,
            2.0 / 11.0 * 1.0 / 10.0,
        ];
        let total: f64 = unnorm.iter().sum();
        for (b, expected) in unnorm.iter().enumerate() {
            assert!(
                (post[b] - expected / total).abs() < 1e-9,
                "bin {b}: {} vs {}",
                post[b],
                expected / total
            );
        }
        // Object far away (bucket 2): the far sample dominates.
        let post_far = model.posterior(0, &[(0, 2.5)]);
        assert!(post_far[4] > post_far[1]);
    }

    #[test]
    fn training_is_order_independent() {
        let samples: Vec<TrainingSample> = (0..6)
            .map(|i| sample_with((i % 5) as u8, 2 + i as i32 * 7))
            .collect();
        let mut reversed = samples.clone();
        reversed.reverse();
        let settings = TrainSettings::default();
        let p = default_partition();
        let a = train_relation_model(samples, 2, 4, &p, &settings).unwrap();
        let b = train_relation_model(reversed, 2, 4, &p, &settings).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn doubling_the_stream_doubles_counts_but_keeps_the_posterior() {
        let samples: Vec<TrainingSample> =
            (0..4).map(|i| sample_with((i % 5) as u8, 3 + i as i32 * 5)).collect();
        let doubled: Vec<TrainingSample> = samples
            .iter()
            .chain(samples.iter())
            .cloned()
            .collect();
        let settings = TrainSettings {
            alpha: 0.0,
            ..TrainSettings::default()
        };
        let p = default_partition();
        let a = train_relation_model(samples, 2, 4, &p, &settings).unwrap();
        let b = train_relation_model(doubled, 2, 4, &p, &settings).unwrap();
        assert_eq!(b.prior_counts[0], 2 * a.prior_counts[0]);
        // With alpha 0 the likelihood ratios are scale-free.
        let pa = a.posterior(0, &[(0, 0.2)]);
        let pb = b.posterior(0, &[(0, 0.2)]);
        for (x, y) in pa.iter().zip(pb.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn untrained_target_predicts_unknown() {
        let model = RelationModel::new(
            3,
            4,
            &default_partition(),
            &TrainSettings::default(),
        )
        .unwrap();
        let map = SemanticGrid::new(8, 8, 4, 0.05);
        let local = LocalMap {
            map,
            origin: Cell::new(0, 0),
        };
        let frontier = FrontierSet {
            cells: vec![Cell::new(4, 4)],
            door_sector: None,
        };
        let pred = model.predict_band(&local, &frontier, 1, 1.0);
        assert_eq!(pred.defined_count(), 0);
        assert!(pred.bins.data().iter().all(|&b| b == BIN_UNKNOWN));
    }

    #[test]
    fn empty_window_predicts_unknown_even_when_trained() {
        let mut model = RelationModel::new(
            2,
            4,
            &default_partition(),
            &TrainSettings::default(),
        )
        .unwrap();
        model.ingest(&sample_with(0, 3));
        // A window with no semantic observations has no features to reason
        // from.
        let mut map = SemanticGrid::new(8, 8, 4, 0.05);
        for r in 0..8 {
            for c in 0..8 {
                map.set_explored(Cell::new(r, c));
            }
        }
        let local = LocalMap {
            map,
            origin: Cell::new(0, 0),
        };
        let frontier = FrontierSet {
            cells: vec![Cell::new(4, 4)],
            door_sector: None,
        };
        let pred = model.predict_band(&local, &frontier, 0, 1.0);
        assert_eq!(pred.defined_count(), 0);
    }

    #[test]
    fn prediction_is_translation_invariant() {
        let mut model = RelationModel::new(
            2,
            4,
            &default_partition(),
            &TrainSettings::default(),
        )
        .unwrap();
        model.ingest(&sample_with(0, 3));
        model.ingest(&sample_with(2, 9));

        let build = |origin: Cell| {
            let size = 16;
            let mut map = SemanticGrid::new(size, size, 4, 0.05);
            for r in 0..10 {
                for c in 0..size as i32 {
                    map.set_explored(Cell::new(r, c));
                }
            }
            map.set_category(Cell::new(5, 5), 0);
            let local = LocalMap { map, origin };
            let frontier = FrontierSet {
                cells: vec![Cell::new(9 + origin.row, 8 + origin.col)],
                door_sector: None,
            };
            model.predict_band(&local, &frontier, 0, 0.5)
        };
        let a = build(Cell::new(0, 0));
        let b = build(Cell::new(100, -40));
        assert_eq!(a.bins, b.bins);
        assert_eq!(a.defined_count(), b.defined_count());
        for ((ca, sa), (cb, sb)) in a.scored_cells().iter().zip(b.scored_cells()) {
            assert_eq!(ca, cb);
            assert_eq!(sa, sb);
        }
    }

    #[test]
    fn model_file_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        let samples: Vec<TrainingSample> =
            (0..5).map(|i| sample_with((i % 5) as u8, 2 + i as i32 * 6)).collect();
        let model = train_relation_model(
            samples,
            2,
            4,
            &default_partition(),
            &TrainSettings::default(),
        )
        .unwrap();
        model.save(&path).unwrap();
        let loaded = RelationModel::load(&path).unwrap();
        assert_eq!(model, loaded);

        let path2 = dir.path().join("model2.bin");
        loaded.save(&path2).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn corrupt_model_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        std::fs::write(&path, b"junk").unwrap();
        assert!(matches!(
            RelationModel::load(&path),
            Err(PredictorError::Corrupt(_)) | Err(PredictorError::Io(_))
        ));
    }

    #[test]
    fn weight_vector_must_match_bins() {
        let settings = TrainSettings {
            bin_weights: vec![1, 2],
            ..TrainSettings::default()
        };
        assert!(matches!(
            RelationModel::new(2, 4, &default_partition(), &settings),
            Err(PredictorError::Config(_))
        ));
    }

    #[test]
    fn zero_alpha_unseen_bucket_falls_back_to_prior() {
        let settings = TrainSettings {
            alpha: 0.0,
            ..TrainSettings::default()
        };
        let model = train_relation_model(
            vec![sample_with(0, 3)],
            2,
            4,
            &default_partition(),
            &settings,
        )
        .unwrap();
        // Bucket 3 (far feature) was never seen for category 0: the factor
        // is skipped and the posterior equals the prior.
        let post = model.posterior(0, &[(0, 6.0)]);
        let priors = model.priors(0);
        for (p, q) in post.iter().zip(priors.iter()) {
            assert!((p - q).abs() < 1e-12);
        }
    }
}
