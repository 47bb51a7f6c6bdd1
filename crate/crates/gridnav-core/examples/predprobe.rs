//! Offline sweep of relation-model hyperparameters: trains each variant on
//! one shared sample set and scores per-cell accuracy plus how well the
//! closest-first argmin over frontier cells steers toward the target.

use gridnav_core::distance::{Partition, TrainingSample, BIN_UNKNOWN};
use gridnav_core::eval::{collect_training_samples, CollectConfig, RunParams};
use gridnav_core::frontier::{extract_frontier, Adjacency};
use gridnav_core::policy::Strategy;
use gridnav_core::predictor::{
    evaluate_predictor, train_relation_model, RelationPredictor, SamplePredictor, TrainSettings,
};
use gridnav_core::scene::{generate_scene, GeneratorConfig, Scene};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn generate_scenes(config: &GeneratorConfig, n: usize, seed0: u64) -> Vec<(String, Scene)> {
    let mut scenes = Vec::new();
    let mut seed = seed0;
    while scenes.len() < n {
        if let Ok(scene) = generate_scene(config, seed) {
            scenes.push((format!("scene-{seed}"), scene));
        }
        seed += 1;
    }
    scenes
}

struct Steering {
    pick_rep_sum: f64,
    random_rep_sum: f64,
    best_rep_sum: f64,
    n: usize,
    uninformative: usize,
    pick_beats_random: usize,
    samples: usize,
}

fn steering(
    model: &gridnav_core::predictor::RelationModel,
    band_width_m: f64,
    partition: &Partition,
    samples: &[TrainingSample],
) -> Steering {
    let mut out = Steering {
        pick_rep_sum: 0.0,
        random_rep_sum: 0.0,
        best_rep_sum: 0.0,
        n: 0,
        uninformative: 0,
        pick_beats_random: 0,
        samples: 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let last = (partition.n_bins() - 1) as u8;
    for sample in samples {
        out.samples += 1;
        let frontier_local = extract_frontier(&sample.local.map, Adjacency::Eight);
        if frontier_local.is_empty() {
            continue;
        }
        let frontier = frontier_local.translate(sample.local.origin);
        let pred = model.predict_band(&sample.local, &frontier, sample.target, band_width_m);
        let labeled: Vec<_> = frontier_local
            .cells
            .iter()
            .copied()
            .filter(|&c| sample.gt_bins[c] != BIN_UNKNOWN)
            .collect();
        if labeled.is_empty() {
            continue;
        }
        let bin_of = |c| pred.bin_at_global(sample.local.to_global(c));
        if frontier_local
            .cells
            .iter()
            .all(|&c| matches!(bin_of(c), BIN_UNKNOWN) || bin_of(c) == last)
        {
            out.uninformative += 1;
            continue;
        }
        let pick = *labeled
            .iter()
            .min_by(|&&a, &&b| {
                let va = match bin_of(a) {
                    BIN_UNKNOWN => f64::INFINITY,
                    b => partition.representative_m(b),
                };
                let vb = match bin_of(b) {
                    BIN_UNKNOWN => f64::INFINITY,
                    b => partition.representative_m(b),
                };
                va.partial_cmp(&vb).unwrap()
            })
            .unwrap();
        let random = labeled[rng.random_range(0..labeled.len())];
        let best = labeled
            .iter()
            .map(|&c| sample.gt_bins[c])
            .min()
            .unwrap();
        let gt_rep = |c| partition.representative_m(sample.gt_bins[c]);
        out.pick_rep_sum += gt_rep(pick);
        out.random_rep_sum += gt_rep(random);
        out.best_rep_sum += partition.representative_m(best);
        if sample.gt_bins[pick] <= sample.gt_bins[random] {
            out.pick_beats_random += 1;
        }
        out.n += 1;
    }
    out
}

fn main() {
    let config = GeneratorConfig {
        width: 128,
        height: 128,
        rooms: [2, 4],
        min_room_m: 1.4,
        ..GeneratorConfig::default()
    };
    let args: Vec<String> = std::env::args().collect();
    let train_count: usize = args.get(1).map_or(800, |s| s.parse().unwrap());
    let test_count: usize = args.get(2).map_or(250, |s| s.parse().unwrap());
    let policy = match args.get(3).map(String::as_str) {
        Some("f") => Strategy::FrontierExploration,
        _ => Strategy::RandomExploration,
    };

    let train_scenes = generate_scenes(&config, 40, 8000);
    let test_scenes = generate_scenes(&config, 10, 9000);
    let params = RunParams {
        local_size: 128,
        ..RunParams::default()
    };
    let partition = params.partition.clone();

    let t0 = std::time::Instant::now();
    let collect = CollectConfig {
        count: train_count,
        interval: 30,
        rollout_steps: 240,
        policy,
        n_targets: 6,
    };
    let mut train_samples = Vec::new();
    collect_training_samples(&train_scenes, &params, &collect, 81, &mut |s| {
        train_samples.push(s)
    })
    .unwrap();
    let test_collect = CollectConfig {
        count: test_count,
        ..collect.clone()
    };
    let mut test_samples = Vec::new();
    collect_training_samples(&test_scenes, &params, &test_collect, 82, &mut |s| {
        test_samples.push(s)
    })
    .unwrap();
    println!(
        "collected {} train / {} test samples in {:.0} s",
        train_samples.len(),
        test_samples.len(),
        t0.elapsed().as_secs_f64()
    );

    let variants: Vec<(&str, TrainSettings)> = vec![
        ("default", TrainSettings::default()),
        (
            "fine-buckets",
            TrainSettings {
                bucket_edges_m: Some(vec![0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0]),
                ..TrainSettings::default()
            },
        ),
        (
            "fine+alpha.25",
            TrainSettings {
                bucket_edges_m: Some(vec![0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0]),
                alpha: 0.25,
                ..TrainSettings::default()
            },
        ),
        (
            "near-buckets",
            TrainSettings {
                bucket_edges_m: Some(vec![0.5, 1.0, 2.0, 4.0, 8.0]),
                ..TrainSettings::default()
            },
        ),
        (
            "alpha.25",
            TrainSettings {
                alpha: 0.25,
                ..TrainSettings::default()
            },
        ),
    ];

    for (name, settings) in variants {
        let model =
            train_relation_model(train_samples.iter().cloned(), 6, 12, &partition, &settings)
                .unwrap();
        let learned = RelationPredictor {
            model: model.clone(),
            band_width_m: params.band_width_m,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        let report = evaluate_predictor(
            &learned,
            test_samples.iter().cloned(),
            partition.n_bins(),
            &mut rng,
        )
        .unwrap();
        let s = steering(&model, params.band_width_m, &partition, &test_samples);
        println!(
            "{name:>14}: macroP={:.3} macroR={:.3} | steer pick={:.2} rand={:.2} best={:.2} beats={:.0}% uninf={:.0}% (n={})",
            report.macro_precision(),
            report.macro_recall(),
            s.pick_rep_sum / s.n.max(1) as f64,
            s.random_rep_sum / s.n.max(1) as f64,
            s.best_rep_sum / s.n.max(1) as f64,
            100.0 * s.pick_beats_random as f64 / s.n.max(1) as f64,
            100.0 * s.uninformative as f64 / s.samples.max(1) as f64,
            s.n
        );
        let _ = SamplePredictor::name(&learned);
    }
}
