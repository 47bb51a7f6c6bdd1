//! Closed-loop probe: learned-CF vs random exploration on held-out scenes,
//! with the goal commit window as a command-line knob.

use gridnav_core::eval::{
    collect_training_samples, derive_seed, run_benchmark, ArmSpec, BenchmarkRequest,
    CollectConfig, PredictorSpec, RunParams,
};
use gridnav_core::policy::Strategy;
use gridnav_core::predictor::{train_relation_model, TrainSettings};
use gridnav_core::scene::{
    generate_scene, sample_episode, EpisodeConfig, EpisodeSpec, GeneratorConfig, Scene,
};
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

fn present_targets(scene: &Scene, n_targets: u8) -> Vec<u8> {
    (0..n_targets)
        .filter(|&t| !scene.category_cells(t).is_empty())
        .collect()
}

fn build_episodes(
    scenes: &[(String, Scene)],
    total: usize,
    master: u64,
    n_targets: u8,
) -> Vec<EpisodeSpec> {
    let mut episodes = Vec::new();
    let mut id = 0u64;
    'outer: loop {
        for (scene_id, scene) in scenes {
            if episodes.len() >= total {
                break 'outer;
            }
            let targets = present_targets(scene, n_targets);
            let target = targets[(id as usize / scenes.len()) % targets.len()];
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master, id));
            let spec = [2.0, 1.0, 0.5].iter().find_map(|&margin| {
                sample_episode(
                    scene,
                    scene_id,
                    id,
                    target,
                    &EpisodeConfig {
                        start_margin_m: margin,
                        ..EpisodeConfig::default()
                    },
                    &mut rng,
                )
                .ok()
            });
            id += 1;
            if let Some(spec) = spec {
                episodes.push(spec);
            }
        }
    }
    episodes
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let episodes_n: usize = args.get(1).map_or(200, |s| s.parse().unwrap());
    let goal_period: usize = args.get(2).map_or(5, |s| s.parse().unwrap());

    let config = GeneratorConfig {
        width: 128,
        height: 128,
        rooms: [2, 4],
        min_room_m: 1.4,
        ..GeneratorConfig::default()
    };
    let train_scenes = generate_scenes(&config, 40, 8000);
    let test_scenes = generate_scenes(&config, 10, 9000);
    let params = RunParams {
        local_size: 128,
        goal_period,
        ..RunParams::default()
    };
    let partition = params.partition.clone();

    let collect = CollectConfig {
        count: 800,
        interval: 30,
        rollout_steps: 240,
        policy: Strategy::RandomExploration,
        n_targets: 6,
    };
    let mut train_samples = Vec::new();
    collect_training_samples(&train_scenes, &params, &collect, 81, &mut |s| {
        train_samples.push(s)
    })
    .unwrap();
    let model = train_relation_model(
        train_samples,
        6,
        12,
        &partition,
        &TrainSettings::default(),
    )
    .unwrap();

    let episodes = build_episodes(&test_scenes, episodes_n, 84, 6);
    let arms = vec![
        ArmSpec {
            policy: Strategy::ClosestFirst,
            predictor: PredictorSpec::Learned,
        },
        ArmSpec {
            policy: Strategy::RandomExploration,
            predictor: PredictorSpec::None,
        },
    ];
    let names: Vec<String> = ["chair", "couch", "plant", "bed", "toilet", "tv"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let t0 = std::time::Instant::now();
    let run = run_benchmark(&BenchmarkRequest {
        scenes: &test_scenes,
        episodes: &episodes,
        arms: &arms,
        params: &params,
        model: Some(&model),
        target_names: &names,
        master_seed: 85,
        parallel: true,
    })
    .unwrap();
    for report in &run.reports {
        println!(
            "goal_period={goal_period} {}: sr={:.3} spl={:.3} mean_steps={:.0}",
            report.policy,
            report.overall.success_rate,
            report.overall.spl,
            report.overall.mean_steps
        );
    }
    println!("{} episodes, {:.0} s", episodes.len(), t0.elapsed().as_secs_f64());
}
