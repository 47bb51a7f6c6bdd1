use gridnav_core::distance::build_gt_field;
use gridnav_core::eval::{derive_seed, run_episode, ArmSpec, PredictorSpec, RunParams, Termination};
use gridnav_core::predictor::OraclePredictor;
use gridnav_core::scene::{
    generate_scene, sample_episode, CategorySet, EpisodeConfig, EpisodeSpec, GeneratorConfig,
    Scene,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_generator(side: usize) -> GeneratorConfig {
    GeneratorConfig {
        width: side,
        height: side,
        rooms: [2, 4],
        min_room_m: 1.4,
        ..GeneratorConfig::default()
    }
}

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
    let scenes = generate_scenes(&small_generator(128), 10, 7000);
    let episodes = build_episodes(&scenes, 200, 70, 6);
    let params = RunParams {
        local_size: 128,
        ..RunParams::default()
    };
    let arm = ArmSpec {
        policy: gridnav_core::policy::Strategy::ClosestFirst,
        predictor: PredictorSpec::Oracle,
    };
    let cats = CategorySet::default();
    let t0 = std::time::Instant::now();
    let mut timeouts = Vec::new();
    let mut stopped_fail = 0;
    let mut success = 0;
    let mut total_steps = 0usize;
    for spec in &episodes {
        let (_, scene) = scenes
            .iter()
            .find(|(id, _)| *id == spec.scene_id)
            .unwrap();
        let oracle = OraclePredictor::for_scene(scene, 6, &params.partition, params.band_width_m);
        let judge = build_gt_field(scene, spec.target, &params.partition);
        let record = run_episode(
            scene,
            spec,
            arm.policy,
            Some(&oracle),
            &judge,
            &params,
            derive_seed(70, spec.episode_id),
        );
        total_steps += record.steps_used;
        match record.termination {
            Termination::Timeout => timeouts.push((
                spec.scene_id.clone(),
                spec.episode_id,
                cats.name(spec.target).to_string(),
                record.final_distance_m,
                record.collisions,
                record.oracle_success,
            )),
            Termination::StoppedFailure => stopped_fail += 1,
            Termination::StoppedSuccess => success += 1,
        }
    }
    println!(
        "success={success} stopped_fail={stopped_fail} timeout={} mean_steps={:.0} elapsed={:.0} s",
        timeouts.len(),
        total_steps as f64 / episodes.len() as f64,
        t0.elapsed().as_secs_f64()
    );
    for (scene, ep, target, fd, col, oracle_ok) in timeouts.iter().take(15) {
        println!(
            "timeout: {scene} ep={ep} target={target} final_d={fd:.2} collisions={col} passed_by={oracle_ok}"
        );
    }
}
