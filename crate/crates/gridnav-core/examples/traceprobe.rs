use gridnav_core::distance::build_gt_field;
use gridnav_core::eval::{derive_seed, run_episode_observed, RunParams};
use gridnav_core::grid::Cell;
use gridnav_core::predictor::OraclePredictor;
use gridnav_core::scene::{
    generate_scene, sample_episode, EpisodeConfig, GeneratorConfig,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let scene_seed: u64 = args[1].parse().unwrap();
    let episode_id: u64 = args[2].parse().unwrap();
    let target: u8 = args[3].parse().unwrap();

    let config = GeneratorConfig {
        width: 128,
        height: 128,
        rooms: [2, 4],
        min_room_m: 1.4,
        ..GeneratorConfig::default()
    };
    let scene = generate_scene(&config, scene_seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(70, episode_id));
    let spec = [2.0, 1.0, 0.5]
        .iter()
        .find_map(|&margin| {
            sample_episode(
                &scene,
                &format!("scene-{scene_seed}"),
                episode_id,
                target,
                &EpisodeConfig {
                    start_margin_m: margin,
                    ..EpisodeConfig::default()
                },
                &mut rng,
            )
            .ok()
        })
        .unwrap();
    let params = RunParams {
        local_size: 128,
        ..RunParams::default()
    };
    let oracle = OraclePredictor::for_scene(&scene, 6, &params.partition, params.band_width_m);
    let judge = build_gt_field(&scene, target, &params.partition);
    println!("start: ({:.1},{:.1})", spec.start.x, spec.start.y);
    let mut last_goal = None;
    let record = run_episode_observed(
        &scene,
        &spec,
        gridnav_core::policy::Strategy::ClosestFirst,
        Some(&oracle),
        &judge,
        &params,
        derive_seed(70, spec.episode_id),
        &mut |ev| {
            let g = ev.goal.map(|g| (g.cell.row, g.cell.col, g.kind));
            if g != last_goal || ev.step % 50 == 0 {
                println!(
                    "step={:3} cell=({:3},{:3}) act={:?} goal={:?}",
                    ev.step,
                    ev.pose.cell().row,
                    ev.pose.cell().col,
                    ev.action,
                    g
                );
                last_goal = g;
            }
            if ev.step == 480 {
                let agent = ev.pose.cell();
                let tcells: std::collections::HashSet<Cell> =
                    scene.category_cells(target).into_iter().collect();
                println!("known map ('#'=obstacle, ' '=explored free, '.'=unknown, T/t=target expl/unexpl, A=agent):");
                for r in 0..128 {
                    let mut line = format!("{r:3} ");
                    for c in 0..128 {
                        let cell = Cell::new(r, c);
                        let ch = if cell == agent {
                            'A'
                        } else if tcells.contains(&cell) {
                            if ev.map.explored(cell) { 'T' } else { 't' }
                        } else if ev.map.obstacle(cell) {
                            '#'
                        } else if ev.map.explored(cell) {
                            ' '
                        } else {
                            '.'
                        };
                        line.push(ch);
                    }
                    println!("{line}");
                }
            }
            true
        },
    );
    println!(
        "termination={:?} steps={} collisions={} final_d={:.2}",
        record.termination, record.steps_used, record.collisions, record.final_distance_m
    );
}
