use gridnav_core::distance::geodesic_field;
use gridnav_core::grid::{Cell, Grid};
use gridnav_core::planner::inflate_obstacles;
use gridnav_core::scene::{generate_scene, GeneratorConfig};

fn main() {
    let config = GeneratorConfig {
        width: 128,
        height: 128,
        rooms: [2, 4],
        min_room_m: 1.4,
        ..GeneratorConfig::default()
    };
    for seed in [7000u64, 7001, 7002, 7003, 7004, 7005, 7006, 7007, 7008, 7009, 7010, 7011] {
        let Ok(scene) = generate_scene(&config, seed) else {
            println!("seed {seed}: generation failed");
            continue;
        };
        let h = scene.height;
        let w = scene.width;
        let mut obstacle: Grid<bool> = Grid::filled(h, w, false);
        let mut truth_free: Grid<bool> = Grid::filled(h, w, true);
        for r in 0..h as i32 {
            for c in 0..w as i32 {
                let cell = Cell::new(r, c);
                if !scene.is_traversable(cell) {
                    obstacle[cell] = true;
                    truth_free[cell] = false;
                }
            }
        }
        let inflated = inflate_obstacles(&obstacle, 1);
        let mut infl_free: Grid<bool> = Grid::filled(h, w, true);
        for r in 0..h as i32 {
            for c in 0..w as i32 {
                let cell = Cell::new(r, c);
                if inflated[cell] {
                    infl_free[cell] = false;
                }
            }
        }
        let total_free = (0..h as i32)
            .flat_map(|r| (0..w as i32).map(move |c| Cell::new(r, c)))
            .filter(|&cell| infl_free[cell])
            .count();
        let mut report = format!("seed {seed} (inflated-free {total_free}):");
        for target in 0..6u8 {
            let cells = scene.category_cells(target);
            if cells.is_empty() {
                report.push_str(&format!(" t{target}=absent"));
                continue;
            }
            let truth_field = geodesic_field(&truth_free, &cells, scene.cell_size_m).unwrap();
            let sources: Vec<Cell> = (0..h as i32)
                .flat_map(|r| (0..w as i32).map(move |c| Cell::new(r, c)))
                .filter(|&cell| infl_free[cell] && truth_field.distance_m(cell) <= 1.0)
                .collect();
            if sources.is_empty() {
                report.push_str(&format!(" t{target}=NO_STOP"));
                continue;
            }
            let reach = geodesic_field(&infl_free, &sources, scene.cell_size_m).unwrap();
            let reached = (0..h as i32)
                .flat_map(|r| (0..w as i32).map(move |c| Cell::new(r, c)))
                .filter(|&cell| infl_free[cell] && reach.distance_m(cell).is_finite())
                .count();
            report.push_str(&format!(" t{target}={reached}/{total_free}"));
        }
        println!("{report}");
    }
}
