use rayon::ThreadPoolBuilder;
use vperc_core::estimators::{crossing_probability, noise_correlation, threshold_window, NoiseKind};
use vperc_core::explorer::{run_algorithm_at, ExplorationTrace};
use vperc_core::geometry::{crossing, has_blue_horizontal_crossing, sample_configuration, Rect, Tessellation};
use vperc_core::io::{read_config_binary, read_config_csv, write_config_binary, write_config_csv, ResultSet};
use vperc_core::perturb::two_stage_sample;
use vperc_core::seeding::replica_rng;

#[test]
fn configuration_files_preserve_the_crossing() {
    let rect = Rect::new(0.1, 0.9, 0.2, 0.7).unwrap();
    for r in 0..10 {
        let c = sample_configuration(150.0, 0.5, &mut replica_rng(31, r)).unwrap();
        let mut csv = Vec::new();
        write_config_csv(&c, &mut csv).unwrap();
        let back = read_config_csv(csv.as_slice(), c.intensity, c.blue_prob).unwrap();
        assert_eq!(back, c);
        let mut bin = Vec::new();
        write_config_binary(&c, &mut bin).unwrap();
        let back = read_config_binary(bin.as_slice()).unwrap();
        assert_eq!(crossing(&back, &rect), crossing(&c, &rect));
    }
}

#[test]
fn estimates_do_not_depend_on_pool_size() {
    let run = |threads: usize| {
        let pool = ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let mut set = ResultSet::new(17);
            set.push("crossing", &crossing_probability(200.0, 0.5, &Rect::unit(), 64, 17).unwrap());
            set.push("noise", &noise_correlation(200.0, 0.5, 0.2, &Rect::unit(), 64, NoiseKind::Position, 17).unwrap());
            let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
            let w = threshold_window(200.0, 0.25, &Rect::unit(), &grid, 64, 17).unwrap();
            (set.to_csv(), w.p_lo.to_bits(), w.p_hi.to_bits())
        })
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn traces_survive_json_and_match_the_crossing() {
    let rect = Rect::unit();
    for r in 0..5 {
        let mut rng = replica_rng(41, r);
        let ts = two_stage_sample(300.0, 3.0, 0.5, &mut rng).unwrap();
        let t = run_algorithm_at(&ts, &rect, 0.5).unwrap();
        assert_eq!(t.output, has_blue_horizontal_crossing(&ts.masked(), &rect));
        let back = ExplorationTrace::from_json(&t.to_json()).unwrap();
        assert_eq!(back, t);
        assert!(t.queried.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn cells_tile_the_square() {
    let c = sample_configuration(400.0, 0.5, &mut replica_rng(5, 0)).unwrap();
    let t = Tessellation::build(&c).unwrap();
    let total: f64 = t.cells().map(|cell| cell.area()).sum();
    assert!((total - 1.0).abs() < 1e-9, "{total}");
}
