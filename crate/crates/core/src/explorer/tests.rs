use super::*;
use crate::geometry::{sample_configuration, ColoredPoint};
use crate::perturb::two_stage_sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Two-stage sample whose mesh comes from `mesh_n`, so that dense point sets
/// rarely leave a subcell empty.
fn coarse_sample(mesh_n: f64, count: f64, keep: f64, r: &mut ChaCha8Rng) -> TwoStageSample {
    let dense = sample_configuration(count, 0.5, r).unwrap();
    let mask = bernoulli_mask(dense.len(), keep, r);
    TwoStageSample { dense, mask, k: 1.0 / keep, n: mesh_n }
}

fn windows() -> [Rect; 3] {
    [Rect::unit(), Rect::new(0.1, 0.8, 0.25, 0.7).unwrap(), Rect::new(0.3, 0.55, 0.05, 0.95).unwrap()]
}

#[test]
fn single_blue_point_crosses() {
    let mut r = rng(1);
    let dense = Configuration::from_points(
        vec![
            ColoredPoint { location: Point::new(0.3, 0.3), color: Color::Blue },
            ColoredPoint { location: Point::new(0.7, 0.6), color: Color::Red },
        ],
        100.0,
        0.5,
    );
    let ts = TwoStageSample { dense, mask: vec![true, false], k: 2.0, n: 100.0 };
    for _ in 0..20 {
        let t = run_algorithm(&ts, &Rect::unit(), &mut r).unwrap();
        assert!(t.output);
    }
}

#[test]
fn empty_mask_reveals_everything() {
    let mut r = rng(2);
    let ts = two_stage_sample(200.0, 4.0, 0.5, &mut r).unwrap();
    let ts = TwoStageSample { mask: vec![false; ts.dense.len()], ..ts };
    let t = run_algorithm(&ts, &Rect::unit(), &mut r).unwrap();
    assert!(t.full_reveal);
    assert!(!t.output);
    assert_eq!(t.queried.len(), ts.dense.len());
}

#[test]
fn empty_dense_is_an_error() {
    let ts = TwoStageSample { dense: Configuration::empty(10.0, 0.5), mask: vec![], k: 2.0, n: 10.0 };
    assert_eq!(run_algorithm_at(&ts, &Rect::unit(), 0.5).unwrap_err(), Error::EmptyConfiguration);
}

#[test]
fn presence_output_matches_ground_truth() {
    let mut r = rng(3);
    let mut explored_runs = 0;
    for (mesh_n, count, keep) in [(16.0, 600.0, 0.5), (81.0, 1500.0, 0.5), (256.0, 4000.0, 0.5), (500.0, 2000.0, 0.25)] {
        for w in windows() {
            for _ in 0..12 {
                let ts = coarse_sample(mesh_n, count, keep, &mut r);
                let t = run_algorithm(&ts, &w, &mut r).unwrap();
                assert_eq!(t.output, has_blue_horizontal_crossing(&ts.masked(), &w));
                explored_runs += (!t.full_reveal) as usize;
            }
        }
    }
    assert!(explored_runs > 60, "{explored_runs}");
}

#[test]
fn presence_trace_invariants() {
    let mut r = rng(4);
    for w in windows() {
        for _ in 0..15 {
            let ts = coarse_sample(81.0, 1500.0, 0.5, &mut r);
            let t = run_algorithm(&ts, &w, &mut r).unwrap();
            let third = w.width() / 3.0;
            assert!(w.a + third <= t.x0 && t.x0 <= w.a + 2.0 * third);
            assert!(t.safe_cells.iter().all(|c| t.explored_cells.contains(c)));
            if !t.full_reveal {
                for &i in &t.queried {
                    let c = t.grid.cell_of(ts.dense.points[i as usize].location) as u32;
                    assert!(t.explored_cells.contains(&c));
                }
                for s in &t.safe_cells {
                    assert!(t.grid.neighbors(*s as usize).all(|n| t.explored_cells.contains(&(n as u32))));
                }
            }
        }
    }
}

#[test]
fn presence_unqueried_bits_are_irrelevant() {
    let mut r = rng(5);
    let mut checked = 0;
    for w in windows() {
        for _ in 0..15 {
            let ts = coarse_sample(1296.0, 8000.0, 0.5, &mut r);
            let t = run_algorithm(&ts, &w, &mut r).unwrap();
            if t.full_reveal || t.queried.len() == ts.dense.len() {
                continue;
            }
            let mut flipped = ts.mask.clone();
            let mut q = vec![false; flipped.len()];
            for &i in &t.queried {
                q[i as usize] = true;
            }
            for (b, &seen) in flipped.iter_mut().zip(&q) {
                if !seen {
                    *b = !*b;
                }
            }
            let ts2 = TwoStageSample { mask: flipped, ..ts.clone() };
            let t2 = run_algorithm_at(&ts2, &w, t.x0).unwrap();
            assert_eq!(t2.output, t.output);
            assert_eq!(t2.queried, t.queried);
            assert_eq!(t2.safe_cells, t.safe_cells);
            checked += 1;
        }
    }
    assert!(checked > 10);
}

#[test]
fn line_is_uniform_on_middle_third() {
    let mut r = rng(6);
    let w = Rect::new(0.2, 0.8, 0.0, 1.0).unwrap();
    let mut u: Vec<f64> = (0..2000).map(|_| (draw_x0(&w, &mut r) - 0.4) / 0.2).collect();
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    let d = u
        .iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max);
    // asymptotic Kolmogorov quantile at level 0.01
    assert!(d * n.sqrt() < 1.6276, "{d}");
}

#[test]
fn color_variant_trivial_colorings() {
    let mut r = rng(7);
    let c = sample_configuration(300.0, 0.5, &mut r).unwrap();
    let e = ColorExplorer::new(&c, &Rect::unit()).unwrap();
    assert!(e.run(&vec![Color::Blue; c.len()], 0.5).output);
    assert!(!e.run(&vec![Color::Red; c.len()], 0.5).output);
}

#[test]
fn color_variant_matches_ground_truth_and_is_sound() {
    let mut r = rng(8);
    for n in [20.0, 150.0, 500.0] {
        for w in windows() {
            for _ in 0..10 {
                let c = sample_configuration(n, 0.5, &mut r).unwrap();
                if c.is_empty() {
                    continue;
                }
                let e = ColorExplorer::new(&c, &w).unwrap();
                let x0 = draw_x0(&w, &mut r);
                let t = e.run(&c.colors(), x0);
                assert_eq!(t.output, has_blue_horizontal_crossing(&c, &w));
                let mut flipped = c.colors();
                let mut q = vec![false; c.len()];
                for &i in &t.queried {
                    q[i as usize] = true;
                }
                for (col, &seen) in flipped.iter_mut().zip(&q) {
                    if !seen {
                        *col = col.flipped();
                    }
                }
                let t2 = e.run(&flipped, x0);
                assert_eq!(t2.output, t.output);
                assert_eq!(t2.queried, t.queried);
            }
        }
    }
}

#[test]
fn revealment_edge_cases() {
    let mut r = rng(9);
    let ts = coarse_sample(81.0, 1500.0, 0.5, &mut r);
    let one = estimate_revealment(&ts, &Rect::unit(), 1, &mut r).unwrap();
    assert!(one.frequencies.iter().all(|&f| f == 0.0 || f == 1.0));
    let single = Configuration::from_points(
        vec![ColoredPoint { location: Point::new(0.9, 0.1), color: Color::Blue }],
        1.0,
        0.5,
    );
    let ts = TwoStageSample { dense: single, mask: vec![true], k: 2.0, n: 1.0 };
    let est = estimate_revealment(&ts, &Rect::unit(), 50, &mut r).unwrap();
    assert_eq!(est.max, 1.0);
    assert!(estimate_revealment(&ts, &Rect::unit(), 0, &mut r).is_err());
}

#[test]
fn trace_json_round_trip() {
    let mut r = rng(10);
    let ts = coarse_sample(16.0, 300.0, 0.5, &mut r);
    let t = run_algorithm(&ts, &Rect::unit(), &mut r).unwrap();
    assert_eq!(ExplorationTrace::from_json(&t.to_json()).unwrap(), t);
    assert!(ExplorationTrace::from_json("{").is_err());
}
