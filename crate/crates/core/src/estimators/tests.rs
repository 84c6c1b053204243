use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::geometry::{
    has_blue_horizontal_crossing, raster_crossing_oracle, sample_configuration, sample_marked, Color, ColoredPoint,
    Configuration, Point, Rect, Tessellation,
};
use crate::seeding::replica_rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_window(r: &mut ChaCha8Rng) -> Rect {
    let a = r.random_range(0.0..0.3);
    let c = r.random_range(0.0..0.3);
    Rect::new(a, a + r.random_range(0.4..0.7), c, c + r.random_range(0.4..0.7)).unwrap()
}

#[test]
fn z95_is_the_normal_quantile() {
    use statrs::distribution::{ContinuousCDF, Normal};
    let q = Normal::new(0.0, 1.0).unwrap().inverse_cdf(0.975);
    assert!((q - Z95).abs() < 1e-9);
}

#[test]
fn estimate_from_samples() {
    let e = MCEstimate::from_samples(&[1.0, 0.0, 1.0, 0.0], 3, vec![]).unwrap();
    assert_eq!(e.mean, 0.5);
    // sample sd = sqrt(1/3), stderr = sd / 2
    assert!((e.std_error - (1.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
    assert!(MCEstimate::from_samples(&[1.0], 0, vec![]).is_err());
}

#[test]
fn noise_kind_names_round_trip() {
    for k in NoiseKind::ALL {
        assert_eq!(k.name().parse::<NoiseKind>().unwrap(), k);
    }
    assert_eq!("thin-couple".parse::<NoiseKind>().unwrap(), NoiseKind::ThinCouple);
    assert!("bogus".parse::<NoiseKind>().is_err());
}

#[test]
fn crossing_probability_extremes() {
    let r = Rect::unit();
    assert_eq!(crossing_probability(200.0, 0.0, &r, 50, 1).unwrap().mean, 0.0);
    assert_eq!(crossing_probability(200.0, 1.0, &r, 50, 1).unwrap().mean, 1.0);
    assert!(crossing_probability(200.0, 0.5, &r, 1, 1).is_err());
}

#[test]
fn crossing_probability_is_independent_of_pool_size() {
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| crossing_probability(150.0, 0.5, &Rect::unit(), 300, 42).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn crossing_probability_matches_direct_replay() {
    let est = crossing_probability(80.0, 0.4, &Rect::unit(), 200, 9).unwrap();
    let hits: usize = (0..200)
        .filter(|&r| {
            let c = sample_configuration(80.0, 0.4, &mut replica_rng(9, r)).unwrap();
            has_blue_horizontal_crossing(&c, &Rect::unit())
        })
        .count();
    assert_eq!(est.mean, hits as f64 / 200.0);
}

#[test]
fn zero_noise_gives_the_sample_variance() {
    let reps = 400;
    for kind in NoiseKind::ALL {
        let e = noise_correlation(120.0, 0.5, 0.0, &Rect::unit(), reps, kind, 5).unwrap();
        let r = reps as f64;
        // mean must equal j/R (1 − j/R) R/(R−1) for the hit count j
        let found = (0..=reps).any(|j| {
            let m = j as f64 / r;
            (m * (1.0 - m) * r / (r - 1.0) - e.mean).abs() < 1e-12
        });
        assert!(found, "{kind}: {}", e.mean);
        assert!(e.mean > 0.15, "{kind}: {}", e.mean);
    }
}

#[test]
fn full_noise_decorrelates() {
    let e = noise_correlation(100.0, 0.5, 1.0, &Rect::unit(), 2000, NoiseKind::EpsNoise, 6).unwrap();
    assert!(e.mean.abs() < 3.0 * e.std_error + 1e-3, "{} ± {}", e.mean, e.std_error);
    assert!(noise_correlation(100.0, 0.5, 1.0, &Rect::unit(), 10, NoiseKind::ThinCouple, 6).is_err());
}

#[test]
fn conditional_variance_without_thinning_is_the_variance() {
    let e = conditional_variance(150.0, 1.0, 0.5, &Rect::unit(), 600, 2, 7).unwrap();
    assert!((e.mean - 0.25).abs() < 0.02, "{}", e.mean);
    assert!(conditional_variance(150.0, 0.5, 0.5, &Rect::unit(), 10, 2, 7).is_err());
    assert!(conditional_variance(150.0, 2.0, 0.5, &Rect::unit(), 10, 1, 7).is_err());
}

#[test]
fn conditional_variance_matches_thinning_pair() {
    // Var(E[f | η_k]) equals the covariance of two independent thinnings
    let k = 2.0;
    let cv = conditional_variance(60.0, k, 0.5, &Rect::unit(), 600, 16, 8).unwrap();
    let nc = noise_correlation(60.0, 0.5, 1.0 - 1.0 / k, &Rect::unit(), 6000, NoiseKind::ThinCouple, 8).unwrap();
    let joint = (cv.std_error.powi(2) + nc.std_error.powi(2)).sqrt();
    assert!((cv.mean - nc.mean).abs() < 3.0 * joint, "{} vs {}", cv.mean, nc.mean);
    assert!(cv.mean <= 1.0 / k + 3.0 * cv.std_error);
}

#[test]
fn srs_without_noise_never_disagrees() {
    let e = srs_disagreement(150.0, 0.0, &Rect::unit(), 50, 1).unwrap();
    assert_eq!((e.mean, e.std_error), (0.0, 0.0));
}

/// Covering radius of `S` by the sites: the largest distance from a point of
/// `S` to its nearest site, maximized over corners, in-square circumcentres
/// and bisector–side intersections.
fn covering_radius(sites: &[Point]) -> f64 {
    let nearest = |q: Point| sites.iter().map(|s| s.dist(q)).fold(f64::INFINITY, f64::min);
    let inside = |q: Point| (-1e-12..=1.0 + 1e-12).contains(&q.x) && (-1e-12..=1.0 + 1e-12).contains(&q.y);
    let mut cands = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0), Point::new(1.0, 1.0)];
    let n = sites.len();
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (sites[i], sites[j]);
            // bisector: (b−a)·q = (|b|² − |a|²)/2
            let (nx, ny) = (b.x - a.x, b.y - a.y);
            let c = (b.x * b.x + b.y * b.y - a.x * a.x - a.y * a.y) / 2.0;
            for t in [0.0, 1.0] {
                if ny != 0.0 {
                    cands.push(Point::new(t, (c - nx * t) / ny));
                }
                if nx != 0.0 {
                    cands.push(Point::new((c - ny * t) / nx, t));
                }
            }
            for k in j + 1..n {
                let cc = sites[k];
                let d = 2.0 * (a.x * (b.y - cc.y) + b.x * (cc.y - a.y) + cc.x * (a.y - b.y));
                if d.abs() < 1e-15 {
                    continue;
                }
                let (a2, b2, c2) = (a.x * a.x + a.y * a.y, b.x * b.x + b.y * b.y, cc.x * cc.x + cc.y * cc.y);
                let ux = (a2 * (b.y - cc.y) + b2 * (cc.y - a.y) + c2 * (a.y - b.y)) / d;
                let uy = (a2 * (cc.x - b.x) + b2 * (a.x - cc.x) + c2 * (b.x - a.x)) / d;
                cands.push(Point::new(ux, uy));
            }
        }
    }
    cands.into_iter().filter(|&q| inside(q)).map(nearest).fold(0.0, f64::max)
}

#[test]
fn max_cell_radius_equals_covering_radius() {
    let mut r = rng(11);
    for count in [1usize, 2, 3, 5, 9, 20] {
        for _ in 0..10 {
            let sites: Vec<Point> = (0..count).map(|_| Point::new(r.random(), r.random())).collect();
            let t = Tessellation::from_sites(&sites).unwrap();
            assert!((t.max_cell_radius() - covering_radius(&sites)).abs() < 1e-9);
        }
    }
}

#[test]
fn large_cell_matches_covering_radius_replay() {
    let (n, reps, seed) = (3.0, 400, 12);
    let est = large_cell_probability(n, reps, seed).unwrap();
    let t = n.powf(-1.0 / 3.0);
    let hits = (0..reps as u64)
        .filter(|&r| {
            let (sites, _) = sample_marked(n, &mut replica_rng(seed, r)).unwrap();
            !sites.is_empty() && covering_radius(&sites) > t
        })
        .count();
    assert_eq!(est.mean, hits as f64 / reps as f64);
}

#[test]
fn large_cell_single_site_closed_form() {
    // one site: radius > 1 iff the site is outside the four corner unit disks
    let exact = 3f64.sqrt() - std::f64::consts::PI / 3.0;
    let mut r = rng(13);
    let trials = 20000;
    let hits = (0..trials)
        .filter(|_| {
            let s = [Point::new(r.random(), r.random())];
            Tessellation::from_sites(&s).unwrap().max_cell_radius() > 1.0
        })
        .count();
    let phat = hits as f64 / trials as f64;
    let sd = (exact * (1.0 - exact) / trials as f64).sqrt();
    assert!((phat - exact).abs() < 4.0 * sd, "{phat} vs {exact}");
    let e = large_cell_probability(1.0, 2000, 1).unwrap();
    assert!(e.mean > 0.0 && e.mean < 1.0);
}

#[test]
fn one_arm_geometry_and_extremes() {
    let g = OneArmGeometry::new(1e5, Point::new(0.5, 0.5)).unwrap();
    let m = 1.0 / 18.0;
    assert!((g.mesh - m).abs() < 1e-15);
    assert!((g.inner.width() - 3.0 * m).abs() < 1e-12);
    assert!((g.outer.width() - m.sqrt()).abs() < 1e-12);
    assert_eq!(g.targets.len(), 4);
    assert!(!g.degenerate());
    assert!(OneArmGeometry::new(250.0, Point::new(0.5, 0.5)).unwrap().degenerate());
    let corner = OneArmGeometry::new(1e5, Point::new(0.01, 0.01)).unwrap();
    assert_eq!(corner.targets, vec![crate::geometry::Side::Right, crate::geometry::Side::Top]);
    assert!(OneArmGeometry::new(1.0, Point::new(0.5, 0.5)).is_err());

    let c = Point::new(0.5, 0.5);
    assert_eq!(one_arm_probability(1e4, 0.0, c, 20, 1).unwrap().mean, 0.0);
    assert_eq!(one_arm_probability(1e4, 1.0, c, 20, 1).unwrap().mean, 1.0);
}

#[test]
fn one_arm_needs_a_blue_path() {
    let geo = OneArmGeometry::new(1e5, Point::new(0.5, 0.5)).unwrap();
    let mk = |pts: &[(f64, f64, Color)]| {
        Configuration::from_points(
            pts.iter().map(|&(x, y, color)| ColoredPoint { location: Point::new(x, y), color }).collect(),
            1e5,
            0.5,
        )
    };
    // a lone blue site at the centre owns the whole outer square
    assert!(geo.arm(&mk(&[(0.5, 0.5, Color::Blue)])));
    // a red ring of sites cuts the blue centre off
    let mut pts = vec![(0.5, 0.5, Color::Blue)];
    for i in 0..24 {
        let t = i as f64 * std::f64::consts::TAU / 24.0;
        pts.push((0.5 + 0.05 * t.cos(), 0.5 + 0.05 * t.sin(), Color::Red));
    }
    assert!(!geo.arm(&mk(&pts)));
}

#[test]
fn revealment_tail_extremes() {
    let r = Rect::unit();
    assert_eq!(revealment_tail(16.0, 2.0, &r, 3, 3, 1.0, 1).unwrap().mean, 0.0);
    assert_eq!(revealment_tail(16.0, 2.0, &r, 3, 3, 0.0, 1).unwrap().mean, 1.0);
    assert!(revealment_tail(16.0, 1.0, &r, 3, 3, 0.5, 1).is_err());
}

#[test]
fn table_of_a_single_point() {
    let c = random_positions(1, &mut rng(14));
    let t = exact_function_table(&c, &Rect::unit()).unwrap();
    assert_eq!(t.values(), &[false, true]);
    assert!(exact_function_table(&random_positions(21, &mut rng(14)), &Rect::unit()).is_err());
}

#[test]
fn tables_agree_with_the_raster_oracle() {
    let mut r = rng(15);
    for _ in 0..2 {
        let c = random_positions(10, &mut r);
        let w = random_window(&mut r);
        let t = exact_function_table(&c, &w).unwrap();
        assert!(t.is_monotone());
        for omega in 0..1u32 << 10 {
            let colors: Vec<Color> = (0..10).map(|k| Color::from_bit(omega >> k & 1 == 1)).collect();
            let cc = c.with_colors(&colors);
            let o = raster_crossing_oracle(&cc, &w, 64).unwrap();
            assert_eq!(o.result.blue_horizontal, t.value(omega), "omega {omega}");
        }
    }
}

#[test]
fn trivial_tables() {
    let zero = FunctionTable::constant(5, false).unwrap();
    assert!(zero.influences(0.5).iter().all(|&x| x == 0.0));
    assert_eq!(bks_statistic(&zero, 0.3), 0.0);
    let mr = check_margulis_russo(&zero, 0.5).unwrap();
    assert!(mr.holds && mr.lhs == 0.0 && mr.rhs == 0.0);

    let dict = FunctionTable::dictator(5, 2).unwrap();
    assert!((exact_influence(&dict, 2, 0.5).unwrap() - 1.0).abs() < 1e-15);
    assert_eq!(exact_influence(&dict, 0, 0.5).unwrap(), 0.0);
    assert!((bks_statistic(&dict, 0.5) - 1.0).abs() < 1e-15);
    let mr = check_margulis_russo(&dict, 0.5).unwrap();
    assert!(mr.holds && (mr.lhs - 1.0).abs() < 1e-12);
    assert!(exact_influence(&dict, 5, 0.5).is_err());

    let xor = FunctionTable::from_fn(2, |w| w.count_ones() == 1).unwrap();
    assert_eq!(check_margulis_russo(&xor, 0.5).unwrap_err(), Error::NonMonotone);
    assert_eq!(check_influence_upper_bound(&xor, 1.0, 0.5).unwrap_err(), Error::NonMonotone);
}

#[test]
fn derivative_matches_finite_differences() {
    let mut r = rng(16);
    for _ in 0..20 {
        let bits = r.random_range(1..9);
        let vals: Vec<bool> = (0..1 << bits).map(|_| r.random()).collect();
        let t = FunctionTable::new(bits, vals).unwrap();
        for p in [0.0f64, 0.2, 0.5, 0.9, 1.0] {
            let h = 1e-5;
            let (lo, hi) = ((p - h).max(0.0), (p + h).min(1.0));
            // P is a polynomial; extend it past [0, 1] through the weights
            let fd = (t.probability(hi) - t.probability(lo)) / (hi - lo);
            assert!((t.derivative(p) - fd).abs() < 1e-3 * (1.0 + fd.abs()), "{p}");
        }
    }
}

#[test]
fn margulis_russo_on_random_tessellations() {
    let mut r = rng(17);
    for _ in 0..25 {
        let c = random_positions(r.random_range(1..11), &mut r);
        let t = exact_function_table(&c, &random_window(&mut r)).unwrap();
        for p in [0.3, 0.5, 0.7] {
            let mr = check_margulis_russo(&t, p).unwrap();
            assert!(mr.holds, "{mr:?}");
        }
    }
}

#[test]
fn influence_matches_monte_carlo() {
    let mut r = rng(18);
    let c = random_positions(10, &mut r);
    let t = exact_function_table(&c, &Rect::unit()).unwrap();
    let p = 0.5;
    let trials = 4000;
    for k in 0..10 {
        let hits = (0..trials)
            .filter(|_| {
                let w: u32 = (0..10).map(|b| ((r.random::<f64>() < p) as u32) << b).sum();
                t.value(w) != t.value(w ^ 1 << k)
            })
            .count();
        let phat = hits as f64 / trials as f64;
        let exact = t.influence(k, p);
        let sd = (exact * (1.0 - exact) / trials as f64).sqrt().max(1e-3);
        assert!((phat - exact).abs() <= 3.0 * sd, "bit {k}: {phat} vs {exact}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tensor_and_pairing_correlations_agree(
        bits in 0usize..7,
        seed in any::<u64>(),
        p in 0.05f64..0.95,
        eps in 0.0f64..=1.0,
    ) {
        let mut r = rng(seed);
        let t = FunctionTable::new(bits, (0..1 << bits).map(|_| r.random()).collect()).unwrap();
        let a = t.noise_correlation(p, eps);
        let b = t.noise_correlation_pairing(p, eps).unwrap();
        prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b);
    }

    #[test]
    fn influence_bounds_hold_for_monotone_tables(seed in any::<u64>(), count in 1usize..9) {
        let mut r = rng(seed);
        let c = random_positions(count, &mut r);
        let t = exact_function_table(&c, &Rect::unit()).unwrap();
        let [cs, _] = check_influence_upper_bound(&t, 1.0, 0.5).unwrap();
        prop_assert!(cs.holds);
    }
}

#[test]
fn noise_correlation_edges() {
    let dict = FunctionTable::dictator(3, 0).unwrap();
    assert!((dict.noise_correlation(0.5, 0.0) - 0.25).abs() < 1e-15);
    assert!(dict.noise_correlation(0.5, 1.0).abs() < 1e-15);
    assert!((dict.noise_correlation(0.5, 0.5) - 0.125).abs() < 1e-15);
    let ss = check_schramm_steif(&dict, 0.5, 0.0, 1.0, 3).unwrap();
    assert!(ss.holds && ss.lhs.abs() < 1e-15);
    let ss0 = check_schramm_steif(&dict, 0.5, 0.0, 0.1, 0).unwrap();
    assert_eq!(ss0.rhs, 1.0);
}

#[test]
fn inequalities_hold_with_explorer_revealment() {
    let mut r = rng(19);
    for _ in 0..6 {
        let c = random_positions(r.random_range(2..9), &mut r);
        let w = random_window(&mut r);
        let t = exact_function_table(&c, &w).unwrap();
        let prof = query_profile(&c, &w, 0.5, 8, r.random()).unwrap();
        assert!(prof.delta.iter().all(|d| (0.0..=1.0 + 1e-12).contains(d)));
        assert!(check_osss(&t, &prof).unwrap().holds);
        for eps in [0.1, 0.3] {
            for m in 1..=10 {
                assert!(check_schramm_steif(&t, 0.5, prof.delta_max_upper(), eps, m).unwrap().holds);
            }
        }
        let [a, b] = check_influence_upper_bound(&t, prof.delta_max_upper(), 0.5).unwrap();
        assert!(a.holds && b.holds);
    }
}

#[test]
fn single_point_profile_is_tight() {
    let c = random_positions(1, &mut rng(20));
    let t = exact_function_table(&c, &Rect::unit()).unwrap();
    let prof = query_profile(&c, &Rect::unit(), 0.5, 4, 1).unwrap();
    assert_eq!(prof.delta, vec![1.0]);
    let osss = check_osss(&t, &prof).unwrap();
    assert!(osss.holds && (osss.lhs - 0.25).abs() < 1e-15 && (osss.rhs - 0.25).abs() < 1e-15);
}
