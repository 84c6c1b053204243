use petgraph::unionfind::UnionFind;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_reps, params, rect_param, MCEstimate, NoiseKind};
use crate::error::{check_nonneg, check_prob, Error, Result};
use crate::explorer::{estimate_color_revealment, estimate_revealment, mesh_of};
use crate::geometry::{
    has_blue_horizontal_crossing, sample_configuration, sample_marked, Configuration, Point, Rect, Side,
    Tessellation, WindowGraph,
};
use crate::perturb::{
    bernoulli_mask, coupled_triple, epsilon_noise, resample_colors, resample_positions, two_stage_sample,
    two_stage_unchecked,
};
use crate::seeding::map_replicas;

const AREA_TOL: f64 = 1e-20;

fn check_intensity(n: f64) -> Result<()> {
    if n.is_finite() && n > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("n must be finite and positive, got {n}")))
    }
}

fn bit(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// `P_{n,p}[f_R = 1]`.
pub fn crossing_probability(n: f64, p: f64, rect: &Rect, reps: usize, seed: u64) -> Result<MCEstimate> {
    check_nonneg("n", n)?;
    check_prob("p", p)?;
    check_reps(reps)?;
    let samples = map_replicas(seed, reps, |_, r| {
        let c = sample_configuration(n, p, r).expect("validated");
        bit(has_blue_horizontal_crossing(&c, rect))
    });
    MCEstimate::from_samples(
        &samples,
        seed,
        params(&[("n", n.to_string()), ("p", p.to_string()), ("rect", rect_param(rect))]),
    )
}

fn crossing_pair<R: Rng + ?Sized>(n: f64, p: f64, eps: f64, rect: &Rect, kind: NoiseKind, r: &mut R) -> (bool, bool) {
    match kind {
        NoiseKind::EpsNoise => {
            let c = sample_configuration(n, p, r).expect("validated");
            let c2 = epsilon_noise(&c, eps, n, p, r).expect("validated");
            (has_blue_horizontal_crossing(&c, rect), has_blue_horizontal_crossing(&c2, rect))
        }
        NoiseKind::Color => {
            let c = sample_configuration(n, p, r).expect("validated");
            let c2 = resample_colors(&c, eps, r).expect("validated");
            match Tessellation::build(&c) {
                Err(_) => (false, false),
                Ok(t) => {
                    let g = WindowGraph::new(&t, rect);
                    (g.blue_horizontal(&c.colors()), g.blue_horizontal(&c2.colors()))
                }
            }
        }
        NoiseKind::Position => {
            let c = sample_configuration(n, p, r).expect("validated");
            let c2 = resample_positions(&c, eps, r).expect("validated");
            (has_blue_horizontal_crossing(&c, rect), has_blue_horizontal_crossing(&c2, rect))
        }
        NoiseKind::ThinCouple => {
            let k = 1.0 / (1.0 - eps);
            let ts = two_stage_unchecked(n, k, p, r).expect("validated");
            let other = bernoulli_mask(ts.dense.len(), ts.keep_prob(), r);
            (
                has_blue_horizontal_crossing(&ts.masked(), rect),
                has_blue_horizontal_crossing(&ts.masked_with(&other), rect),
            )
        }
    }
}

/// Paired covariance terms `(f1 − f̄1)(f2 − f̄2)·R/(R − 1)`; their mean is the
/// unbiased sample covariance.
fn covariance_terms(pairs: &[(f64, f64)]) -> Vec<f64> {
    let r = pairs.len() as f64;
    let m1 = pairs.iter().map(|x| x.0).sum::<f64>() / r;
    let m2 = pairs.iter().map(|x| x.1).sum::<f64>() / r;
    pairs.iter().map(|&(a, b)| (a - m1) * (b - m2) * r / (r - 1.0)).collect()
}

/// `E[f(η)f(η̃)] − E[f(η)]²` for the pair produced by `kind` at level `eps`.
pub fn noise_correlation(
    n: f64,
    p: f64,
    eps: f64,
    rect: &Rect,
    reps: usize,
    kind: NoiseKind,
    seed: u64,
) -> Result<MCEstimate> {
    check_intensity(n)?;
    check_prob("p", p)?;
    check_prob("eps", eps)?;
    check_reps(reps)?;
    if kind == NoiseKind::ThinCouple && eps >= 1.0 {
        return Err(Error::InvalidParameter("thin_couple needs eps < 1".into()));
    }
    let pairs = map_replicas(seed, reps, |_, r| {
        let (a, b) = crossing_pair(n, p, eps, rect, kind, r);
        (bit(a), bit(b))
    });
    MCEstimate::from_samples(
        &covariance_terms(&pairs),
        seed,
        params(&[
            ("n", n.to_string()),
            ("p", p.to_string()),
            ("eps", eps.to_string()),
            ("kind", kind.to_string()),
            ("rect", rect_param(rect)),
        ]),
    )
}

/// `Var(E[f_R | η_k])` by nested sampling: `outer_reps` dense configurations,
/// `inner_reps` thinnings each, with the within-group variance removed.
pub fn conditional_variance(
    n: f64,
    k: f64,
    p: f64,
    rect: &Rect,
    outer_reps: usize,
    inner_reps: usize,
    seed: u64,
) -> Result<MCEstimate> {
    check_intensity(n)?;
    check_prob("p", p)?;
    if !(k.is_finite() && k >= 1.0) {
        return Err(Error::InvalidParameter(format!("k must be finite and >= 1, got {k}")));
    }
    check_reps(outer_reps)?;
    check_reps(inner_reps)?;
    let groups = map_replicas(seed, outer_reps, |_, r| {
        let ts = two_stage_unchecked(n, k, p, r).expect("validated");
        let ys: Vec<f64> = (0..inner_reps)
            .map(|_| {
                let mask = bernoulli_mask(ts.dense.len(), ts.keep_prob(), r);
                bit(has_blue_horizontal_crossing(&ts.masked_with(&mask), rect))
            })
            .collect();
        let i = inner_reps as f64;
        let mean = ys.iter().sum::<f64>() / i;
        let var = ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / (i - 1.0);
        (mean, var)
    });
    let j = outer_reps as f64;
    let grand = groups.iter().map(|g| g.0).sum::<f64>() / j;
    let z: Vec<f64> = groups
        .iter()
        .map(|&(m, v)| (m - grand) * (m - grand) * j / (j - 1.0) - v / inner_reps as f64)
        .collect();
    MCEstimate::from_samples(
        &z,
        seed,
        params(&[
            ("n", n.to_string()),
            ("k", k.to_string()),
            ("p", p.to_string()),
            ("inner_reps", inner_reps.to_string()),
            ("rect", rect_param(rect)),
        ]),
    )
}

/// `P[f_R(eta2) ≠ f_R(eta3)]` over the coupled triple at `p = 1/2`.
pub fn srs_disagreement(n: f64, eps: f64, rect: &Rect, reps: usize, seed: u64) -> Result<MCEstimate> {
    check_intensity(n)?;
    check_prob("eps", eps)?;
    check_reps(reps)?;
    let samples = map_replicas(seed, reps, |_, r| {
        let t = coupled_triple(n, eps, r).expect("validated");
        bit(has_blue_horizontal_crossing(&t.eta2, rect) != has_blue_horizontal_crossing(&t.eta3, rect))
    });
    MCEstimate::from_samples(
        &samples,
        seed,
        params(&[("n", n.to_string()), ("eps", eps.to_string()), ("rect", rect_param(rect))]),
    )
}

/// `P[max cell radius > n^{-1/3}]`; the empty configuration has no cells.
pub fn large_cell_probability(n: f64, reps: usize, seed: u64) -> Result<MCEstimate> {
    check_intensity(n)?;
    check_reps(reps)?;
    let threshold = n.powf(-1.0 / 3.0);
    let samples = map_replicas(seed, reps, |_, r| {
        let (sites, _) = sample_marked(n, r).expect("validated");
        match Tessellation::from_sites(&sites) {
            Err(_) => 0.0,
            Ok(t) => bit(t.max_cell_radius() > threshold),
        }
    });
    MCEstimate::from_samples(&samples, seed, params(&[("n", n.to_string()), ("threshold", threshold.to_string())]))
}

/// Squares of the arm event around a centre point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneArmGeometry {
    pub mesh: f64,
    /// Side-`3m` square around the centre, clipped to `S`.
    pub inner: Rect,
    /// Side-`√m` square around the centre, clipped to `S`.
    pub outer: Rect,
    /// Sides of `outer` that lie inside `S` and so form the arm's target.
    pub targets: Vec<Side>,
}

impl OneArmGeometry {
    pub fn new(n: f64, center: Point) -> Result<Self> {
        let mesh = mesh_of(n)?;
        let square = |side: f64| Rect {
            a: center.x - side / 2.0,
            b: center.x + side / 2.0,
            c: center.y - side / 2.0,
            d: center.y + side / 2.0,
        };
        let unit = Rect::unit();
        let clip = |r: Rect| {
            unit.intersect(&r)
                .ok_or_else(|| Error::InvalidParameter(format!("square around {center:?} misses S")))
        };
        let q = square(mesh.sqrt());
        let outer = clip(q)?;
        let inner = clip(square(3.0 * mesh))?.intersect(&outer).expect("both contain the centre");
        let targets: Vec<Side> = Side::ALL
            .into_iter()
            .filter(|&s| match s {
                Side::Left => q.a > 0.0,
                Side::Right => q.b < 1.0,
                Side::Bottom => q.c > 0.0,
                Side::Top => q.d < 1.0,
            })
            .collect();
        if targets.is_empty() {
            return Err(Error::InvalidParameter("the outer square covers S; the arm has no target".into()));
        }
        Ok(OneArmGeometry { mesh, inner, outer, targets })
    }

    /// True iff `inner ⊇ outer`, in which case the event only asks for a
    /// blue cell meeting both.
    pub fn degenerate(&self) -> bool {
        self.inner == self.outer
    }

    /// Blue cells inside `outer` join a cell meeting `inner` to a target side.
    pub fn arm(&self, config: &Configuration) -> bool {
        let Ok(tess) = Tessellation::build(config) else {
            return false;
        };
        let colors = config.colors();
        let g = WindowGraph::new(&tess, &self.outer);
        let n = tess.len();
        let (src, dst) = (n as u32, n as u32 + 1);
        let mut uf = UnionFind::<u32>::new(n + 2);
        let mut any_src = false;
        for &i in g.members() {
            if colors[i as usize].is_blue() && tess.cell(i as usize).to_polygon().clip_to_rect(&self.inner).area() > AREA_TOL {
                uf.union(src, i);
                any_src = true;
            }
        }
        if !any_src {
            return false;
        }
        for &s in &self.targets {
            for &i in g.touching(s) {
                if colors[i as usize].is_blue() {
                    uf.union(dst, i);
                }
            }
        }
        for &(i, j) in g.edges() {
            if colors[i as usize].is_blue() && colors[j as usize].is_blue() {
                uf.union(i, j);
            }
        }
        uf.equiv(src, dst)
    }
}

/// Probability of the one-arm event around `center` at mesh `m = 1/⌈n^{1/4}⌉`.
pub fn one_arm_probability(n: f64, p: f64, center: Point, reps: usize, seed: u64) -> Result<MCEstimate> {
    check_prob("p", p)?;
    check_reps(reps)?;
    let geo = OneArmGeometry::new(n, center)?;
    let samples = map_replicas(seed, reps, |_, r| {
        let c = sample_configuration(n, p, r).expect("validated");
        bit(geo.arm(&c))
    });
    MCEstimate::from_samples(
        &samples,
        seed,
        params(&[
            ("n", n.to_string()),
            ("p", p.to_string()),
            ("center", format!("{},{}", center.x, center.y)),
            ("degenerate", geo.degenerate().to_string()),
        ]),
    )
}

/// Estimated maximum revealment of the presence explorer, one value per
/// dense configuration at intensity `k·n`, `p = 1/2`.
pub fn max_revealment_samples(
    n: f64,
    k: f64,
    rect: &Rect,
    dense_reps: usize,
    inner_reps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_intensity(n)?;
    if dense_reps == 0 || inner_reps == 0 {
        return Err(Error::InvalidParameter("dense_reps and inner_reps must be >= 1".into()));
    }
    if !(k.is_finite() && k > 1.0) {
        return Err(Error::InvalidParameter(format!("k must be a finite real > 1, got {k}")));
    }
    mesh_of(n)?;
    Ok(map_replicas(seed, dense_reps, |_, r| {
        let ts = two_stage_sample(n, k, 0.5, r).expect("validated");
        if ts.dense.is_empty() {
            return 0.0;
        }
        estimate_revealment(&ts, rect, inner_reps, r).expect("validated").max
    }))
}

/// Estimated maximum revealment of the color explorer, one value per
/// position set at intensity `n`, `p = 1/2`.
pub fn max_color_revealment_samples(
    n: f64,
    rect: &Rect,
    config_reps: usize,
    inner_reps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_intensity(n)?;
    if config_reps == 0 || inner_reps == 0 {
        return Err(Error::InvalidParameter("config_reps and inner_reps must be >= 1".into()));
    }
    mesh_of(n)?;
    Ok(map_replicas(seed, config_reps, |_, r| {
        let config = sample_configuration(n, 0.5, r).expect("validated");
        if config.is_empty() {
            return 0.0;
        }
        estimate_color_revealment(&config, rect, inner_reps, r).expect("validated").max
    }))
}

/// Fraction of dense configurations whose estimated maximum revealment
/// exceeds `threshold`.
pub fn revealment_tail(
    n: f64,
    k: f64,
    rect: &Rect,
    dense_reps: usize,
    inner_reps: usize,
    threshold: f64,
    seed: u64,
) -> Result<MCEstimate> {
    check_prob("threshold", threshold)?;
    check_reps(dense_reps)?;
    let maxima = max_revealment_samples(n, k, rect, dense_reps, inner_reps, seed)?;
    let samples: Vec<f64> = maxima.iter().map(|&m| bit(m > threshold)).collect();
    MCEstimate::from_samples(
        &samples,
        seed,
        params(&[
            ("n", n.to_string()),
            ("k", k.to_string()),
            ("inner_reps", inner_reps.to_string()),
            ("threshold", threshold.to_string()),
            ("rect", rect_param(rect)),
        ]),
    )
}
