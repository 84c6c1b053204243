use serde::{Deserialize, Serialize};

use super::{check_reps, params, rect_param, MCEstimate};
use crate::error::{check_nonneg, Error, Result};
use crate::geometry::{colors_at, sample_marked, Rect, Tessellation, WindowGraph};
use crate::seeding::map_replicas;

/// Crossing curve on a grid of `p` values and the interval where its
/// monotone fit lies in `(eps_level, 1 − eps_level)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowEstimate {
    pub p_lo: f64,
    pub p_hi: f64,
    pub eps_level: f64,
    pub grid: Vec<(f64, MCEstimate)>,
    /// Isotonic fit of the grid means.
    pub fitted: Vec<f64>,
}

impl WindowEstimate {
    pub fn width(&self) -> f64 {
        self.p_hi - self.p_lo
    }
}

/// Weighted least-squares non-decreasing fit by pool-adjacent-violators.
pub fn isotonic_fit(y: &[f64], w: &[f64]) -> Vec<f64> {
    assert_eq!(y.len(), w.len());
    // blocks of (mean, weight, length)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(y.len());
    for (&v, &wt) in y.iter().zip(w) {
        blocks.push((v, wt, 1));
        while blocks.len() > 1 {
            let (m2, w2, l2) = blocks[blocks.len() - 1];
            let (m1, w1, l1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.pop();
            let wt = w1 + w2;
            let m = if wt > 0.0 { (m1 * w1 + m2 * w2) / wt } else { (m1 + m2) / 2.0 };
            *blocks.last_mut().unwrap() = (m, wt, l1 + l2);
        }
    }
    blocks.into_iter().flat_map(|(m, _, l)| std::iter::repeat_n(m, l)).collect()
}

/// Index of the first grid level at which `f` holds, `grid.len()` if none;
/// `f` must be monotone along the grid.
fn first_true(len: usize, f: impl Fn(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (0, len);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if f(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

fn crossing_level(p: &[f64], fit: &[f64], j: usize, level: f64) -> f64 {
    let (f0, f1) = (fit[j - 1], fit[j]);
    p[j - 1] + (level - f0) / (f1 - f0) * (p[j] - p[j - 1])
}

/// Estimates the threshold window with one marked configuration per
/// replica shared across the grid; each replica's crossing indicator is a
/// step in `p`, located by bisection.
pub fn threshold_window(
    n: f64,
    eps_level: f64,
    rect: &Rect,
    p_grid: &[f64],
    reps_per_point: usize,
    seed: u64,
) -> Result<WindowEstimate> {
    check_nonneg("n", n)?;
    check_reps(reps_per_point)?;
    if !(eps_level > 0.0 && eps_level < 0.5) {
        return Err(Error::InvalidParameter(format!("eps_level must lie in (0, 1/2), got {eps_level}")));
    }
    if p_grid.len() < 2
        || !p_grid.iter().all(|p| (0.0..=1.0).contains(p))
        || p_grid.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(Error::InvalidParameter("p_grid must be strictly increasing within [0, 1] with >= 2 points".into()));
    }
    let len = p_grid.len();
    let steps = map_replicas(seed, reps_per_point, |_, r| {
        let (sites, marks) = sample_marked(n, r).expect("validated");
        let Ok(tess) = Tessellation::from_sites(&sites) else {
            return len;
        };
        let g = WindowGraph::new(&tess, rect);
        first_true(len, |j| g.blue_horizontal(&colors_at(&marks, p_grid[j])))
    });
    let mut grid = Vec::with_capacity(len);
    for (j, &p) in p_grid.iter().enumerate() {
        let samples: Vec<f64> = steps.iter().map(|&s| if j >= s { 1.0 } else { 0.0 }).collect();
        let est = MCEstimate::from_samples(
            &samples,
            seed,
            params(&[("n", n.to_string()), ("p", p.to_string()), ("rect", rect_param(rect))]),
        )?;
        grid.push((p, est));
    }
    let means: Vec<f64> = grid.iter().map(|g| g.1.mean).collect();
    let fitted = isotonic_fit(&means, &vec![1.0; len]);
    let hi_level = 1.0 - eps_level;
    let unresolved = Error::WindowUnresolved { lo: eps_level, hi: hi_level };
    let j_lo = fitted.iter().position(|&f| f > eps_level).ok_or(unresolved.clone())?;
    let j_hi = fitted.iter().position(|&f| f >= hi_level).ok_or(unresolved.clone())?;
    if j_lo == 0 {
        return Err(unresolved);
    }
    let p_lo = crossing_level(p_grid, &fitted, j_lo, eps_level);
    let p_hi = crossing_level(p_grid, &fitted, j_hi, hi_level);
    Ok(WindowEstimate { p_lo, p_hi, eps_level, grid, fitted })
}
