use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Rect, Side};

/// Mesoscopic lattice of `G × G` squares of side `1/G` over `S`, each split
/// into nine equal subcells. Squares are indexed row-major from the bottom
/// left.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MesoGrid {
    per_axis: usize,
}

/// Smallest integer `g ≥ 1` with `g⁴ ≥ n`.
fn ceil_fourth_root(n: f64) -> usize {
    let mut g = n.powf(0.25).ceil().max(1.0) as usize;
    while g > 1 && ((g - 1) as f64).powi(4) >= n {
        g -= 1;
    }
    while (g as f64).powi(4) < n {
        g += 1;
    }
    g
}

/// `m = 1/⌈n^{1/4}⌉`.
pub fn mesh_of(n: f64) -> Result<f64> {
    Ok(MesoGrid::for_intensity(n)?.mesh())
}

impl MesoGrid {
    pub fn new(per_axis: usize) -> Result<Self> {
        if per_axis == 0 {
            return Err(Error::InvalidParameter("meso grid needs at least one square per axis".into()));
        }
        Ok(MesoGrid { per_axis })
    }

    pub fn for_intensity(n: f64) -> Result<Self> {
        if !(n.is_finite() && n >= 1.0) {
            return Err(Error::InvalidParameter(format!("mesh needs intensity n >= 1, got {n}")));
        }
        Self::new(ceil_fourth_root(n))
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn mesh(&self) -> f64 {
        1.0 / self.per_axis as f64
    }

    pub fn len(&self) -> usize {
        self.per_axis * self.per_axis
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    fn axis(&self, v: f64) -> usize {
        ((v * self.per_axis as f64) as usize).min(self.per_axis - 1)
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.per_axis + ix
    }

    #[inline]
    pub fn coords(&self, cell: usize) -> (usize, usize) {
        (cell % self.per_axis, cell / self.per_axis)
    }

    pub fn cell_of(&self, p: Point) -> usize {
        self.index(self.axis(p.x), self.axis(p.y))
    }

    /// Subcell `0..9` of `p` inside its square, row-major from the bottom left.
    pub fn subcell_of(&self, p: Point) -> usize {
        let g = self.per_axis as f64;
        let (ix, iy) = (self.axis(p.x), self.axis(p.y));
        let sx = ((3.0 * (p.x * g - ix as f64)) as usize).min(2);
        let sy = ((3.0 * (p.y * g - iy as f64)) as usize).min(2);
        3 * sy + sx
    }

    pub fn cell_rect(&self, cell: usize) -> Rect {
        let (ix, iy) = self.coords(cell);
        let g = self.per_axis as f64;
        let edge = |i: usize| if i == self.per_axis { 1.0 } else { i as f64 / g };
        Rect { a: edge(ix), b: edge(ix + 1), c: edge(iy), d: edge(iy + 1) }
    }

    /// In-grid squares of the 8-neighbourhood.
    pub fn neighbors(&self, cell: usize) -> impl Iterator<Item = usize> + '_ {
        let (ix, iy) = self.coords(cell);
        let g = self.per_axis as isize;
        (-1isize..=1).flat_map(move |dy| (-1isize..=1).map(move |dx| (dx, dy))).filter_map(move |(dx, dy)| {
            let (x, y) = (ix as isize + dx, iy as isize + dy);
            ((dx, dy) != (0, 0) && (0..g).contains(&x) && (0..g).contains(&y))
                .then(|| self.index(x as usize, y as usize))
        })
    }

    /// The square across `side`, if inside the grid.
    pub fn edge_neighbor(&self, cell: usize, side: Side) -> Option<usize> {
        let (ix, iy) = self.coords(cell);
        let g = self.per_axis;
        match side {
            Side::Left => (ix > 0).then(|| self.index(ix - 1, iy)),
            Side::Right => (ix + 1 < g).then(|| self.index(ix + 1, iy)),
            Side::Bottom => (iy > 0).then(|| self.index(ix, iy - 1)),
            Side::Top => (iy + 1 < g).then(|| self.index(ix, iy + 1)),
        }
    }

    /// Squares meeting the closed segment `{x0} × [c, d]`.
    pub fn column_cells(&self, x0: f64, c: f64, d: f64) -> Vec<usize> {
        let g = self.per_axis as f64;
        let cols: Vec<usize> = (0..self.per_axis)
            .filter(|&i| i as f64 / g <= x0 && x0 <= (i + 1) as f64 / g)
            .collect();
        let mut out = Vec::new();
        for iy in 0..self.per_axis {
            if iy as f64 / g <= d && c <= (iy + 1) as f64 / g {
                out.extend(cols.iter().map(|&ix| self.index(ix, iy)));
            }
        }
        out
    }
}
