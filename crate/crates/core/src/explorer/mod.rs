//! Mesoscopic exploration deciding the blue horizontal crossing of a window.
//!
//! The presence variant reads presence bits of a dense configuration; the
//! color variant knows all positions and reads color bits. Both record every
//! bit they read.

mod grid;
mod web;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use grid::{mesh_of, MesoGrid};
use web::{frontier, Piece, Web};

use crate::error::{Error, Result};
use crate::geometry::{
    compute_cell, has_blue_horizontal_crossing, CellScratch, Color, Configuration, Point, Polygon, Rect, SiteGrid,
    Tessellation,
};
use crate::perturb::{bernoulli_mask, TwoStageSample};
use crate::seeding::map_replicas;

/// Record of one exploration run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplorationTrace {
    pub x0: f64,
    pub rect: Rect,
    pub grid: MesoGrid,
    /// Indices of the points whose bit was read, ascending.
    pub queried: Vec<u32>,
    pub queried_locations: Vec<Point>,
    pub explored_cells: Vec<u32>,
    pub safe_cells: Vec<u32>,
    pub output: bool,
    /// The empty-subcell fallback fired and every bit was read.
    pub full_reveal: bool,
    pub iterations: usize,
    pub total_points: usize,
}

impl ExplorationTrace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Malformed(e.to_string()))
    }
}

/// Uniform abscissa in the middle third of `[a, b]`.
pub fn draw_x0<R: Rng + ?Sized>(rect: &Rect, rng: &mut R) -> f64 {
    let w = rect.width();
    rect.a + w / 3.0 + rng.random::<f64>() * w / 3.0
}

/// Shared exploration bookkeeping.
struct State {
    grid: MesoGrid,
    explored: Vec<bool>,
    safe: Vec<bool>,
    web: Web,
}

impl State {
    fn new(grid: MesoGrid) -> Self {
        State { grid, explored: vec![false; grid.len()], safe: vec![false; grid.len()], web: Web::default() }
    }

    /// Marks squares explored and returns the newly explored ones.
    fn explore(&mut self, cells: impl IntoIterator<Item = usize>) -> Vec<usize> {
        let mut fresh = Vec::new();
        for c in cells {
            if !self.explored[c] {
                self.explored[c] = true;
                fresh.push(c);
            }
        }
        fresh
    }

    fn with_neighbors(&self, cells: &[usize]) -> Vec<usize> {
        let mut out = cells.to_vec();
        for &c in cells {
            out.extend(self.grid.neighbors(c));
        }
        out
    }

    fn cell_list(flags: &[bool]) -> Vec<u32> {
        flags.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i as u32).collect()
    }

    fn iteration_cap(&self) -> usize {
        self.grid.len() * self.grid.len()
    }
}

/// Dense configuration prepared for repeated presence-query runs.
pub struct PresenceExplorer {
    rect: Rect,
    grid: MesoGrid,
    sites: Vec<Point>,
    colors: Vec<Color>,
    site_grid: SiteGrid,
    cell_of: Vec<u32>,
    subcell_of: Vec<u8>,
    by_cell: Vec<Vec<u32>>,
    n: f64,
}

impl PresenceExplorer {
    pub fn new(dense: &Configuration, n: f64, rect: &Rect) -> Result<Self> {
        if dense.is_empty() {
            return Err(Error::EmptyConfiguration);
        }
        let grid = MesoGrid::for_intensity(n)?;
        let sites = dense.locations();
        let site_grid = SiteGrid::new(&sites);
        let mut by_cell = vec![Vec::new(); grid.len()];
        let mut cell_of = Vec::with_capacity(sites.len());
        let mut subcell_of = Vec::with_capacity(sites.len());
        for (i, &p) in sites.iter().enumerate() {
            let c = grid.cell_of(p);
            by_cell[c].push(i as u32);
            cell_of.push(c as u32);
            subcell_of.push(grid.subcell_of(p) as u8);
        }
        Ok(PresenceExplorer {
            rect: *rect,
            grid,
            sites,
            colors: dense.colors(),
            site_grid,
            cell_of,
            subcell_of,
            by_cell,
            n,
        })
    }

    pub fn grid(&self) -> MesoGrid {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    fn has_empty_subcell(&self, cell: usize, mask: &[bool]) -> bool {
        let mut seen = [false; 9];
        for &i in &self.by_cell[cell] {
            if mask[i as usize] {
                seen[self.subcell_of[i as usize] as usize] = true;
            }
        }
        seen.iter().any(|&s| !s)
    }

    fn square_pieces(&self, square: usize, mask: &[bool], explored: &[bool], scratch: &mut CellScratch) -> Vec<Piece> {
        let sq = self.grid.cell_rect(square);
        let Some(clip) = sq.intersect(&self.rect) else {
            return Vec::new();
        };
        // every point of a safe square has a present site within this distance
        let rho = std::f64::consts::SQRT_2 * self.grid.mesh() / 3.0 * (1.0 + 1e-9) + 1e-12;
        let visible = |t: usize| mask[t] && explored[self.cell_of[t] as usize];
        let mut out = Vec::new();
        let block = std::iter::once(square).chain(self.grid.neighbors(square));
        for nb in block {
            for &j in &self.by_cell[nb] {
                let j = j as usize;
                if !mask[j] || !self.colors[j].is_blue() {
                    continue;
                }
                let v = self.sites[j];
                let around = Rect { a: v.x - rho, b: v.x + rho, c: v.y - rho, d: v.y + rho };
                let Some(start) = clip.intersect(&around) else {
                    continue;
                };
                let poly = compute_cell(j, &self.sites, &self.site_grid, &Polygon::from_rect(&start), visible, scratch);
                if let Some(p) = Piece::from_polygon(j as u32, square as u32, &poly.vertices, &poly.labels, &sq, &self.rect)
                {
                    out.push(p);
                }
            }
        }
        out
    }

    /// Runs the exploration for presence bits `mask` and line `x0`.
    pub fn run(&self, mask: &[bool], x0: f64) -> ExplorationTrace {
        assert_eq!(mask.len(), self.sites.len());
        let grid = self.grid;
        let mut st = State::new(grid);
        let mut scratch = CellScratch::default();
        let line = grid.column_cells(x0, self.rect.c, self.rect.d);
        let mut batch = st.with_neighbors(&line);
        let mut iterations = 0;
        let mut full_reveal = false;
        loop {
            let fresh = st.explore(batch);
            if fresh.iter().any(|&c| self.has_empty_subcell(c, mask)) {
                full_reveal = true;
                break;
            }
            for s in 0..grid.len() {
                if st.explored[s] && !st.safe[s] && grid.neighbors(s).all(|t| st.explored[t]) {
                    st.safe[s] = true;
                    let pieces = self.square_pieces(s, mask, &st.explored, &mut scratch);
                    st.web.add_square(&grid, s, pieces);
                }
            }
            let comps = st.web.components(x0);
            let targets = frontier(&st.web, &comps, &grid, &st.safe);
            if targets.is_empty() {
                break;
            }
            iterations += 1;
            assert!(
                iterations <= st.iteration_cap(),
                "exploration exceeded {} iterations on a {}x{} grid",
                st.iteration_cap(),
                grid.per_axis(),
                grid.per_axis()
            );
            batch = st.with_neighbors(&targets);
        }

        let (output, queried) = if full_reveal {
            let masked = Configuration::from_points(
                (0..self.sites.len())
                    .filter(|&i| mask[i])
                    .map(|i| crate::geometry::ColoredPoint { location: self.sites[i], color: self.colors[i] })
                    .collect(),
                self.n,
                0.5,
            );
            (has_blue_horizontal_crossing(&masked, &self.rect), (0..self.sites.len() as u32).collect::<Vec<_>>())
        } else {
            let q: Vec<u32> =
                (0..self.sites.len() as u32).filter(|&i| st.explored[self.cell_of[i as usize] as usize]).collect();
            (st.web.components(x0).crossing(), q)
        };
        ExplorationTrace {
            x0,
            rect: self.rect,
            grid,
            queried_locations: queried.iter().map(|&i| self.sites[i as usize]).collect(),
            queried,
            explored_cells: State::cell_list(&st.explored),
            safe_cells: State::cell_list(&st.safe),
            output,
            full_reveal,
            iterations,
            total_points: self.sites.len(),
        }
    }
}

/// Algorithm 1 on a two-stage sample with a freshly drawn line.
pub fn run_algorithm<R: Rng + ?Sized>(ts: &TwoStageSample, rect: &Rect, rng: &mut R) -> Result<ExplorationTrace> {
    let x0 = draw_x0(rect, rng);
    run_algorithm_at(ts, rect, x0)
}

/// Algorithm 1 with a fixed line `x0`.
pub fn run_algorithm_at(ts: &TwoStageSample, rect: &Rect, x0: f64) -> Result<ExplorationTrace> {
    Ok(PresenceExplorer::new(&ts.dense, ts.n, rect)?.run(&ts.mask, x0))
}

/// Fixed positions prepared for repeated color-query runs.
pub struct ColorExplorer {
    rect: Rect,
    grid: MesoGrid,
    sites: Vec<Point>,
    by_cell: Vec<Vec<u32>>,
    cell_of: Vec<u32>,
    pieces: Vec<Vec<Piece>>,
    deps: Vec<Vec<u32>>,
}

impl ColorExplorer {
    /// Uses the configuration's own intensity for the mesh.
    pub fn new(config: &Configuration, rect: &Rect) -> Result<Self> {
        Self::with_intensity(config, config.intensity, rect)
    }

    pub fn with_intensity(config: &Configuration, n: f64, rect: &Rect) -> Result<Self> {
        let tess = Tessellation::build(config)?;
        let grid = MesoGrid::for_intensity(n)?;
        let sites = tess.sites().to_vec();
        let mut by_cell = vec![Vec::new(); grid.len()];
        let mut cell_of = Vec::with_capacity(sites.len());
        for (i, &p) in sites.iter().enumerate() {
            let c = grid.cell_of(p);
            by_cell[c].push(i as u32);
            cell_of.push(c as u32);
        }
        let mut pieces: Vec<Vec<Piece>> = vec![Vec::new(); grid.len()];
        let mut deps: Vec<Vec<u32>> = vec![Vec::new(); grid.len()];
        for i in 0..tess.len() {
            let cell = tess.cell(i);
            let poly = cell.to_polygon();
            let (x0, x1, y0, y1) = poly.bbox();
            let lo = grid.cell_of(Point::new(x0, y0));
            let hi = grid.cell_of(Point::new(x1, y1));
            let ((ax, ay), (bx, by)) = (grid.coords(lo), grid.coords(hi));
            for iy in ay..=by {
                for ix in ax..=bx {
                    let s = grid.index(ix, iy);
                    let sq = grid.cell_rect(s);
                    let Some(clip) = sq.intersect(rect) else {
                        continue;
                    };
                    let part = poly.clip_to_rect(&clip);
                    if let Some(p) = Piece::from_polygon(i as u32, s as u32, &part.vertices, &part.labels, &sq, rect) {
                        pieces[s].push(p);
                        deps[s].push(cell_of[i]);
                    }
                }
            }
        }
        for d in &mut deps {
            d.sort_unstable();
            d.dedup();
        }
        Ok(ColorExplorer { rect: *rect, grid, sites, by_cell, cell_of, pieces, deps })
    }

    pub fn grid(&self) -> MesoGrid {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    fn targets_with_deps(&self, st: &State, targets: &[usize]) -> Vec<usize> {
        let mut out = st.with_neighbors(targets);
        for &t in targets {
            out.extend(self.deps[t].iter().map(|&c| c as usize));
        }
        out
    }

    /// Runs the exploration for `colors` and line `x0`.
    pub fn run(&self, colors: &[Color], x0: f64) -> ExplorationTrace {
        assert_eq!(colors.len(), self.sites.len());
        let grid = self.grid;
        let mut st = State::new(grid);
        let line = grid.column_cells(x0, self.rect.c, self.rect.d);
        let mut batch = self.targets_with_deps(&st, &line);
        let mut iterations = 0;
        loop {
            st.explore(batch);
            for s in 0..grid.len() {
                if st.explored[s] && !st.safe[s] && self.deps[s].iter().all(|&c| st.explored[c as usize]) {
                    st.safe[s] = true;
                    let blue: Vec<Piece> =
                        self.pieces[s].iter().filter(|p| colors[p.site as usize].is_blue()).cloned().collect();
                    st.web.add_square(&grid, s, blue);
                }
            }
            let comps = st.web.components(x0);
            let targets = frontier(&st.web, &comps, &grid, &st.safe);
            if targets.is_empty() {
                break;
            }
            iterations += 1;
            assert!(iterations <= st.iteration_cap(), "exploration exceeded {} iterations", st.iteration_cap());
            batch = self.targets_with_deps(&st, &targets);
        }
        let queried: Vec<u32> =
            (0..self.sites.len() as u32).filter(|&i| st.explored[self.cell_of[i as usize] as usize]).collect();
        debug_assert!(queried.iter().all(|&i| self.by_cell[self.cell_of[i as usize] as usize].contains(&i)));
        ExplorationTrace {
            x0,
            rect: self.rect,
            grid,
            queried_locations: queried.iter().map(|&i| self.sites[i as usize]).collect(),
            queried,
            explored_cells: State::cell_list(&st.explored),
            safe_cells: State::cell_list(&st.safe),
            output: st.web.components(x0).crossing(),
            full_reveal: false,
            iterations,
            total_points: self.sites.len(),
        }
    }
}

/// Color-query variant: positions are known and a query reveals one color.
pub fn run_algorithm_colors<R: Rng + ?Sized>(
    config: &Configuration,
    rect: &Rect,
    rng: &mut R,
) -> Result<ExplorationTrace> {
    let x0 = draw_x0(rect, rng);
    run_algorithm_colors_at(config, rect, x0)
}

pub fn run_algorithm_colors_at(config: &Configuration, rect: &Rect, x0: f64) -> Result<ExplorationTrace> {
    Ok(ColorExplorer::new(config, rect)?.run(&config.colors(), x0))
}

/// Empirical per-point query frequencies and their maximum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RevealmentEstimate {
    pub frequencies: Vec<f64>,
    pub max: f64,
    pub reps: usize,
    pub full_reveal_rate: f64,
    pub seed: u64,
}

fn reduce_traces(total: usize, traces: Vec<(Vec<u32>, bool)>, seed: u64) -> RevealmentEstimate {
    let reps = traces.len();
    let mut counts = vec![0u64; total];
    let mut full = 0usize;
    for (q, f) in traces {
        for i in q {
            counts[i as usize] += 1;
        }
        full += f as usize;
    }
    let frequencies: Vec<f64> = counts.iter().map(|&c| c as f64 / reps as f64).collect();
    let max = frequencies.iter().copied().fold(0.0, f64::max);
    RevealmentEstimate { frequencies, max, reps, full_reveal_rate: full as f64 / reps as f64, seed }
}

/// Query frequencies of the presence variant over fresh masks and lines,
/// conditional on the dense configuration.
pub fn estimate_revealment<R: Rng + ?Sized>(
    ts: &TwoStageSample,
    rect: &Rect,
    reps: usize,
    rng: &mut R,
) -> Result<RevealmentEstimate> {
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be >= 1".into()));
    }
    let explorer = PresenceExplorer::new(&ts.dense, ts.n, rect)?;
    let seed = rng.random::<u64>();
    let keep = ts.keep_prob();
    let traces = map_replicas(seed, reps, |_, r| {
        let mask = bernoulli_mask(ts.dense.len(), keep, r);
        let x0 = draw_x0(rect, r);
        let t = explorer.run(&mask, x0);
        (t.queried, t.full_reveal)
    });
    Ok(reduce_traces(ts.dense.len(), traces, seed))
}

/// Query frequencies of the color variant over fresh colors and lines,
/// conditional on the positions.
pub fn estimate_color_revealment<R: Rng + ?Sized>(
    config: &Configuration,
    rect: &Rect,
    reps: usize,
    rng: &mut R,
) -> Result<RevealmentEstimate> {
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be >= 1".into()));
    }
    let explorer = ColorExplorer::new(config, rect)?;
    let seed = rng.random::<u64>();
    let p = config.blue_prob;
    let traces = map_replicas(seed, reps, |_, r| {
        let colors: Vec<Color> = (0..config.len()).map(|_| Color::from_bit(r.random::<f64>() < p)).collect();
        let x0 = draw_x0(rect, r);
        (explorer.run(&colors, x0).queried, false)
    });
    Ok(reduce_traces(config.len(), traces, seed))
}

#[cfg(test)]
mod tests;
