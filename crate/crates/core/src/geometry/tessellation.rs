use super::polygon::{clip_into, polygon_area};
use super::{Configuration, EdgeLabel, Point, Polygon, Rect, SiteGrid, EDGE_TOL};
use crate::error::{Error, Result};

/// Jitter applied to exactly coincident sites.
const JITTER_SCALE: f64 = 1e-15;

/// Voronoi cells of a site set, clipped to the unit square, with the
/// positive-length adjacency graph.
#[derive(Clone, Debug)]
pub struct Tessellation {
    sites: Vec<Point>,
    vert_starts: Vec<u32>,
    vertices: Vec<Point>,
    labels: Vec<EdgeLabel>,
    adj_starts: Vec<u32>,
    adjacency: Vec<u32>,
    grid: SiteGrid,
    jittered: bool,
}

/// Borrowed view of one clipped cell.
#[derive(Clone, Copy, Debug)]
pub struct CellRef<'a> {
    pub site: Point,
    pub vertices: &'a [Point],
    pub labels: &'a [EdgeLabel],
}

impl CellRef<'_> {
    pub fn area(&self) -> f64 {
        polygon_area(self.vertices)
    }

    pub fn to_polygon(&self) -> Polygon {
        Polygon { vertices: self.vertices.to_vec(), labels: self.labels.to_vec() }
    }

    /// Largest distance from the site to a point of the cell.
    pub fn radius(&self) -> f64 {
        self.vertices.iter().map(|v| v.dist2(self.site)).fold(0.0, f64::max).sqrt()
    }
}

impl Tessellation {
    pub fn build(config: &Configuration) -> Result<Self> {
        Self::from_sites(&config.locations())
    }

    pub fn from_sites(sites: &[Point]) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::EmptyConfiguration);
        }
        let mut sites = sites.to_vec();
        let jittered = separate_coincident(&mut sites);
        let grid = SiteGrid::new(&sites);

        let (vert_starts, vertices, labels) = match delaunay_cells(&sites) {
            Some(cells) => cells,
            None => ring_cells(&sites, &grid),
        };

        let (adj_starts, adjacency) = adjacency_lists(&vert_starts, &vertices, &labels);
        Ok(Tessellation { sites, vert_starts, vertices, labels, adj_starts, adjacency, grid, jittered })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Site locations after any coincidence jitter.
    pub fn sites(&self) -> &[Point] {
        &self.sites
    }

    /// True when coincident sites had to be separated.
    pub fn jittered(&self) -> bool {
        self.jittered
    }

    pub fn site_grid(&self) -> &SiteGrid {
        &self.grid
    }

    pub fn cell(&self, i: usize) -> CellRef<'_> {
        let (s, e) = (self.vert_starts[i] as usize, self.vert_starts[i + 1] as usize);
        CellRef { site: self.sites[i], vertices: &self.vertices[s..e], labels: &self.labels[s..e] }
    }

    pub fn cells(&self) -> impl Iterator<Item = CellRef<'_>> {
        (0..self.len()).map(move |i| self.cell(i))
    }

    /// Sites whose cells share a positive-length edge with cell `i`.
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.adjacency[self.adj_starts[i] as usize..self.adj_starts[i + 1] as usize]
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&(j as u32)).is_ok()
    }

    pub fn total_area(&self) -> f64 {
        self.cells().map(|c| c.area()).sum()
    }

    pub fn max_cell_radius(&self) -> f64 {
        self.cells().map(|c| c.radius()).fold(0.0, f64::max)
    }
}

/// Positive-length neighbours of every cell in CSR form, sorted per cell and
/// symmetrised.
fn adjacency_lists(vert_starts: &[u32], vertices: &[Point], labels: &[EdgeLabel]) -> (Vec<u32>, Vec<u32>) {
    let n = vert_starts.len() - 1;
    let mut starts = Vec::with_capacity(n + 1);
    let mut adj = Vec::with_capacity(vertices.len());
    starts.push(0u32);
    for i in 0..n {
        let (s, e) = (vert_starts[i] as usize, vert_starts[i + 1] as usize);
        let vs = &vertices[s..e];
        let from = adj.len();
        for k in 0..vs.len() {
            if let EdgeLabel::Site(j) = labels[s + k] {
                if vs[k].dist(vs[(k + 1) % vs.len()]) > EDGE_TOL {
                    adj.push(j);
                }
            }
        }
        adj[from..].sort_unstable();
        let mut w = from;
        for r in from..adj.len() {
            if r == from || adj[r] != adj[w - 1] {
                adj[w] = adj[r];
                w += 1;
            }
        }
        adj.truncate(w);
        starts.push(adj.len() as u32);
    }
    let list = |i: usize| &adj[starts[i] as usize..starts[i + 1] as usize];
    let mut missing = Vec::new();
    for i in 0..n {
        for &j in list(i) {
            if list(j as usize).binary_search(&(i as u32)).is_err() {
                missing.push((j, i as u32));
            }
        }
    }
    if missing.is_empty() {
        return (starts, adj);
    }
    let mut pairs: Vec<(u32, u32)> = missing;
    for i in 0..n {
        pairs.extend(list(i).iter().map(|&j| (i as u32, j)));
    }
    pairs.sort_unstable();
    pairs.dedup();
    let mut starts = vec![0u32; n + 1];
    for &(i, _) in &pairs {
        starts[i as usize + 1] += 1;
    }
    for i in 0..n {
        starts[i + 1] += starts[i];
    }
    (starts, pairs.into_iter().map(|(_, j)| j).collect())
}

type CellArrays = (Vec<u32>, Vec<Point>, Vec<EdgeLabel>);

fn ring_cells(sites: &[Point], grid: &SiteGrid) -> CellArrays {
    let square = Polygon::from_rect(&Rect::unit());
    let mut out = CellArrays::default();
    out.0.push(0);
    let mut scratch = CellScratch::default();
    for i in 0..sites.len() {
        let poly = compute_cell(i, sites, grid, &square, |_| true, &mut scratch);
        push_cell(&mut out, &poly);
    }
    out
}

/// Cells clipped by Delaunay neighbours only. `None` when the triangulation
/// dropped a site or the cells fail to tile the square.
fn delaunay_cells(sites: &[Point]) -> Option<CellArrays> {
    if sites.len() < 3 {
        return None;
    }
    let pts: Vec<delaunator::Point> = sites.iter().map(|p| delaunator::Point { x: p.x, y: p.y }).collect();
    let tri = delaunator::triangulate(&pts);
    if tri.triangles.is_empty() {
        return None;
    }
    let n = sites.len();
    let mut deg = vec![0u32; n + 1];
    for t in tri.triangles.chunks_exact(3) {
        for k in 0..3 {
            deg[t[k] + 1] += 2;
        }
    }
    if deg[1..].contains(&0) {
        return None;
    }
    for i in 0..n {
        deg[i + 1] += deg[i];
    }
    let mut fill = deg.clone();
    let mut nbrs = vec![0u32; deg[n] as usize];
    for t in tri.triangles.chunks_exact(3) {
        for k in 0..3 {
            let (a, b, c) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
            nbrs[fill[a] as usize] = b as u32;
            nbrs[fill[a] as usize + 1] = c as u32;
            fill[a] += 2;
        }
    }

    let square = Polygon::from_rect(&Rect::unit());
    let mut out = CellArrays::default();
    out.0.push(0);
    let mut scratch = CellScratch::default();
    let mut area = 0.0;
    for i in 0..n {
        let list = &mut nbrs[deg[i] as usize..deg[i + 1] as usize];
        list.sort_unstable();
        let s = sites[i];
        let cur = &mut scratch.a;
        let tmp = &mut scratch.b;
        cur.vertices.clone_from(&square.vertices);
        cur.labels.clone_from(&square.labels);
        let mut prev = u32::MAX;
        for &j in list.iter() {
            if j == prev {
                continue;
            }
            prev = j;
            let t = sites[j as usize];
            let (dx, dy) = (t.x - s.x, t.y - s.y);
            let c = s.x * dx + s.y * dy + 0.5 * (dx * dx + dy * dy);
            if cur.vertices.iter().all(|v| v.x * dx + v.y * dy <= c) {
                continue;
            }
            clip_into(&cur.vertices, &cur.labels, dx, dy, c, EdgeLabel::Site(j), tmp);
            std::mem::swap(cur, tmp);
        }
        area += polygon_area(&scratch.a.vertices);
        push_cell(&mut out, &scratch.a);
    }
    ((area - 1.0).abs() <= 1e-9).then_some(out)
}

fn push_cell(out: &mut CellArrays, poly: &Polygon) {
    out.1.extend_from_slice(&poly.vertices);
    out.2.extend_from_slice(&poly.labels);
    out.0.push(out.1.len() as u32);
}

/// Largest site-to-vertex distance over all clipped cells; event `E` at
/// intensity `n` is `max_cell_radius > n^{-1/3}`.
pub fn max_cell_radius(config: &Configuration) -> Result<f64> {
    Ok(Tessellation::build(config)?.max_cell_radius())
}

#[derive(Default)]
pub(crate) struct CellScratch {
    a: Polygon,
    b: Polygon,
}

/// Voronoi cell of `sites[i]` among the sites accepted by `visible`,
/// intersected with the convex polygon `start`.
pub(crate) fn compute_cell(
    i: usize,
    sites: &[Point],
    grid: &SiteGrid,
    start: &Polygon,
    visible: impl Fn(usize) -> bool,
    scratch: &mut CellScratch,
) -> Polygon {
    let s = sites[i];
    let cur = &mut scratch.a;
    let tmp = &mut scratch.b;
    cur.vertices.clear();
    cur.labels.clear();
    cur.vertices.extend_from_slice(&start.vertices);
    cur.labels.extend_from_slice(&start.labels);
    let mut r2max = cur.vertices.iter().map(|v| v.dist2(s)).fold(0.0, f64::max);
    let (bx, by) = grid.bucket_of(s);
    let mut ring = 0;
    while !cur.is_empty() {
        match grid.ring_lower_bound(s, bx, by, ring) {
            None => break,
            Some(lb) if ring > 0 && lb * lb >= 4.0 * r2max => break,
            _ => {}
        }
        grid.for_each_in_ring(bx, by, ring, |j| {
            if j == i || cur.is_empty() || !visible(j) {
                return;
            }
            let t = sites[j];
            let (dx, dy) = (t.x - s.x, t.y - s.y);
            let d2 = dx * dx + dy * dy;
            if d2 >= 4.0 * r2max {
                return;
            }
            let c = s.x * dx + s.y * dy + 0.5 * d2;
            if cur.vertices.iter().all(|v| v.x * dx + v.y * dy <= c) {
                return;
            }
            clip_into(&cur.vertices, &cur.labels, dx, dy, c, EdgeLabel::Site(j as u32), tmp);
            std::mem::swap(cur, tmp);
            r2max = cur.vertices.iter().map(|v| v.dist2(s)).fold(0.0, f64::max);
        });
        ring += 1;
    }
    cur.clone()
}

/// Moves exact duplicates apart by a deterministic, index-derived offset.
fn separate_coincident(sites: &mut [Point]) -> bool {
    let mut jittered = false;
    for round in 0..8 {
        let mut order: Vec<usize> = (0..sites.len()).collect();
        order.sort_unstable_by_key(|&i| (sites[i].x.to_bits(), sites[i].y.to_bits(), i));
        let mut moved = false;
        for w in order.windows(2) {
            let (i, j) = (w[0], w[1]);
            if sites[i] == sites[j] {
                let k = j as u64 + round;
                let dx = JITTER_SCALE * (1.0 + (k % 97) as f64 / 97.0);
                let dy = JITTER_SCALE * (1.0 + (k.wrapping_mul(31) % 89) as f64 / 89.0);
                let p = &mut sites[j];
                p.x += if p.x < 0.5 { dx } else { -dx };
                p.y += if p.y < 0.5 { dy } else { -dy };
                moved = true;
            }
        }
        if !moved {
            break;
        }
        jittered = true;
    }
    jittered
}
