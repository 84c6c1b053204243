use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use super::polygon::{bbox, clip_into, polygon_area, rect_halfplanes};
use super::{Color, Configuration, EdgeLabel, Point, Polygon, Rect, Side, Tessellation, EDGE_TOL};

/// Cells with less area than this inside the window are ignored.
const AREA_TOL: f64 = 1e-20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossingResult {
    pub blue_horizontal: bool,
    pub red_vertical: bool,
}

/// Cell-adjacency graph of a tessellation restricted to a window.
///
/// Only cells meeting the window in positive area take part; two cells are
/// joined when their shared edge has positive length inside the window, and a
/// cell touches a window side when its clipped boundary runs along that side
/// for a positive length. Colors are supplied per query, so one graph serves
/// every coloring of the same sites.
#[derive(Clone, Debug)]
pub struct WindowGraph {
    window: Rect,
    members: Vec<u32>,
    edges: Vec<(u32, u32)>,
    touches: [Vec<u32>; 4],
    n_sites: usize,
}

impl WindowGraph {
    pub fn new(tess: &Tessellation, window: &Rect) -> Self {
        let mut members = Vec::new();
        let mut edges = Vec::new();
        let mut touches: [Vec<u32>; 4] = Default::default();
        let mut clipped = Polygon::default();
        let mut tmp = Polygon::default();
        let tol = EDGE_TOL;
        for i in 0..tess.len() {
            let cell = tess.cell(i);
            let (x0, x1, y0, y1) = bbox(cell.vertices);
            if x1 <= window.a || x0 >= window.b || y1 <= window.c || y0 >= window.d {
                continue;
            }
            let inside = x0 >= window.a && x1 <= window.b && y0 >= window.c && y1 <= window.d;
            let (verts, labels): (&[Point], &[EdgeLabel]) = if inside {
                (cell.vertices, cell.labels)
            } else {
                clipped.vertices.clear();
                clipped.labels.clear();
                clipped.vertices.extend_from_slice(cell.vertices);
                clipped.labels.extend_from_slice(cell.labels);
                for (nx, ny, c, side) in rect_halfplanes(window) {
                    clip_into(&clipped.vertices, &clipped.labels, nx, ny, c, EdgeLabel::Border(side), &mut tmp);
                    std::mem::swap(&mut clipped, &mut tmp);
                    if clipped.is_empty() {
                        break;
                    }
                }
                (&clipped.vertices, &clipped.labels)
            };
            if verts.len() < 3 || polygon_area(verts) <= AREA_TOL {
                continue;
            }
            members.push(i as u32);
            let n = verts.len();
            for k in 0..n {
                let (p, q) = (verts[k], verts[(k + 1) % n]);
                if p.dist(q) <= tol {
                    continue;
                }
                if let Some(side) = side_of_segment(window, p, q) {
                    touches[side.index()].push(i as u32);
                } else if let EdgeLabel::Site(j) = labels[k] {
                    let (lo, hi) = if (i as u32) < j { (i as u32, j) } else { (j, i as u32) };
                    edges.push((lo, hi));
                }
            }
        }
        for t in &mut touches {
            t.sort_unstable();
            t.dedup();
        }
        WindowGraph { window: *window, members, edges, touches, n_sites: tess.len() }
    }

    pub fn window(&self) -> &Rect {
        &self.window
    }

    /// Sites whose cells meet the window in positive area.
    pub fn members(&self) -> &[u32] {
        &self.members
    }

    /// Joined pairs `(lo, hi)`; a pair may appear more than once.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn touching(&self, side: Side) -> &[u32] {
        &self.touches[side.index()]
    }

    /// True iff cells of `color` form a connected set inside the window that
    /// touches both `from` and `to`.
    pub fn connects(&self, colors: &[Color], color: Color, from: Side, to: Side) -> bool {
        self.connects_where(|i| colors[i] == color, from, to)
    }

    pub fn connects_where(&self, open: impl Fn(usize) -> bool, from: Side, to: Side) -> bool {
        let src = self.n_sites;
        let dst = self.n_sites + 1;
        let mut uf = UnionFind::<u32>::new(self.n_sites + 2);
        let mut any_src = false;
        for &i in self.touching(from) {
            if open(i as usize) {
                uf.union(src as u32, i);
                any_src = true;
            }
        }
        if !any_src {
            return false;
        }
        let mut any_dst = false;
        for &i in self.touching(to) {
            if open(i as usize) {
                uf.union(dst as u32, i);
                any_dst = true;
            }
        }
        if !any_dst {
            return false;
        }
        for &(i, j) in &self.edges {
            if open(i as usize) && open(j as usize) {
                uf.union(i, j);
            }
        }
        uf.equiv(src as u32, dst as u32)
    }

    pub fn blue_horizontal(&self, colors: &[Color]) -> bool {
        self.connects(colors, Color::Blue, Side::Left, Side::Right)
    }

    pub fn red_vertical(&self, colors: &[Color]) -> bool {
        self.connects(colors, Color::Red, Side::Bottom, Side::Top)
    }

    pub fn crossing(&self, colors: &[Color]) -> CrossingResult {
        CrossingResult { blue_horizontal: self.blue_horizontal(colors), red_vertical: self.red_vertical(colors) }
    }
}

/// Window side containing the segment `pq`, if any.
pub(crate) fn side_of_segment(w: &Rect, p: Point, q: Point) -> Option<Side> {
    let tol = EDGE_TOL;
    if (p.x - w.a).abs() <= tol && (q.x - w.a).abs() <= tol {
        Some(Side::Left)
    } else if (p.x - w.b).abs() <= tol && (q.x - w.b).abs() <= tol {
        Some(Side::Right)
    } else if (p.y - w.c).abs() <= tol && (q.y - w.c).abs() <= tol {
        Some(Side::Bottom)
    } else if (p.y - w.d).abs() <= tol && (q.y - w.d).abs() <= tol {
        Some(Side::Top)
    } else {
        None
    }
}

/// Both crossing indicators of `rect`; the empty configuration is all red.
pub fn crossing(config: &Configuration, rect: &Rect) -> CrossingResult {
    match Tessellation::build(config) {
        Err(_) => CrossingResult { blue_horizontal: false, red_vertical: true },
        Ok(t) => WindowGraph::new(&t, rect).crossing(&config.colors()),
    }
}

/// `f_R`: a blue path inside `rect` joins its left and right sides.
pub fn has_blue_horizontal_crossing(config: &Configuration, rect: &Rect) -> bool {
    if !config.points.iter().any(|p| p.color.is_blue()) {
        return false;
    }
    crossing(config, rect).blue_horizontal
}

/// A red path inside `rect` joins its bottom and top sides.
pub fn has_red_vertical_crossing(config: &Configuration, rect: &Rect) -> bool {
    if config.points.iter().all(|p| !p.color.is_blue()) {
        return true;
    }
    crossing(config, rect).red_vertical
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{color_of, sample_configuration, ColoredPoint};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(pts: &[(f64, f64, Color)]) -> Configuration {
        Configuration::from_points(
            pts.iter().map(|&(x, y, color)| ColoredPoint { location: Point::new(x, y), color }).collect(),
            pts.len() as f64,
            0.5,
        )
    }

    #[test]
    fn empty_configuration_is_red() {
        let e = Configuration::empty(1.0, 0.5);
        let r = Rect::new(0.1, 0.6, 0.2, 0.9).unwrap();
        assert!(!has_blue_horizontal_crossing(&e, &r));
        assert!(has_red_vertical_crossing(&e, &r));
    }

    #[test]
    fn single_point_colors_everything() {
        let rects = [Rect::unit(), Rect::new(0.1, 0.2, 0.7, 0.95).unwrap()];
        for r in rects {
            let blue = cfg(&[(0.9, 0.1, Color::Blue)]);
            assert!(has_blue_horizontal_crossing(&blue, &r));
            assert!(!has_red_vertical_crossing(&blue, &r));
            let red = cfg(&[(0.9, 0.1, Color::Red)]);
            assert!(has_red_vertical_crossing(&red, &r));
            assert!(!has_blue_horizontal_crossing(&red, &r));
        }
    }

    #[test]
    fn vertical_split() {
        // Left half blue, right half red: no horizontal blue crossing of S,
        // but a rectangle inside the left half is crossed.
        let c = cfg(&[(0.25, 0.5, Color::Blue), (0.75, 0.5, Color::Red)]);
        assert!(!has_blue_horizontal_crossing(&c, &Rect::unit()));
        assert!(has_red_vertical_crossing(&c, &Rect::unit()));
        let left = Rect::new(0.0, 0.4, 0.0, 1.0).unwrap();
        assert!(has_blue_horizontal_crossing(&c, &left));
    }

    #[test]
    fn corner_contact_does_not_connect() {
        // Checkerboard of four cells: blue diagonal meets only at the centre.
        let c = cfg(&[
            (0.25, 0.25, Color::Blue),
            (0.75, 0.75, Color::Blue),
            (0.75, 0.25, Color::Red),
            (0.25, 0.75, Color::Red),
        ]);
        let t = Tessellation::build(&c).unwrap();
        assert!(!t.adjacent(0, 1));
        assert!(!t.adjacent(2, 3));
    }

    #[test]
    fn duality_xor_on_random_configurations() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let rects = [Rect::unit(), Rect::new(0.1, 0.7, 0.3, 0.6).unwrap()];
        for _ in 0..300 {
            let c = sample_configuration(60.0, 0.5, &mut rng).unwrap();
            for r in &rects {
                let x = crossing(&c, r);
                assert!(x.blue_horizontal ^ x.red_vertical);
            }
        }
    }

    #[test]
    fn member_cells_contain_window_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let c = sample_configuration(100.0, 0.5, &mut rng).unwrap();
        let t = Tessellation::build(&c).unwrap();
        let w = Rect::new(0.3, 0.5, 0.2, 0.9).unwrap();
        let g = WindowGraph::new(&t, &w);
        // every nearest site of a window point is a member
        for i in 0..40 {
            for j in 0..40 {
                let q = Point::new(0.3 + 0.2 * (i as f64 + 0.5) / 40.0, 0.2 + 0.7 * (j as f64 + 0.5) / 40.0);
                let near = t.site_grid().nearest(q).unwrap();
                assert!(g.members().contains(&(near as u32)));
                assert_eq!(color_of(q, &c), c.points[near].color);
            }
        }
    }
}
