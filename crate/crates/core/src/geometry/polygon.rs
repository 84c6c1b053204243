use serde::{Deserialize, Serialize};

use super::{Point, Rect};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Origin of a polygon edge: a bisector with another site, or a side of the
/// clipping rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeLabel {
    Site(u32),
    Border(Side),
}

/// Convex polygon with counter-clockwise vertices. `labels[i]` tags the edge
/// from `vertices[i]` to `vertices[i + 1]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Polygon {
    pub vertices: Vec<Point>,
    pub labels: Vec<EdgeLabel>,
}

impl Polygon {
    pub fn from_rect(r: &Rect) -> Self {
        Polygon {
            vertices: vec![
                Point::new(r.a, r.c),
                Point::new(r.b, r.c),
                Point::new(r.b, r.d),
                Point::new(r.a, r.d),
            ],
            labels: vec![
                EdgeLabel::Border(Side::Bottom),
                EdgeLabel::Border(Side::Right),
                EdgeLabel::Border(Side::Top),
                EdgeLabel::Border(Side::Left),
            ],
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() < 3
    }

    pub fn clear(&mut self) {
        self.vertices.clear();
        self.labels.clear();
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.vertices)
    }

    /// Edges as `(start, end, label)`.
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point, EdgeLabel)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n], self.labels[i]))
    }

    pub fn bbox(&self) -> (f64, f64, f64, f64) {
        bbox(&self.vertices)
    }

    /// Keeps the half-plane `nx·x + ny·y ≤ c`, labelling the new edge.
    pub fn clip(&self, nx: f64, ny: f64, c: f64, label: EdgeLabel) -> Polygon {
        let mut out = Polygon::default();
        clip_into(&self.vertices, &self.labels, nx, ny, c, label, &mut out);
        out
    }

    pub fn clip_to_rect(&self, r: &Rect) -> Polygon {
        let mut p = self.clone();
        let mut tmp = Polygon::default();
        for (nx, ny, c, side) in rect_halfplanes(r) {
            clip_into(&p.vertices, &p.labels, nx, ny, c, EdgeLabel::Border(side), &mut tmp);
            std::mem::swap(&mut p, &mut tmp);
            if p.is_empty() {
                p.clear();
                break;
            }
        }
        p
    }
}

pub(crate) fn rect_halfplanes(r: &Rect) -> [(f64, f64, f64, Side); 4] {
    [
        (-1.0, 0.0, -r.a, Side::Left),
        (1.0, 0.0, r.b, Side::Right),
        (0.0, -1.0, -r.c, Side::Bottom),
        (0.0, 1.0, r.d, Side::Top),
    ]
}

pub(crate) fn polygon_area(v: &[Point]) -> f64 {
    let n = v.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        let p = v[i];
        let q = v[(i + 1) % n];
        s += p.x * q.y - q.x * p.y;
    }
    0.5 * s
}

pub(crate) fn bbox(v: &[Point]) -> (f64, f64, f64, f64) {
    let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in v {
        b.0 = b.0.min(p.x);
        b.1 = b.1.max(p.x);
        b.2 = b.2.min(p.y);
        b.3 = b.3.max(p.y);
    }
    b
}

/// Sutherland–Hodgman step against one half-plane, reusing `out`.
pub(crate) fn clip_into(
    verts: &[Point],
    labels: &[EdgeLabel],
    nx: f64,
    ny: f64,
    c: f64,
    label: EdgeLabel,
    out: &mut Polygon,
) {
    out.clear();
    let n = verts.len();
    if n == 0 {
        return;
    }
    for i in 0..n {
        let cur = verts[i];
        let nxt = verts[(i + 1) % n];
        let dc = nx * cur.x + ny * cur.y - c;
        let dn = nx * nxt.x + ny * nxt.y - c;
        let lab = labels[i];
        if dc <= 0.0 {
            out.vertices.push(cur);
            if dn <= 0.0 {
                out.labels.push(lab);
            } else {
                out.labels.push(lab);
                let t = dc / (dc - dn);
                out.vertices.push(lerp(cur, nxt, t));
                out.labels.push(label);
            }
        } else if dn <= 0.0 {
            let t = dc / (dc - dn);
            out.vertices.push(lerp(cur, nxt, t));
            out.labels.push(lab);
        }
    }
    if out.vertices.len() < 3 {
        out.clear();
    }
}

#[inline]
fn lerp(p: Point, q: Point, t: f64) -> Point {
    Point::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_square_in_half() {
        let sq = Polygon::from_rect(&Rect::unit());
        let half = sq.clip(1.0, 0.0, 0.5, EdgeLabel::Site(7));
        assert!((half.area() - 0.5).abs() < 1e-15);
        assert_eq!(half.len(), 4);
        let new_edges: Vec<_> = half.edges().filter(|e| e.2 == EdgeLabel::Site(7)).collect();
        assert_eq!(new_edges.len(), 1);
        assert!((new_edges[0].0.x - 0.5).abs() < 1e-15 && (new_edges[0].1.x - 0.5).abs() < 1e-15);
    }

    #[test]
    fn clip_away_everything() {
        let sq = Polygon::from_rect(&Rect::unit());
        assert!(sq.clip(1.0, 0.0, -0.1, EdgeLabel::Site(0)).is_empty());
    }

    #[test]
    fn clip_to_inner_rect() {
        let sq = Polygon::from_rect(&Rect::unit());
        let r = Rect::new(0.2, 0.7, 0.1, 0.4).unwrap();
        let c = sq.clip_to_rect(&r);
        assert!((c.area() - 0.15).abs() < 1e-14);
    }
}
