use std::collections::HashMap;

use petgraph::unionfind::UnionFind;

use super::MesoGrid;
use crate::geometry::{polygon_area, EdgeLabel, Point, Rect, Side, EDGE_TOL};

const AREA_TOL: f64 = 1e-20;

/// The part of one blue site's cell inside one safe square and the window.
#[derive(Clone, Debug)]
pub(crate) struct Piece {
    pub site: u32,
    pub square: u32,
    pub min_x: f64,
    pub max_x: f64,
    pub left: bool,
    pub right: bool,
    /// Positive-length contact with a square side lying strictly inside the window.
    pub sides: [bool; 4],
    /// Sites sharing a positive-length edge with this piece.
    pub links: Vec<u32>,
}

impl Piece {
    pub fn from_polygon(
        site: u32,
        square: u32,
        verts: &[Point],
        labels: &[EdgeLabel],
        sq: &Rect,
        window: &Rect,
    ) -> Option<Piece> {
        if verts.len() < 3 || polygon_area(verts) <= AREA_TOL {
            return None;
        }
        let tol = EDGE_TOL;
        let on_x = |p: Point, q: Point, x: f64| (p.x - x).abs() <= tol && (q.x - x).abs() <= tol;
        let on_y = |p: Point, q: Point, y: f64| (p.y - y).abs() <= tol && (q.y - y).abs() <= tol;
        let mut piece = Piece {
            site,
            square,
            min_x: f64::INFINITY,
            max_x: f64::NEG_INFINITY,
            left: false,
            right: false,
            sides: [false; 4],
            links: Vec::new(),
        };
        let n = verts.len();
        for k in 0..n {
            let (p, q) = (verts[k], verts[(k + 1) % n]);
            piece.min_x = piece.min_x.min(p.x);
            piece.max_x = piece.max_x.max(p.x);
            if p.dist(q) <= tol {
                continue;
            }
            if on_x(p, q, window.a) {
                piece.left = true;
            } else if on_x(p, q, window.b) {
                piece.right = true;
            } else if on_y(p, q, window.c) || on_y(p, q, window.d) {
            } else if on_x(p, q, sq.a) && sq.a > window.a + tol {
                piece.sides[Side::Left.index()] = true;
            } else if on_x(p, q, sq.b) && sq.b < window.b - tol {
                piece.sides[Side::Right.index()] = true;
            } else if on_y(p, q, sq.c) && sq.c > window.c + tol {
                piece.sides[Side::Bottom.index()] = true;
            } else if on_y(p, q, sq.d) && sq.d < window.d - tol {
                piece.sides[Side::Top.index()] = true;
            } else if let EdgeLabel::Site(j) = labels[k] {
                piece.links.push(j);
            }
        }
        Some(piece)
    }

    pub fn meets_line(&self, x0: f64) -> bool {
        self.min_x < x0 && x0 < self.max_x
    }
}

/// Blue pieces discovered so far and the joins between them.
#[derive(Default)]
pub(crate) struct Web {
    pieces: Vec<Piece>,
    index: HashMap<(u32, u32), u32>,
    joins: Vec<(u32, u32)>,
}

/// Component flags of a [`Web`] for one line position.
pub(crate) struct Components {
    uf: UnionFind<u32>,
    line: Vec<bool>,
    crossing: bool,
}

impl Web {
    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Adds the blue pieces of a newly safe square and joins them to pieces
    /// already known: other sites in the same square through shared edges,
    /// the same site in edge-adjacent squares through the shared side.
    pub fn add_square(&mut self, grid: &MesoGrid, square: usize, new: Vec<Piece>) {
        let first = self.pieces.len();
        for p in new {
            self.index.insert((p.site, p.square), self.pieces.len() as u32);
            self.pieces.push(p);
        }
        for id in first..self.pieces.len() {
            let p = &self.pieces[id];
            for &j in &p.links {
                if let Some(&q) = self.index.get(&(j, square as u32)) {
                    self.joins.push((id as u32, q));
                }
            }
            for side in Side::ALL {
                if !p.sides[side.index()] {
                    continue;
                }
                if let Some(s2) = grid.edge_neighbor(square, side) {
                    if let Some(&q) = self.index.get(&(p.site, s2 as u32)) {
                        self.joins.push((id as u32, q));
                    }
                }
            }
        }
    }

    pub fn components(&self, x0: f64) -> Components {
        let n = self.pieces.len();
        let mut uf = UnionFind::<u32>::new(n);
        for &(a, b) in &self.joins {
            uf.union(a, b);
        }
        let mut line = vec![false; n];
        let mut left = vec![false; n];
        let mut right = vec![false; n];
        for (i, p) in self.pieces.iter().enumerate() {
            let r = uf.find(i as u32) as usize;
            line[r] |= p.meets_line(x0);
            left[r] |= p.left;
            right[r] |= p.right;
        }
        let crossing = (0..n).any(|r| line[r] && left[r] && right[r]);
        Components { uf, line, crossing }
    }
}

impl Components {
    pub fn crossing(&self) -> bool {
        self.crossing
    }

    pub fn line_connected(&self, piece: usize) -> bool {
        self.line[self.uf.find(piece as u32) as usize]
    }
}

/// Unsafe squares across a side touched by a line-connected blue piece.
pub(crate) fn frontier(web: &Web, comps: &Components, grid: &MesoGrid, safe: &[bool]) -> Vec<usize> {
    let mut mark = vec![false; grid.len()];
    let mut out = Vec::new();
    for (i, p) in web.pieces().iter().enumerate() {
        if !p.sides.iter().any(|&s| s) || !comps.line_connected(i) {
            continue;
        }
        for side in Side::ALL {
            if !p.sides[side.index()] {
                continue;
            }
            if let Some(s2) = grid.edge_neighbor(p.square as usize, side) {
                if !safe[s2] && !mark[s2] {
                    mark[s2] = true;
                    out.push(s2);
                }
            }
        }
    }
    out.sort_unstable();
    out
}
