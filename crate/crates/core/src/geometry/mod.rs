//! Colored Poisson configurations on the unit square, their clipped Voronoi
//! tessellations, and exact crossing decisions.
//!
//! A configuration is a finite sequence of colored sites in `S = [0,1]²`.
//! Every point of `S` takes the color of its nearest site; an empty
//! configuration colors the whole square red. Crossings of a rectangle are
//! decided on the cell-adjacency graph, where two cells are adjacent only
//! when they share a boundary segment of positive length inside the window.

mod crossing;
mod polygon;
mod raster;
mod site_grid;
mod tessellation;

pub use crossing::{
    crossing, has_blue_horizontal_crossing, has_red_vertical_crossing, CrossingResult,
    WindowGraph,
};
pub use polygon::{EdgeLabel, Polygon, Side};
pub use raster::{
    raster_crossing_at, raster_crossing_oracle, raster_crossing_oracle_with_cap, OracleOutcome,
    ORACLE_CAP, ORACLE_START,
};
pub use site_grid::SiteGrid;
pub(crate) use polygon::polygon_area;
pub(crate) use tessellation::{compute_cell, CellScratch};
pub use tessellation::{max_cell_radius, CellRef, Tessellation};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{check_nonneg, check_prob, Error, Result};

/// Segments shorter than this do not connect cells.
pub const EDGE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    #[inline]
    pub fn dist2(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn dist(self, other: Point) -> f64 {
        self.dist2(other).sqrt()
    }

    pub fn in_unit_square(self) -> bool {
        (0.0..=1.0).contains(&self.x) && (0.0..=1.0).contains(&self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Color {
    Red = 0,
    Blue = 1,
}

impl Color {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Color::Blue
        } else {
            Color::Red
        }
    }

    pub fn is_blue(self) -> bool {
        self == Color::Blue
    }

    pub fn flipped(self) -> Self {
        match self {
            Color::Red => Color::Blue,
            Color::Blue => Color::Red,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColoredPoint {
    pub location: Point,
    pub color: Color,
}

/// A finite colored point set in the unit square.
///
/// The order of `points` is the sampling order; couplings and revealment
/// statistics identify points by their index in this sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub points: Vec<ColoredPoint>,
    /// Intensity `n` the configuration was sampled at.
    pub intensity: f64,
    /// Blue probability `p` the configuration was sampled at.
    pub blue_prob: f64,
}

impl Configuration {
    pub fn empty(intensity: f64, blue_prob: f64) -> Self {
        Configuration { points: Vec::new(), intensity, blue_prob }
    }

    pub fn from_points(points: Vec<ColoredPoint>, intensity: f64, blue_prob: f64) -> Self {
        Configuration { points, intensity, blue_prob }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn locations(&self) -> Vec<Point> {
        self.points.iter().map(|p| p.location).collect()
    }

    pub fn colors(&self) -> Vec<Color> {
        self.points.iter().map(|p| p.color).collect()
    }

    pub fn blue_count(&self) -> usize {
        self.points.iter().filter(|p| p.color.is_blue()).count()
    }

    /// Red sites (`ξ`) in sampling order.
    pub fn red(&self) -> impl Iterator<Item = Point> + '_ {
        self.points.iter().filter(|p| !p.color.is_blue()).map(|p| p.location)
    }

    /// Blue sites (`ζ`) in sampling order.
    pub fn blue(&self) -> impl Iterator<Item = Point> + '_ {
        self.points.iter().filter(|p| p.color.is_blue()).map(|p| p.location)
    }

    /// Same positions with every color replaced.
    pub fn with_colors(&self, colors: &[Color]) -> Configuration {
        assert_eq!(colors.len(), self.points.len());
        let points = self
            .points
            .iter()
            .zip(colors)
            .map(|(p, &color)| ColoredPoint { location: p.location, color })
            .collect();
        Configuration { points, ..self.clone() }
    }

    /// Points whose mask bit is set, in order.
    pub fn subset(&self, mask: &[bool], intensity: f64) -> Configuration {
        assert_eq!(mask.len(), self.points.len());
        let points = self.points.iter().zip(mask).filter(|(_, &m)| m).map(|(p, _)| *p).collect();
        Configuration { points, intensity, blue_prob: self.blue_prob }
    }
}

/// Axis-aligned rectangle `[a,b]×[c,d] ⊆ S` with positive width and height.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Rect {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let ok = [a, b, c, d].iter().all(|v| v.is_finite())
            && 0.0 <= a
            && a < b
            && b <= 1.0
            && 0.0 <= c
            && c < d
            && d <= 1.0;
        if ok {
            Ok(Rect { a, b, c, d })
        } else {
            Err(Error::InvalidParameter(format!(
                "rect [{a},{b}]x[{c},{d}] must satisfy 0 <= a < b <= 1 and 0 <= c < d <= 1"
            )))
        }
    }

    pub const fn unit() -> Self {
        Rect { a: 0.0, b: 1.0, c: 0.0, d: 1.0 }
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    pub fn height(&self) -> f64 {
        self.d - self.c
    }

    pub fn contains(&self, p: Point) -> bool {
        self.a <= p.x && p.x <= self.b && self.c <= p.y && p.y <= self.d
    }

    /// Intersection with another rectangle, `None` when it has empty interior.
    pub fn intersect(&self, other: &Rect) -> Option<Rect> {
        let a = self.a.max(other.a);
        let b = self.b.min(other.b);
        let c = self.c.max(other.c);
        let d = self.d.min(other.d);
        (a < b && c < d).then_some(Rect { a, b, c, d })
    }

    /// Coordinate of the given side.
    pub fn side(&self, side: Side) -> f64 {
        match side {
            Side::Left => self.a,
            Side::Right => self.b,
            Side::Bottom => self.c,
            Side::Top => self.d,
        }
    }
}

pub(crate) fn poisson_count<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> usize {
    if lambda <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(lambda).expect("finite positive Poisson mean");
    dist.sample(rng) as usize
}

/// Uniform point in `S`.
#[inline]
pub(crate) fn uniform_point<R: Rng + ?Sized>(rng: &mut R) -> Point {
    let x = rng.random::<f64>();
    let y = rng.random::<f64>();
    Point { x, y }
}

/// Poisson(`n`) uniform sites, each carrying a uniform color mark.
///
/// A site is blue at level `p` iff its mark is below `p`, so one draw
/// realizes the monotone coupling of all `p` at once.
pub fn sample_marked<R: Rng + ?Sized>(n: f64, rng: &mut R) -> Result<(Vec<Point>, Vec<f64>)> {
    check_nonneg("intensity", n)?;
    let count = poisson_count(n, rng);
    let mut sites = Vec::with_capacity(count);
    let mut marks = Vec::with_capacity(count);
    for _ in 0..count {
        sites.push(uniform_point(rng));
        marks.push(rng.random::<f64>());
    }
    Ok((sites, marks))
}

/// Colors of marked sites at blue probability `p`.
pub fn colors_at(marks: &[f64], p: f64) -> Vec<Color> {
    marks.iter().map(|&u| Color::from_bit(u < p)).collect()
}

/// Samples `η ~ P_{n,p}`: a Poisson(`n`) number of i.i.d. uniform sites with
/// i.i.d. Bernoulli(`p`) blue colors.
pub fn sample_configuration<R: Rng + ?Sized>(n: f64, p: f64, rng: &mut R) -> Result<Configuration> {
    check_prob("p", p)?;
    let (sites, marks) = sample_marked(n, rng)?;
    let points = sites
        .into_iter()
        .zip(marks)
        .map(|(location, u)| ColoredPoint { location, color: Color::from_bit(u < p) })
        .collect();
    Ok(Configuration { points, intensity: n, blue_prob: p })
}

/// Color of the site nearest to `q`; ties go to the lowest index and the
/// empty configuration is red everywhere.
pub fn color_of(q: Point, config: &Configuration) -> Color {
    let mut best: Option<(f64, Color)> = None;
    for p in &config.points {
        let d2 = q.dist2(p.location);
        if best.is_none_or(|(bd, _)| d2 < bd) {
            best = Some((d2, p.color));
        }
    }
    best.map_or(Color::Red, |(_, c)| c)
}
