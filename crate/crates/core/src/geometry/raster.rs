//! Pixel-based crossing oracle, independent of the cell construction.
//!
//! Pixel centres are colored by nearest site. Blue crossings use
//! 4-connectivity and red crossings 8-connectivity, which keeps the two
//! discrete events exactly complementary at every resolution.

use std::collections::VecDeque;

use super::{Color, Configuration, CrossingResult, Point, Rect, SiteGrid};
use crate::error::{Error, Result};

pub const ORACLE_START: usize = 64;
pub const ORACLE_CAP: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleOutcome {
    pub result: CrossingResult,
    /// Resolution at which two successive answers first agreed.
    pub resolution: usize,
}

/// Decides both crossings on a `resolution × resolution` pixel grid over `rect`.
pub fn raster_crossing_at(config: &Configuration, rect: &Rect, resolution: usize) -> CrossingResult {
    let res = resolution.max(2);
    let blue = paint(config, rect, res);
    CrossingResult {
        blue_horizontal: blue_left_right(&blue, res),
        red_vertical: red_bottom_top(&blue, res),
    }
}

/// Doubles the resolution from `start` until two successive answers agree.
pub fn raster_crossing_oracle(config: &Configuration, rect: &Rect, start: usize) -> Result<OracleOutcome> {
    raster_crossing_oracle_with_cap(config, rect, start, ORACLE_CAP)
}

pub fn raster_crossing_oracle_with_cap(
    config: &Configuration,
    rect: &Rect,
    start: usize,
    cap: usize,
) -> Result<OracleOutcome> {
    if start < 2 {
        return Err(Error::InvalidParameter(format!("oracle resolution must be >= 2, got {start}")));
    }
    let mut res = start;
    let mut prev = raster_crossing_at(config, rect, res);
    while res * 2 <= cap {
        res *= 2;
        let cur = raster_crossing_at(config, rect, res);
        if cur == prev {
            return Ok(OracleOutcome { result: cur, resolution: res });
        }
        prev = cur;
    }
    Err(Error::OracleUnresolved { cap })
}

/// Row-major blue mask of pixel centres, row 0 at the bottom.
fn paint(config: &Configuration, rect: &Rect, res: usize) -> Vec<bool> {
    if config.is_empty() {
        return vec![false; res * res];
    }
    let sites = config.locations();
    let grid = SiteGrid::new(&sites);
    let (w, h) = (rect.width() / res as f64, rect.height() / res as f64);
    let mut out = vec![false; res * res];
    for j in 0..res {
        let y = rect.c + (j as f64 + 0.5) * h;
        for i in 0..res {
            let x = rect.a + (i as f64 + 0.5) * w;
            let k = grid.nearest(Point::new(x, y)).expect("non-empty");
            out[j * res + i] = config.points[k].color == Color::Blue;
        }
    }
    out
}

fn blue_left_right(blue: &[bool], res: usize) -> bool {
    let mut seen = vec![false; res * res];
    let mut queue = VecDeque::new();
    for j in 0..res {
        let k = j * res;
        if blue[k] {
            seen[k] = true;
            queue.push_back(k);
        }
    }
    while let Some(k) = queue.pop_front() {
        let (i, j) = (k % res, k / res);
        if i == res - 1 {
            return true;
        }
        let mut visit = |ni: usize, nj: usize| {
            let nk = nj * res + ni;
            if blue[nk] && !seen[nk] {
                seen[nk] = true;
                queue.push_back(nk);
            }
        };
        visit(i + 1, j);
        if i > 0 {
            visit(i - 1, j);
        }
        if j + 1 < res {
            visit(i, j + 1);
        }
        if j > 0 {
            visit(i, j - 1);
        }
    }
    false
}

fn red_bottom_top(blue: &[bool], res: usize) -> bool {
    let mut seen = vec![false; res * res];
    let mut queue = VecDeque::new();
    for (i, &b) in blue.iter().enumerate().take(res) {
        if !b {
            seen[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(k) = queue.pop_front() {
        let (i, j) = ((k % res) as isize, (k / res) as isize);
        if j as usize == res - 1 {
            return true;
        }
        for dj in -1..=1isize {
            for di in -1..=1isize {
                let (ni, nj) = (i + di, j + dj);
                if (di, dj) == (0, 0) || ni < 0 || nj < 0 || ni >= res as isize || nj >= res as isize {
                    continue;
                }
                let nk = nj as usize * res + ni as usize;
                if !blue[nk] && !seen[nk] {
                    seen[nk] = true;
                    queue.push_back(nk);
                }
            }
        }
    }
    false
}
