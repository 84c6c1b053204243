use super::Point;

/// Uniform bucket grid over sites in `S`, about one site per bucket.
#[derive(Clone, Debug)]
pub struct SiteGrid {
    per_axis: usize,
    starts: Vec<u32>,
    entries: Vec<u32>,
    sites: Vec<Point>,
}

impl SiteGrid {
    pub fn new(sites: &[Point]) -> Self {
        let per_axis = ((sites.len() as f64).sqrt().ceil() as usize).max(1);
        Self::with_resolution(sites, per_axis)
    }

    pub fn with_resolution(sites: &[Point], per_axis: usize) -> Self {
        let per_axis = per_axis.max(1);
        let nb = per_axis * per_axis;
        let mut counts = vec![0u32; nb + 1];
        let bucket: Vec<usize> = sites.iter().map(|&p| bucket_index(p, per_axis)).collect();
        for &b in &bucket {
            counts[b + 1] += 1;
        }
        for i in 0..nb {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut entries = vec![0u32; sites.len()];
        for (i, &b) in bucket.iter().enumerate() {
            entries[fill[b] as usize] = i as u32;
            fill[b] += 1;
        }
        SiteGrid { per_axis, starts: counts, entries, sites: sites.to_vec() }
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn sites(&self) -> &[Point] {
        &self.sites
    }

    pub fn bucket_of(&self, p: Point) -> (usize, usize) {
        (axis_bucket(p.x, self.per_axis), axis_bucket(p.y, self.per_axis))
    }

    #[inline]
    pub fn bucket(&self, bx: usize, by: usize) -> &[u32] {
        let b = by * self.per_axis + bx;
        &self.entries[self.starts[b] as usize..self.starts[b + 1] as usize]
    }

    /// Lower bound on the distance from `q` (in bucket `(bx, by)`) to any
    /// site in Chebyshev ring `ring` or beyond. `None` once the rings before
    /// `ring` already cover the whole grid.
    pub fn ring_lower_bound(&self, q: Point, bx: usize, by: usize, ring: usize) -> Option<f64> {
        if ring == 0 {
            return Some(0.0);
        }
        let g = self.per_axis as isize;
        let h = 1.0 / self.per_axis as f64;
        let r = ring as isize - 1;
        let (bx, by) = (bx as isize, by as isize);
        let mut lb = f64::INFINITY;
        if bx - r > 0 {
            lb = lb.min(q.x - (bx - r) as f64 * h);
        }
        if bx + r < g - 1 {
            lb = lb.min((bx + r + 1) as f64 * h - q.x);
        }
        if by - r > 0 {
            lb = lb.min(q.y - (by - r) as f64 * h);
        }
        if by + r < g - 1 {
            lb = lb.min((by + r + 1) as f64 * h - q.y);
        }
        lb.is_finite().then_some(lb.max(0.0))
    }

    /// Visits every site index in Chebyshev ring `ring` around `(bx, by)`.
    #[inline]
    pub fn for_each_in_ring(&self, bx: usize, by: usize, ring: usize, mut f: impl FnMut(usize)) {
        let g = self.per_axis as isize;
        let r = ring as isize;
        let (cx, cy) = (bx as isize, by as isize);
        let y0 = (cy - r).max(0);
        let y1 = (cy + r).min(g - 1);
        for y in y0..=y1 {
            let full_row = y == cy - r || y == cy + r;
            if full_row {
                let x0 = (cx - r).max(0);
                let x1 = (cx + r).min(g - 1);
                for x in x0..=x1 {
                    for &i in self.bucket(x as usize, y as usize) {
                        f(i as usize);
                    }
                }
            } else {
                for x in [cx - r, cx + r] {
                    if (0..g).contains(&x) {
                        for &i in self.bucket(x as usize, y as usize) {
                            f(i as usize);
                        }
                    }
                    if r == 0 {
                        break;
                    }
                }
            }
        }
    }

    /// Index of the nearest site, ties to the lowest index.
    pub fn nearest(&self, q: Point) -> Option<usize> {
        self.nearest_filtered(q, |_| true)
    }

    pub fn nearest_filtered(&self, q: Point, keep: impl Fn(usize) -> bool) -> Option<usize> {
        let (bx, by) = self.bucket_of(q);
        let mut best: Option<(f64, usize)> = None;
        let mut ring = 0;
        loop {
            match self.ring_lower_bound(q, bx, by, ring) {
                None => break,
                Some(lb) => {
                    if let Some((d2, _)) = best {
                        if lb * lb > d2 {
                            break;
                        }
                    }
                }
            }
            self.for_each_in_ring(bx, by, ring, |i| {
                if !keep(i) {
                    return;
                }
                let d2 = q.dist2(self.sites[i]);
                let better = match best {
                    None => true,
                    Some((bd, bi)) => d2 < bd || (d2 == bd && i < bi),
                };
                if better {
                    best = Some((d2, i));
                }
            });
            ring += 1;
        }
        best.map(|(_, i)| i)
    }
}

#[inline]
fn axis_bucket(v: f64, per_axis: usize) -> usize {
    ((v * per_axis as f64) as usize).min(per_axis - 1)
}

#[inline]
fn bucket_index(p: Point, per_axis: usize) -> usize {
    axis_bucket(p.y, per_axis) * per_axis + axis_bucket(p.x, per_axis)
}
