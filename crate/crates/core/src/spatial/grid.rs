//! Bucket grid for nearest-point queries on a square torus.

/// Points of a `side × side` square bucketed into square cells. Distances
/// wrap around the edges unless the grid is built with `wrap = false`.
#[derive(Debug, Clone)]
pub struct TorusGrid {
    side: f64,
    wrap: bool,
    cells: usize,
    cell: f64,
    /// `start[c]..start[c + 1]` indexes `xs`/`ys`/`ids` for cell `c`.
    start: Vec<usize>,
    xs: Vec<f64>,
    ys: Vec<f64>,
    ids: Vec<usize>,
}

/// Shortest offset between two coordinates on a circle of length `side`.
#[inline]
pub fn wrap_delta(a: f64, b: f64, side: f64) -> f64 {
    let d = (a - b).abs();
    d.min(side - d)
}

#[inline]
pub fn torus_dist2(a: (f64, f64), b: (f64, f64), side: f64) -> f64 {
    let dx = wrap_delta(a.0, b.0, side);
    let dy = wrap_delta(a.1, b.1, side);
    dx * dx + dy * dy
}

impl TorusGrid {
    /// `points_per_cell` is the target mean occupancy.
    pub fn new(points: &[(f64, f64)], side: f64, points_per_cell: f64, wrap: bool) -> Self {
        let density = points.len() as f64 / (side * side);
        let target = (points_per_cell / density.max(f64::MIN_POSITIVE)).sqrt();
        let cells = ((side / target).floor() as usize).clamp(1, 4096);
        let cell = side / cells as f64;

        let cell_of = |p: &(f64, f64)| {
            let cx = ((p.0 / cell) as usize).min(cells - 1);
            let cy = ((p.1 / cell) as usize).min(cells - 1);
            cy * cells + cx
        };
        let mut start = vec![0usize; cells * cells + 1];
        for p in points {
            start[cell_of(p) + 1] += 1;
        }
        for c in 0..cells * cells {
            start[c + 1] += start[c];
        }
        let mut fill = start.clone();
        let mut xs = vec![0.0; points.len()];
        let mut ys = vec![0.0; points.len()];
        let mut ids = vec![0; points.len()];
        for (i, p) in points.iter().enumerate() {
            let c = cell_of(p);
            let k = fill[c];
            fill[c] += 1;
            xs[k] = p.0;
            ys[k] = p.1;
            ids[k] = i;
        }
        TorusGrid {
            side,
            wrap,
            cells,
            cell,
            start,
            xs,
            ys,
            ids,
        }
    }

    #[inline]
    pub fn dist2(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        if self.wrap {
            torus_dist2(a, b, self.side)
        } else {
            let (dx, dy) = (a.0 - b.0, a.1 - b.1);
            dx * dx + dy * dy
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Index (into the original slice) and squared distance of the point
    /// closest to `q`, or `None` for an empty grid.
    pub fn nearest(&self, q: (f64, f64)) -> Option<(usize, f64)> {
        if self.is_empty() {
            return None;
        }
        let n = self.cells as isize;
        let hx = ((q.0 / self.cell) as isize).min(n - 1);
        let hy = ((q.1 / self.cell) as isize).min(n - 1);
        let mut best = (usize::MAX, f64::INFINITY);
        let mut ring = 0isize;
        loop {
            let mut visit = |cx: isize, cy: isize| {
                if !self.wrap && !((0..n).contains(&cx) && (0..n).contains(&cy)) {
                    return;
                }
                let c = (cy.rem_euclid(n) * n + cx.rem_euclid(n)) as usize;
                for k in self.start[c]..self.start[c + 1] {
                    let d2 = self.dist2(q, (self.xs[k], self.ys[k]));
                    if d2 < best.1 {
                        best = (self.ids[k], d2);
                    }
                }
            };
            if ring == 0 {
                visit(hx, hy);
            } else {
                for dx in -ring..=ring {
                    visit(hx + dx, hy - ring);
                    visit(hx + dx, hy + ring);
                }
                for dy in -ring + 1..ring {
                    visit(hx - ring, hy + dy);
                    visit(hx + ring, hy + dy);
                }
            }
            // Anything outside the scanned block is at least `ring` cells away.
            let reach = ring as f64 * self.cell;
            let covered = if self.wrap { 2 * ring + 1 >= n } else { ring >= n };
            if (best.0 != usize::MAX && best.1 <= reach * reach) || covered {
                return Some(best);
            }
            ring += 1;
        }
    }
}
