use crate::error::{Error, Result};
use crate::par::{self, Execution};

#[inline]
fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0) * (a.0 - b.0) + (a.1 - b.1) * (a.1 - b.1)).sqrt()
}

/// Queries further than this many cells from the grid fall back to a linear scan.
const RING_LIMIT: f64 = (1u64 << 20) as f64;

/// Uniform grid over a point set for nearest-neighbor queries.
struct Grid<'a> {
    points: &'a [(f64, f64)],
    x0: f64,
    y0: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    start: Vec<usize>,
    order: Vec<u32>,
}

impl<'a> Grid<'a> {
    fn new(points: &'a [(f64, f64)]) -> Self {
        let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(x, y) in points {
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        let (w, h) = ((x1 - x0).max(1e-300), (y1 - y0).max(1e-300));
        let cell = ((w * h / points.len() as f64).sqrt() * 2.0).max(w.max(h) / 4096.0).max(1e-9);
        let nx = ((w / cell).floor() as usize + 1).min(4096);
        let ny = ((h / cell).floor() as usize + 1).min(4096);
        let mut grid = Grid { points, x0, y0, cell, nx, ny, start: vec![0; nx * ny + 1], order: vec![0; points.len()] };
        for &p in points {
            let c = grid.cell_of(p);
            grid.start[c + 1] += 1;
        }
        for i in 0..nx * ny {
            grid.start[i + 1] += grid.start[i];
        }
        let mut fill = grid.start.clone();
        for (i, &p) in points.iter().enumerate() {
            let c = grid.cell_of(p);
            grid.order[fill[c]] = i as u32;
            fill[c] += 1;
        }
        grid
    }

    /// Cell coordinates, or `None` when they do not fit comfortably in an `i64`.
    fn coords(&self, (x, y): (f64, f64)) -> Option<(i64, i64)> {
        let (cx, cy) = (((x - self.x0) / self.cell).floor(), ((y - self.y0) / self.cell).floor());
        (cx.abs() < RING_LIMIT && cy.abs() < RING_LIMIT).then_some((cx as i64, cy as i64))
    }

    fn cell_of(&self, p: (f64, f64)) -> usize {
        let (cx, cy) = self.coords(p).expect("stored points lie in the grid");
        let cx = cx.clamp(0, self.nx as i64 - 1) as usize;
        let cy = cy.clamp(0, self.ny as i64 - 1) as usize;
        cy * self.nx + cx
    }

    /// Distance from `p` to the nearest stored point, scanning square rings
    /// of cells until no unscanned cell can hold a closer point.
    fn nearest(&self, p: (f64, f64)) -> f64 {
        let Some((cx, cy)) = self.coords(p) else {
            return self.points.iter().map(|&b| dist(p, b)).fold(f64::INFINITY, f64::min);
        };
        let (nx, ny) = (self.nx as i64, self.ny as i64);
        // Rings needed before the query's cell enters the grid.
        let outside = (-cx).max(cx - (nx - 1)).max(-cy).max(cy - (ny - 1)).max(0);
        let mut best = f64::INFINITY;
        let mut r = outside;
        loop {
            let mut any = false;
            for gy in (cy - r).max(0)..=(cy + r).min(ny - 1) {
                let on_edge_y = gy == cy - r || gy == cy + r;
                let xs: Vec<i64> = if on_edge_y {
                    ((cx - r).max(0)..=(cx + r).min(nx - 1)).collect()
                } else {
                    [cx - r, cx + r].into_iter().filter(|&x| x >= 0 && x < nx).collect()
                };
                for gx in xs {
                    any = true;
                    let c = gy as usize * self.nx + gx as usize;
                    for &i in &self.order[self.start[c]..self.start[c + 1]] {
                        best = best.min(dist(p, self.points[i as usize]));
                    }
                }
            }
            // Points in ring r + 1 or beyond are at least r cells away.
            if best <= r as f64 * self.cell || (!any && r > outside + nx.max(ny)) {
                return best;
            }
            r += 1;
        }
    }
}

/// `max_{a in A} min_{b in B} |a − b|`.
pub fn directed_hausdorff(a: &[(f64, f64)], b: &[(f64, f64)], exec: Execution) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Precondition("Hausdorff distance of an empty cloud".into()));
    }
    let grid = Grid::new(b);
    Ok(par::map_slice(exec, a, |&p| grid.nearest(p)).into_iter().fold(0.0, f64::max))
}

/// Discrete Hausdorff distance between two point sets.
pub fn hausdorff_distance(a: &[(f64, f64)], b: &[(f64, f64)], exec: Execution) -> Result<f64> {
    Ok(directed_hausdorff(a, b, exec)?.max(directed_hausdorff(b, a, exec)?))
}

/// All-pairs reference implementation.
pub fn hausdorff_brute_force(a: &[(f64, f64)], b: &[(f64, f64)]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Precondition("Hausdorff distance of an empty cloud".into()));
    }
    let directed = |u: &[(f64, f64)], v: &[(f64, f64)]| u.iter().map(|&p| v.iter().map(|&q| dist(p, q)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max);
    Ok(directed(a, b).max(directed(b, a)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basics() {
        let a = vec![(0.1, 0.2), (0.5, -0.3)];
        assert_eq!(hausdorff_distance(&a, &a, Execution::Sequential).unwrap(), 0.0);
        assert_eq!(hausdorff_distance(&[(0.0, 0.0)], &[(0.3, 0.4)], Execution::Sequential).unwrap(), 0.5);
        assert!(hausdorff_distance(&[], &a, Execution::Sequential).is_err());
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            a in prop::collection::vec((0.0f64..1.0, -1.0f64..1.0), 1..500),
            b in prop::collection::vec((0.0f64..1.0, -0.1f64..0.1), 1..500),
        ) {
            prop_assert_eq!(hausdorff_distance(&a, &b, Execution::Parallel).unwrap(), hausdorff_brute_force(&a, &b).unwrap());
        }

        #[test]
        fn clustered_sets_match(n in 1usize..300, shift in 0.0f64..3.0) {
            let a: Vec<(f64, f64)> = (0..n).map(|i| ((i as f64 * 0.37).fract() * 1e-3, (i as f64 * 0.73).fract() * 1e-3)).collect();
            let b: Vec<(f64, f64)> = vec![(shift, 0.5), (0.5, 0.5), (1e-4, 2e-4)];
            prop_assert_eq!(hausdorff_distance(&a, &b, Execution::Sequential).unwrap(), hausdorff_brute_force(&a, &b).unwrap());
        }
    }
}
