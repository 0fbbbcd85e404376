use crate::error::{Error, Result};
use crate::rational::Rational;

use super::PLMap;

/// Range-extremum index over node values for repeated interval images.
///
/// Stores argmin/argmax node indices in two iterative segment trees, so a
/// query costs `O(log n)` comparisons and no rational allocation beyond the
/// two endpoint evaluations.
pub struct ImageIndex<'a> {
    map: &'a PLMap,
    size: usize,
    min_tree: Vec<u32>,
    max_tree: Vec<u32>,
}

impl<'a> ImageIndex<'a> {
    pub fn new(map: &'a PLMap) -> Self {
        let n = map.node_count();
        let size = n.next_power_of_two();
        let ys = map.ys();
        let mut min_tree = vec![u32::MAX; 2 * size];
        let mut max_tree = vec![u32::MAX; 2 * size];
        for i in 0..n {
            min_tree[size + i] = i as u32;
            max_tree[size + i] = i as u32;
        }
        let pick = |a: u32, b: u32, want_min: bool| -> u32 {
            if a == u32::MAX {
                return b;
            }
            if b == u32::MAX {
                return a;
            }
            let (ya, yb) = (&ys[a as usize], &ys[b as usize]);
            if (ya <= yb) == want_min {
                a
            } else {
                b
            }
        };
        for i in (1..size).rev() {
            min_tree[i] = pick(min_tree[2 * i], min_tree[2 * i + 1], true);
            max_tree[i] = pick(max_tree[2 * i], max_tree[2 * i + 1], false);
        }
        ImageIndex { map, size, min_tree, max_tree }
    }

    pub fn map(&self) -> &PLMap {
        self.map
    }

    /// Min and max node value over node indices `lo..hi` (empty range gives `None`).
    fn node_extrema(&self, lo: usize, hi: usize) -> Option<(&'a Rational, &'a Rational)> {
        if lo >= hi {
            return None;
        }
        let ys = self.map.ys();
        let (mut l, mut r) = (lo + self.size, hi + self.size);
        let mut best_min: Option<usize> = None;
        let mut best_max: Option<usize> = None;
        let take = |node: usize, best_min: &mut Option<usize>, best_max: &mut Option<usize>| {
            let a = self.min_tree[node] as usize;
            let b = self.max_tree[node] as usize;
            if best_min.is_none_or(|m| ys[a] < ys[m]) {
                *best_min = Some(a);
            }
            if best_max.is_none_or(|m| ys[b] > ys[m]) {
                *best_max = Some(b);
            }
        };
        while l < r {
            if l & 1 == 1 {
                take(l, &mut best_min, &mut best_max);
                l += 1;
            }
            if r & 1 == 1 {
                r -= 1;
                take(r, &mut best_min, &mut best_max);
            }
            l >>= 1;
            r >>= 1;
        }
        Some((&ys[best_min.unwrap()], &ys[best_max.unwrap()]))
    }

    /// Exact `(min, max)` of the map over `[a, b]`.
    pub fn image(&self, a: &Rational, b: &Rational) -> Result<(Rational, Rational)> {
        if a > b {
            return Err(Error::Precondition(format!("empty interval [{a}, {b}]")));
        }
        if !self.map.contains(a) || !self.map.contains(b) {
            return Err(Error::Domain {
                x: if self.map.contains(a) { b.clone() } else { a.clone() },
                lo: self.map.domain_lo().clone(),
                hi: self.map.domain_hi().clone(),
            });
        }
        let fa = self.map.eval_unchecked(a);
        let fb = self.map.eval_unchecked(b);
        let (mut lo, mut hi) = if fa <= fb { (fa, fb) } else { (fb, fa) };
        let xs = self.map.xs();
        let start = xs.partition_point(|v| v <= a);
        let end = xs.partition_point(|v| v < b);
        if let Some((mn, mx)) = self.node_extrema(start, end) {
            if *mn < lo {
                lo = mn.clone();
            }
            if *mx > hi {
                hi = mx.clone();
            }
        }
        Ok((lo, hi))
    }
}
