use std::collections::{BTreeSet, VecDeque};

use num_integer::Integer;

use crate::error::{Error, Result};
use crate::rational::Rational;

use super::PLMap;

pub const DEFAULT_ORBIT_BUDGET: usize = 10_000;

/// Markov partition data of a PL self-map.
///
/// The image of each cell is a contiguous run of cells, so row `i` of the
/// transition matrix is stored as the half-open index range `rows[i]`.
#[derive(Clone, Debug)]
pub struct MarkovSystem {
    pub partition: Vec<Rational>,
    pub rows: Vec<(usize, usize)>,
    pub is_markov: bool,
    pub is_primitive: bool,
    pub is_leo: bool,
    pub min_abs_slope: Rational,
}

impl MarkovSystem {
    pub fn dimension(&self) -> usize {
        self.rows.len()
    }

    /// Dense 0/1 transition matrix.
    pub fn transition_matrix(&self) -> Vec<Vec<u8>> {
        let n = self.rows.len();
        self.rows.iter().map(|&(a, b)| (0..n).map(|j| u8::from(j >= a && j < b)).collect()).collect()
    }
}

pub fn markov_analysis(f: &PLMap) -> Result<MarkovSystem> {
    markov_analysis_with_budget(f, DEFAULT_ORBIT_BUDGET)
}

/// Closes the node set under `f` and, if it stays within `budget` points,
/// builds the covering matrix and decides primitivity.
pub fn markov_analysis_with_budget(f: &PLMap, budget: usize) -> Result<MarkovSystem> {
    let (lo, hi) = f.range();
    if lo < *f.domain_lo() || hi > *f.domain_hi() {
        return Err(Error::Precondition("Markov analysis needs a self-map".into()));
    }
    let min_abs_slope = f.min_abs_slope();
    let mut points: BTreeSet<Rational> = f.xs().iter().cloned().collect();
    let mut queue: VecDeque<Rational> = points.iter().cloned().collect();
    while let Some(p) = queue.pop_front() {
        let y = f.eval_unchecked(&p);
        if points.insert(y.clone()) {
            if points.len() > budget {
                return Ok(MarkovSystem { partition: Vec::new(), rows: Vec::new(), is_markov: false, is_primitive: false, is_leo: false, min_abs_slope });
            }
            queue.push_back(y);
        }
    }
    let partition: Vec<Rational> = points.into_iter().collect();
    let values = f.eval_sorted(&partition)?;
    let index = |y: &Rational| partition.binary_search(y).expect("partition closed under f");
    let rows: Vec<(usize, usize)> = values
        .windows(2)
        .map(|w| {
            let (a, b) = (index(&w[0]), index(&w[1]));
            (a.min(b), a.max(b))
        })
        .collect();
    let is_primitive = range_graph_is_primitive(&rows);
    let is_leo = is_primitive && min_abs_slope > Rational::one();
    Ok(MarkovSystem { partition, rows, is_markov: true, is_primitive, is_leo, min_abs_slope })
}

/// Nodes reachable from `start` when node `u` has edges to every `v` in `rows[u]`.
fn forward_levels(rows: &[(usize, usize)], start: usize) -> Vec<Option<u64>> {
    let n = rows.len();
    let mut level = vec![None; n];
    let mut unvisited: BTreeSet<usize> = (0..n).collect();
    unvisited.remove(&start);
    level[start] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        let (a, b) = rows[u];
        let hit: Vec<usize> = unvisited.range(a..b).copied().collect();
        for v in hit {
            unvisited.remove(&v);
            level[v] = Some(level[u].unwrap() + 1);
            queue.push_back(v);
        }
    }
    level
}

/// Whether every node reaches `target`, via a stabbing search over row ranges.
fn all_reach(rows: &[(usize, usize)], target: usize) -> bool {
    let n = rows.len();
    // Rows sorted by range start; a max-segment-tree over range ends finds
    // an unvisited row whose range contains a given node.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&u| rows[u].0);
    let starts: Vec<usize> = order.iter().map(|&u| rows[u].0).collect();
    let size = n.next_power_of_two();
    let mut tree = vec![0usize; 2 * size];
    for (i, &u) in order.iter().enumerate() {
        tree[size + i] = rows[u].1;
    }
    for i in (1..size).rev() {
        tree[i] = tree[2 * i].max(tree[2 * i + 1]);
    }
    let remove = |pos: usize, tree: &mut Vec<usize>| {
        let mut i = pos + size;
        tree[i] = 0;
        while i > 1 {
            i /= 2;
            tree[i] = tree[2 * i].max(tree[2 * i + 1]);
        }
    };
    // Leftmost position in [0, limit) whose stored end exceeds v.
    fn find(tree: &[usize], node: usize, lo: usize, hi: usize, limit: usize, v: usize) -> Option<usize> {
        if lo >= limit || tree[node] <= v {
            return None;
        }
        if hi - lo == 1 {
            return Some(lo);
        }
        let mid = (lo + hi) / 2;
        find(tree, 2 * node, lo, mid, limit, v).or_else(|| find(tree, 2 * node + 1, mid, hi, limit, v))
    }
    let pos_of: Vec<usize> = {
        let mut p = vec![0; n];
        for (i, &u) in order.iter().enumerate() {
            p[u] = i;
        }
        p
    };
    let mut seen = vec![false; n];
    seen[target] = true;
    remove(pos_of[target], &mut tree);
    let mut count = 1;
    let mut stack = vec![target];
    while let Some(v) = stack.pop() {
        let limit = starts.partition_point(|&s| s <= v);
        while let Some(pos) = find(&tree, 1, 0, size, limit, v) {
            let u = order[pos];
            remove(pos, &mut tree);
            if !seen[u] {
                seen[u] = true;
                count += 1;
                stack.push(u);
            }
        }
    }
    count == n
}

/// Primitivity of the 0/1 matrix with row supports `rows`: strongly connected
/// and aperiodic (gcd of cycle lengths 1).
pub(crate) fn range_graph_is_primitive(rows: &[(usize, usize)]) -> bool {
    let n = rows.len();
    if n == 0 {
        return false;
    }
    let level = forward_levels(rows, 0);
    if level.iter().any(Option::is_none) || !all_reach(rows, 0) {
        return false;
    }
    let lv: Vec<i64> = level.iter().map(|l| l.unwrap() as i64).collect();
    // gcd over edges u->v of lv[u] + 1 - lv[v]; within a row's range this is
    // gcd(lv[u] + 1 - lv[a], gcd of consecutive level differences in the range).
    let diffs: Vec<i64> = lv.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let size = diffs.len().max(1).next_power_of_two();
    let mut tree = vec![0i64; 2 * size];
    for (i, d) in diffs.iter().enumerate() {
        tree[size + i] = *d;
    }
    for i in (1..size).rev() {
        tree[i] = tree[2 * i].gcd(&tree[2 * i + 1]);
    }
    let range_gcd = |mut l: usize, mut r: usize| {
        let mut g = 0i64;
        l += size;
        r += size;
        while l < r {
            if l & 1 == 1 {
                g = g.gcd(&tree[l]);
                l += 1;
            }
            if r & 1 == 1 {
                r -= 1;
                g = g.gcd(&tree[r]);
            }
            l >>= 1;
            r >>= 1;
        }
        g
    };
    let mut period = 0i64;
    for (u, &(a, b)) in rows.iter().enumerate() {
        if a >= b {
            continue;
        }
        period = period.gcd(&(lv[u] + 1 - lv[a]));
        period = period.gcd(&range_gcd(a, b - 1));
        if period == 1 {
            return true;
        }
    }
    period == 1
}
