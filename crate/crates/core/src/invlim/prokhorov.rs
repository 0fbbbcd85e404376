use std::collections::VecDeque;

use crate::error::{Error, Result};

use super::measure::EmpiricalMeasure;

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Maximum matching size in a bipartite graph with `adj[u]` listing right
/// neighbors of left vertex `u` (Hopcroft–Karp).
pub fn max_matching(adj: &[Vec<usize>], right: usize) -> usize {
    const FREE: usize = usize::MAX;
    let left = adj.len();
    let mut match_l = vec![FREE; left];
    let mut match_r = vec![FREE; right];
    let mut dist = vec![0usize; left];
    let mut size = 0;
    loop {
        // Layer free left vertices by alternating-path distance.
        let mut queue = VecDeque::new();
        for u in 0..left {
            if match_l[u] == FREE {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                let w = match_r[v];
                if w == FREE {
                    found = true;
                } else if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        if !found {
            return size;
        }
        fn augment(u: usize, adj: &[Vec<usize>], match_l: &mut [usize], match_r: &mut [usize], dist: &mut [usize]) -> bool {
            for &v in &adj[u] {
                let w = match_r[v];
                if w == usize::MAX || (dist[w] == dist[u] + 1 && augment(w, adj, match_l, match_r, dist)) {
                    match_l[u] = v;
                    match_r[v] = u;
                    return true;
                }
            }
            dist[u] = usize::MAX;
            false
        }
        for u in 0..left {
            if match_l[u] == FREE && augment(u, adj, &mut match_l, &mut match_r, &mut dist) {
                size += 1;
            }
        }
    }
}

/// Candidate radii: pairwise distances and `k/n`, sorted and deduplicated.
fn lattice(dist: &[Vec<f64>], n: usize) -> Vec<f64> {
    let mut c: Vec<f64> = dist.iter().flatten().copied().chain((0..=n).map(|k| k as f64 / n as f64)).collect();
    c.sort_by(f64::total_cmp);
    c.dedup();
    c
}

fn feasible(eps: f64, matched: usize, n: usize) -> bool {
    (n - matched) as f64 / n as f64 <= eps
}

/// Prokhorov distance between two uniform measures with `n` points each.
///
/// The smallest candidate `ε` for which pairs at distance at most `ε` admit
/// a matching of size at least `n (1 − ε)`. Feasibility is monotone in `ε`,
/// so the lattice is bisected.
pub fn prokhorov_distance(p: &EmpiricalMeasure, q: &EmpiricalMeasure) -> Result<f64> {
    prokhorov_points(&p.points, &q.points)
}

pub fn prokhorov_points(p: &[Vec<f64>], q: &[Vec<f64>]) -> Result<f64> {
    let n = p.len();
    if n != q.len() {
        return Err(Error::Precondition(format!("point counts differ: {n} vs {}", q.len())));
    }
    if n == 0 {
        return Err(Error::Precondition("empty measures".into()));
    }
    let dist: Vec<Vec<f64>> = p.iter().map(|a| q.iter().map(|b| euclidean(a, b)).collect()).collect();
    let cands = lattice(&dist, n);
    let check = |eps: f64| {
        let adj: Vec<Vec<usize>> = dist.iter().map(|row| (0..n).filter(|&j| row[j] <= eps).collect()).collect();
        feasible(eps, max_matching(&adj, n), n)
    };
    let (mut lo, mut hi) = (0usize, cands.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if check(cands[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(cands[lo])
}

/// Same distance by scanning every candidate and every permutation (`n <= 8`).
pub fn prokhorov_brute_force(p: &[Vec<f64>], q: &[Vec<f64>]) -> Result<f64> {
    let n = p.len();
    if n != q.len() || n == 0 || n > 8 {
        return Err(Error::Precondition("brute force needs equal counts between 1 and 8".into()));
    }
    let dist: Vec<Vec<f64>> = p.iter().map(|a| q.iter().map(|b| euclidean(a, b)).collect()).collect();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut perms = Vec::new();
    permutations(&mut perm, 0, &mut perms);
    for eps in lattice(&dist, n) {
        let best = perms.iter().map(|pi| (0..n).filter(|&i| dist[i][pi[i]] <= eps).count()).max().unwrap();
        if feasible(eps, best, n) {
            return Ok(eps);
        }
    }
    unreachable!("eps = 1 is always feasible")
}

fn permutations(v: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == v.len() {
        out.push(v.clone());
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permutations(v, k + 1, out);
        v.swap(k, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|x| vec![*x]).collect()
    }

    #[test]
    fn equal_measures_are_at_zero() {
        let p = pts(&[0.1, 0.5, 0.9]);
        assert_eq!(prokhorov_points(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn singletons() {
        assert_eq!(prokhorov_points(&pts(&[0.0]), &pts(&[0.25])).unwrap(), 0.25);
        assert_eq!(prokhorov_points(&[vec![0.0, 0.0]], &[vec![3.0, 4.0]]).unwrap(), 1.0);
    }

    #[test]
    fn unequal_counts_are_rejected() {
        assert!(prokhorov_points(&pts(&[0.0]), &pts(&[0.0, 1.0])).is_err());
    }

    #[test]
    fn matching_sizes() {
        assert_eq!(max_matching(&[vec![0, 1], vec![0], vec![0]], 2), 2);
        assert_eq!(max_matching(&[vec![], vec![]], 2), 0);
        assert_eq!(max_matching(&[vec![1], vec![0, 2], vec![1]], 3), 2);
    }

    proptest! {
        #[test]
        fn agrees_with_brute_force(n in 1usize..=6, raw in prop::collection::vec(0u32..64, 24)) {
            let p: Vec<Vec<f64>> = (0..n).map(|i| vec![raw[2 * i] as f64 / 64.0, raw[2 * i + 1] as f64 / 64.0]).collect();
            let q: Vec<Vec<f64>> = (0..n).map(|i| vec![raw[12 + 2 * i] as f64 / 64.0, raw[13 + 2 * i] as f64 / 64.0]).collect();
            prop_assert_eq!(prokhorov_points(&p, &q).unwrap(), prokhorov_brute_force(&p, &q).unwrap());
        }

        #[test]
        fn symmetric_and_triangle(raw in prop::collection::vec(0u32..1000, 15)) {
            let cloud = |k: usize| pts(&raw[5 * k..5 * k + 5].iter().map(|v| *v as f64 / 1000.0).collect::<Vec<_>>());
            let (a, b, c) = (cloud(0), cloud(1), cloud(2));
            let d = |x: &[Vec<f64>], y: &[Vec<f64>]| prokhorov_points(x, y).unwrap();
            prop_assert_eq!(d(&a, &b), d(&b, &a));
            prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1.0 / 5.0);
        }
    }
}
