//! Exact crookedness checks on long compositions without expanding them.
//!
//! For a chain `F = M_0 ∘ M_1 ∘ … ∘ M_{m-1}` the value path of `F` over an
//! interval is the concatenation of value paths of the shorter chain over the
//! images of `M_{m-1}`'s pieces. The crookedness condition for a pair `(a, b)`
//! is recognized by a four-state automaton reading that path, so every
//! sub-path reduces to a transition summary and summaries compose. Each level
//! keeps a segment tree of per-piece summaries, and the finitely many
//! distinct sub-paths are planned once and re-evaluated per pair.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exactmap::{ImageIndex, PLMap};
use crate::par::Execution;
use crate::rational::Rational;

use super::crooked::{check_pairs, value_grid, CheckMode, CrookednessReport, PairCheck};

// Automaton states.
const IDLE: u8 = 0; // no a-point seen
const ARMED: u8 = 1; // latest a-point seen, b-band not yet entered
const ENTERED: u8 = 2; // b-band entered, a-band not revisited
const SAFE: u8 = 3; // a-band revisited after the entry

/// For each start state, the end state and whether a violation occurred,
/// packed as three bits per state.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
struct Summary(u16);

impl Summary {
    const IDENTITY: Summary = Summary((1 << 3) | (2 << 6) | (3 << 9));

    fn get(self, s: u8) -> (u8, bool) {
        let bits = (self.0 >> (3 * s as u16)) & 0b111;
        ((bits & 0b11) as u8, bits & 0b100 != 0)
    }

    fn from_fn(f: impl Fn(u8) -> (u8, bool)) -> Summary {
        let mut v = 0u16;
        for s in 0..4u8 {
            let (e, viol) = f(s);
            v |= ((e as u16) | if viol { 4 } else { 0 }) << (3 * s as u16);
        }
        Summary(v)
    }

    /// `self` followed by `next`.
    fn then(self, next: Summary) -> Summary {
        Summary::from_fn(|s| {
            let (m, v1) = self.get(s);
            let (e, v2) = next.get(m);
            (e, v1 || v2)
        })
    }
}

/// Classification of one point or open cell of the value path.
#[derive(Clone, Copy, Default)]
struct Atom {
    is_a: bool,
    is_b: bool,
    in_a_band: bool,
    in_b_band: bool,
}

impl Atom {
    fn summary(self) -> Summary {
        Summary::from_fn(|s| {
            if self.is_a {
                return (ARMED, false);
            }
            let mut st = s;
            if self.in_b_band && st == ARMED {
                st = ENTERED;
            }
            if self.in_a_band && st == ENTERED {
                st = SAFE;
            }
            (st, self.is_b && st == ENTERED)
        })
    }
}

#[derive(Clone, Debug)]
enum Part {
    /// Sub-path at the level below, lying on piece `piece` of this level's map.
    Child { id: u32, piece: u32 },
    /// Whole pieces `start..end`, walked forward or backward.
    Range { start: u32, end: u32, forward: bool },
}

#[derive(Clone, Debug)]
struct Query {
    p: Rational,
    q: Rational,
    parts: Vec<Part>,
}

#[derive(Default)]
struct Level {
    queries: Vec<Query>,
    index: HashMap<(Rational, Rational), u32>,
    /// Per piece of this level's map, the ids (one level down) of the
    /// forward and backward full-piece sub-paths.
    leaves_fwd: Vec<u32>,
    leaves_rev: Vec<u32>,
}

impl Level {
    fn intern(&mut self, p: Rational, q: Rational) -> u32 {
        if let Some(&id) = self.index.get(&(p.clone(), q.clone())) {
            return id;
        }
        let id = self.queries.len() as u32;
        self.index.insert((p.clone(), q.clone()), id);
        self.queries.push(Query { p, q, parts: Vec::new() });
        id
    }
}

/// Planned evaluator of crookedness for a composition chain.
pub struct ChainChecker {
    /// Outermost first: the chain is `maps[0] ∘ … ∘ maps[m-1]`.
    maps: Vec<Arc<PLMap>>,
    /// `levels[i]` holds sub-paths of the chain `maps[0] ∘ … ∘ maps[i-1]`.
    levels: Vec<Level>,
    top_fwd: u32,
    top_rev: u32,
    /// Sorted distinct endpoints of the level-0 sub-paths.
    endpoints: Vec<Rational>,
    /// Level-0 sub-paths as endpoint indices.
    base: Vec<(u32, u32)>,
}

struct Evaluation {
    /// `sums[i][id]` for every level.
    sums: Vec<Vec<Summary>>,
}

/// Breakpoint of a monotone value sweep: a sub-path endpoint or a critical value.
#[derive(Clone, Copy)]
enum Bp {
    End(u32),
    Crit(usize),
}

/// Per-pair comparison data for the level-0 sweeps.
struct CritTable {
    /// Distinct sorted critical values.
    values: Vec<Rational>,
    /// For each critical value, `(position among endpoints, equals endpoint at that position)`.
    ranks: Vec<(usize, bool)>,
    a: usize,
    b: usize,
    a_lo: usize,
    a_hi: usize,
    b_lo: usize,
    b_hi: usize,
}

impl CritTable {
    fn new(endpoints: &[Rational], a: &Rational, b: &Rational, delta: &Rational) -> Self {
        let raw = [a - delta, a.clone(), a + delta, b - delta, b.clone(), b + delta];
        let mut values: Vec<Rational> = raw.to_vec();
        values.sort();
        values.dedup();
        let pos = |v: &Rational| values.binary_search(v).unwrap();
        let ranks = values
            .iter()
            .map(|c| {
                let p = endpoints.partition_point(|e| e < c);
                (p, p < endpoints.len() && endpoints[p] == *c)
            })
            .collect();
        CritTable { a_lo: pos(&raw[0]), a: pos(&raw[1]), a_hi: pos(&raw[2]), b_lo: pos(&raw[3]), b: pos(&raw[4]), b_hi: pos(&raw[5]), values, ranks }
    }

    /// Order of a breakpoint relative to critical value `c`.
    fn cmp(&self, x: Bp, c: usize) -> Ordering {
        match x {
            Bp::Crit(i) => i.cmp(&c),
            Bp::End(e) => {
                let (p, eq) = self.ranks[c];
                let e = e as usize;
                if e < p {
                    Ordering::Less
                } else if e == p && eq {
                    Ordering::Equal
                } else {
                    Ordering::Greater
                }
            }
        }
    }

    fn point_atom(&self, x: Bp) -> Atom {
        Atom {
            is_a: self.cmp(x, self.a) == Ordering::Equal,
            is_b: self.cmp(x, self.b) == Ordering::Equal,
            in_a_band: self.cmp(x, self.a_lo) == Ordering::Greater && self.cmp(x, self.a_hi) == Ordering::Less,
            in_b_band: self.cmp(x, self.b_lo) == Ordering::Greater && self.cmp(x, self.b_hi) == Ordering::Less,
        }
    }

    /// Open cell between breakpoints `u < w` containing no critical value.
    fn cell_atom(&self, u: Bp, w: Bp) -> Atom {
        Atom {
            is_a: false,
            is_b: false,
            in_a_band: self.cmp(u, self.a_lo) != Ordering::Less && self.cmp(w, self.a_hi) != Ordering::Greater,
            in_b_band: self.cmp(u, self.b_lo) != Ordering::Less && self.cmp(w, self.b_hi) != Ordering::Greater,
        }
    }

    /// Summary of the straight sweep from endpoint `p` to endpoint `q`.
    fn sweep(&self, p: u32, q: u32) -> Summary {
        let mut s = self.point_atom(Bp::End(p)).summary();
        if p == q {
            return s;
        }
        let rising = p < q;
        let between: Vec<usize> = (0..self.values.len())
            .filter(|&c| {
                let cp = self.cmp(Bp::End(p), c);
                let cq = self.cmp(Bp::End(q), c);
                if rising {
                    cp == Ordering::Less && cq == Ordering::Greater
                } else {
                    cp == Ordering::Greater && cq == Ordering::Less
                }
            })
            .collect();
        let mut prev = Bp::End(p);
        let order: Box<dyn Iterator<Item = &usize>> = if rising { Box::new(between.iter()) } else { Box::new(between.iter().rev()) };
        for &c in order {
            let cell = if rising { self.cell_atom(prev, Bp::Crit(c)) } else { self.cell_atom(Bp::Crit(c), prev) };
            s = s.then(cell.summary()).then(self.point_atom(Bp::Crit(c)).summary());
            prev = Bp::Crit(c);
        }
        let cell = if rising { self.cell_atom(prev, Bp::End(q)) } else { self.cell_atom(Bp::End(q), prev) };
        s.then(cell.summary()).then(self.point_atom(Bp::End(q)).summary())
    }
}

/// Segment tree over summaries, folding either left-to-right or right-to-left.
struct SumTree {
    size: usize,
    nodes: Vec<Summary>,
    forward: bool,
}

impl SumTree {
    fn new(leaves: &[Summary], forward: bool) -> Self {
        let size = leaves.len().max(1).next_power_of_two();
        let mut nodes = vec![Summary::IDENTITY; 2 * size];
        nodes[size..size + leaves.len()].copy_from_slice(leaves);
        for i in (1..size).rev() {
            let (l, r) = (nodes[2 * i], nodes[2 * i + 1]);
            nodes[i] = if forward { l.then(r) } else { r.then(l) };
        }
        SumTree { size, nodes, forward }
    }

    /// Fold over leaves `l..r` in walking order.
    fn fold(&self, l: usize, r: usize) -> Summary {
        let (mut l, mut r) = (l + self.size, r + self.size);
        let mut left = Summary::IDENTITY;
        let mut right = Summary::IDENTITY;
        while l < r {
            if l & 1 == 1 {
                left = if self.forward { left.then(self.nodes[l]) } else { self.nodes[l].then(left) };
                l += 1;
            }
            if r & 1 == 1 {
                r -= 1;
                right = if self.forward { self.nodes[r].then(right) } else { right.then(self.nodes[r]) };
            }
            l >>= 1;
            r >>= 1;
        }
        if self.forward {
            left.then(right)
        } else {
            right.then(left)
        }
    }
}

fn piece_slope_inverse(map: &PLMap, k: usize, u: &Rational) -> Rational {
    let (x0, x1) = (&map.xs()[k], &map.xs()[k + 1]);
    let (y0, y1) = (&map.ys()[k], &map.ys()[k + 1]);
    if u == y0 {
        return x0.clone();
    }
    if u == y1 {
        return x1.clone();
    }
    x0 + (u - y0) * (x1 - x0) / (y1 - y0)
}

impl ChainChecker {
    /// Planner for `maps[0] ∘ maps[1] ∘ … ∘ maps[m-1]`.
    pub fn new(maps: Vec<Arc<PLMap>>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::Precondition("empty chain".into()));
        }
        for w in maps.windows(2) {
            let (lo, hi) = w[1].range();
            if lo < *w[0].domain_lo() || hi > *w[0].domain_hi() {
                return Err(Error::Composition("chain links do not compose".into()));
            }
        }
        let m = maps.len();
        let mut levels: Vec<Level> = (0..=m).map(|_| Level::default()).collect();
        let inner = &maps[m - 1];
        let top_fwd = levels[m].intern(inner.domain_lo().clone(), inner.domain_hi().clone());
        let top_rev = levels[m].intern(inner.domain_hi().clone(), inner.domain_lo().clone());
        for i in (1..=m).rev() {
            let map = maps[i - 1].clone();
            let (upper, lower) = {
                let (lo, hi) = levels.split_at_mut(i);
                (&mut hi[0], &mut lo[i - 1])
            };
            let mut any_range = false;
            for qi in 0..upper.queries.len() {
                let (p, q) = (upper.queries[qi].p.clone(), upper.queries[qi].q.clone());
                let parts = decompose(&map, &p, &q, lower);
                any_range |= parts.iter().any(|pt| matches!(pt, Part::Range { .. }));
                upper.queries[qi].parts = parts;
            }
            if any_range {
                let ys = map.ys();
                upper.leaves_fwd = (0..map.piece_count()).map(|k| lower.intern(ys[k].clone(), ys[k + 1].clone())).collect();
                upper.leaves_rev = (0..map.piece_count()).map(|k| lower.intern(ys[k + 1].clone(), ys[k].clone())).collect();
            }
        }
        let mut endpoints: Vec<Rational> = levels[0].queries.iter().flat_map(|q| [q.p.clone(), q.q.clone()]).collect();
        endpoints.sort();
        endpoints.dedup();
        let idx = |v: &Rational| endpoints.binary_search(v).unwrap() as u32;
        let base = levels[0].queries.iter().map(|q| (idx(&q.p), idx(&q.q))).collect();
        Ok(ChainChecker { maps, levels, top_fwd, top_rev, endpoints, base })
    }

    /// Planner for the `n`-th iterate of `f`.
    pub fn power(f: &PLMap, n: usize) -> Result<Self> {
        if n == 0 {
            return Self::new(vec![Arc::new(PLMap::identity(f.domain_lo().clone(), f.domain_hi().clone()))]);
        }
        Self::power_shared(Arc::new(f.clone()), n)
    }

    /// `f^n` without copying `f`.
    pub fn power_shared(f: Arc<PLMap>, n: usize) -> Result<Self> {
        if n == 0 {
            return Self::power(&f, 0);
        }
        Self::new(vec![f; n])
    }

    pub fn depth(&self) -> usize {
        self.maps.len()
    }

    /// Number of planned sub-paths per level, bottom first.
    pub fn plan_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.queries.len()).collect()
    }

    pub fn codomain(&self) -> (Rational, Rational) {
        (self.maps[0].codomain_lo().clone(), self.maps[0].codomain_hi().clone())
    }

    /// Exact value of the chain at `x`.
    pub fn eval(&self, x: &Rational) -> Result<Rational> {
        let mut v = x.clone();
        for m in self.maps.iter().rev() {
            v = m.eval(&v)?;
        }
        Ok(v)
    }

    /// Superset of the critical values: images of every link's critical
    /// values under the outer part of the chain.
    pub fn critical_value_superset(&self) -> Result<Vec<Rational>> {
        let mut acc: Vec<Rational> = Vec::new();
        for (i, m) in self.maps.iter().enumerate() {
            for v in m.critical_values() {
                let mut y = v;
                for outer in self.maps[..i].iter().rev() {
                    y = outer.eval(&y)?;
                }
                acc.push(y);
            }
        }
        acc.sort();
        acc.dedup();
        Ok(acc)
    }

    fn evaluate(&self, a: &Rational, b: &Rational, delta: &Rational) -> Evaluation {
        let table = CritTable::new(&self.endpoints, a, b, delta);
        let mut sums: Vec<Vec<Summary>> = Vec::with_capacity(self.levels.len());
        sums.push(self.base.iter().map(|&(p, q)| table.sweep(p, q)).collect());
        for i in 1..self.levels.len() {
            let level = &self.levels[i];
            let below = &sums[i - 1];
            let (fwd, rev) = if level.leaves_fwd.is_empty() {
                (None, None)
            } else {
                let lf: Vec<Summary> = level.leaves_fwd.iter().map(|&id| below[id as usize]).collect();
                let lr: Vec<Summary> = level.leaves_rev.iter().map(|&id| below[id as usize]).collect();
                (Some(SumTree::new(&lf, true)), Some(SumTree::new(&lr, false)))
            };
            let row = level
                .queries
                .iter()
                .map(|query| {
                    query.parts.iter().fold(Summary::IDENTITY, |acc, part| match *part {
                        Part::Child { id, .. } => acc.then(below[id as usize]),
                        Part::Range { start, end, forward } => {
                            let tree = if forward { fwd.as_ref() } else { rev.as_ref() };
                            acc.then(tree.unwrap().fold(start as usize, end as usize))
                        }
                    })
                })
                .collect();
            sums.push(row);
        }
        Evaluation { sums }
    }

    fn top_violated(&self, ev: &Evaluation) -> Option<u32> {
        let top = ev.sums.last().unwrap();
        [self.top_fwd, self.top_rev].into_iter().find(|&id| top[id as usize].get(IDLE).1)
    }

    /// Pass/fail only, without locating witnesses.
    pub fn is_crooked_pair(&self, a: &Rational, b: &Rational, delta: &Rational) -> Result<bool> {
        if !delta.is_positive() {
            return Err(Error::Precondition("delta must be positive".into()));
        }
        if (a - b).abs() < *delta {
            return Ok(true);
        }
        Ok(self.top_violated(&self.evaluate(a, b, delta)).is_none())
    }

    /// Exact pair decision with a located violating `(c, d)` on failure.
    pub fn check_pair(&self, a: &Rational, b: &Rational, delta: &Rational) -> Result<PairCheck> {
        if !delta.is_positive() {
            return Err(Error::Precondition("delta must be positive".into()));
        }
        if (a - b).abs() < *delta {
            return Ok(PairCheck { crooked: true, violation: None });
        }
        let ev = self.evaluate(a, b, delta);
        let Some(top) = self.top_violated(&ev) else {
            return Ok(PairCheck { crooked: true, violation: None });
        };
        let m = self.maps.len();
        let d = self.locate_violation(&ev, m, top, IDLE, b);
        let q = &self.levels[m].queries[top as usize];
        let c = self.first_hit(m, &d, &q.p, a)?.ok_or_else(|| Error::Invariant("violation without a preceding a-point".into()))?;
        Ok(PairCheck { crooked: false, violation: Some((c, d)) })
    }

    /// Position (in level `i` coordinates) of the first violating b-point of
    /// sub-path `id` started in state `s`.
    fn locate_violation(&self, ev: &Evaluation, i: usize, id: u32, s: u8, b: &Rational) -> Rational {
        if i == 0 {
            return b.clone();
        }
        let level = &self.levels[i];
        let map = &self.maps[i - 1];
        let below = &ev.sums[i - 1];
        let mut state = s;
        for part in &level.queries[id as usize].parts {
            match *part {
                Part::Child { id: cid, piece } => {
                    let (e, v) = below[cid as usize].get(state);
                    if v {
                        let u = self.locate_violation(ev, i - 1, cid, state, b);
                        return piece_slope_inverse(map, piece as usize, &u);
                    }
                    state = e;
                }
                Part::Range { start, end, forward } => {
                    let ks: Box<dyn Iterator<Item = u32>> = if forward { Box::new(start..end) } else { Box::new((start..end).rev()) };
                    for k in ks {
                        let cid = if forward { level.leaves_fwd[k as usize] } else { level.leaves_rev[k as usize] };
                        let (e, v) = below[cid as usize].get(state);
                        if v {
                            let u = self.locate_violation(ev, i - 1, cid, state, b);
                            return piece_slope_inverse(map, k as usize, &u);
                        }
                        state = e;
                    }
                }
            }
        }
        unreachable!("summary reported a violation that the walk did not find")
    }

    /// Image of the segment between `u` and `v` under `maps[0] ∘ … ∘ maps[i-1]`.
    fn chain_image(&self, indexes: &[ImageIndex<'_>], i: usize, u: &Rational, v: &Rational) -> Result<(Rational, Rational)> {
        let (mut lo, mut hi) = if u <= v { (u.clone(), v.clone()) } else { (v.clone(), u.clone()) };
        for j in (0..i).rev() {
            let (a, b) = indexes[j].image(&lo, &hi)?;
            lo = a;
            hi = b;
        }
        Ok((lo, hi))
    }

    /// First point along the level-`i` path from `p` to `q` where the chain takes value `target`.
    fn first_hit(&self, i: usize, p: &Rational, q: &Rational, target: &Rational) -> Result<Option<Rational>> {
        let indexes: Vec<ImageIndex<'_>> = self.maps.iter().map(|m| ImageIndex::new(m)).collect();
        self.first_hit_rec(&indexes, i, p, q, target)
    }

    fn first_hit_rec(&self, idx: &[ImageIndex<'_>], i: usize, p: &Rational, q: &Rational, target: &Rational) -> Result<Option<Rational>> {
        let (lo, hi) = self.chain_image(idx, i, p, q)?;
        if *target < lo || *target > hi {
            return Ok(None);
        }
        if i == 0 {
            return Ok(Some(target.clone()));
        }
        let map = &self.maps[i - 1];
        if p == q {
            return Ok(Some(p.clone()));
        }
        // Walk pieces of this level's map in path order, clipped to [p, q].
        let forward = p < q;
        let kp = map.piece_index(p);
        let kq = map.piece_index(q);
        let ks: Vec<usize> = if forward { (kp..=kq).collect() } else { (kq..=kp).rev().collect() };
        for k in ks {
            let (x0, x1) = (&map.xs()[k], &map.xs()[k + 1]);
            let (s0, s1) = if forward { (Rational::max(p, x0), Rational::min(q, x1)) } else { (Rational::min(p, x1), Rational::max(q, x0)) };
            if (forward && s0 > s1) || (!forward && s0 < s1) {
                continue;
            }
            let (u0, u1) = (map.eval_on_piece(k, &s0), map.eval_on_piece(k, &s1));
            if let Some(u) = self.first_hit_rec(idx, i - 1, &u0, &u1, target)? {
                if u0 == u1 {
                    return Ok(Some(s0));
                }
                return Ok(Some(piece_slope_inverse(map, k, &u)));
            }
        }
        Ok(None)
    }

    /// Grid check of the chain: all ordered pairs from the step grid on the
    /// codomain merged with `extra_values`.
    pub fn grid_check(&self, delta: &Rational, step: &Rational, extra_values: &[Rational], exec: Execution) -> Result<CrookednessReport> {
        let (lo, hi) = self.codomain();
        let mut values = value_grid(&lo, &hi, step)?;
        values.extend(extra_values.iter().cloned());
        values.sort();
        values.dedup();
        let (worst_pair, pairs_checked) = check_pairs(&values, delta, exec, |a, b| {
            if self.is_crooked_pair(a, b, delta)? {
                Ok(PairCheck { crooked: true, violation: None })
            } else {
                self.check_pair(a, b, delta)
            }
        })?;
        Ok(CrookednessReport {
            delta: delta.clone(),
            mode: CheckMode::ValueGrid,
            verdict: worst_pair.is_none(),
            worst_pair,
            grid_step: Some(step.clone()),
            defect_estimate: None,
            pairs_checked,
        })
    }
}

/// Splits the level path `p -> q` over the pieces of `map`.
fn decompose(map: &PLMap, p: &Rational, q: &Rational, lower: &mut Level) -> Vec<Part> {
    let xs = map.xs();
    let ys = map.ys();
    if p == q {
        let k = map.piece_index(p);
        let v = map.eval_on_piece(k, p);
        return vec![Part::Child { id: lower.intern(v.clone(), v), piece: k as u32 }];
    }
    let mut parts = Vec::new();
    if p < q {
        let kp = xs.partition_point(|x| x <= p) - 1;
        let kq = xs.partition_point(|x| x < q) - 1;
        if kp == kq {
            let id = lower.intern(map.eval_on_piece(kp, p), map.eval_on_piece(kp, q));
            return vec![Part::Child { id, piece: kp as u32 }];
        }
        let mut start = kp;
        if *p != xs[kp] {
            parts.push(Part::Child { id: lower.intern(map.eval_on_piece(kp, p), ys[kp + 1].clone()), piece: kp as u32 });
            start = kp + 1;
        }
        let full_end = *q == xs[kq + 1];
        let end = if full_end { kq + 1 } else { kq };
        if start < end {
            parts.push(Part::Range { start: start as u32, end: end as u32, forward: true });
        }
        if !full_end {
            parts.push(Part::Child { id: lower.intern(ys[kq].clone(), map.eval_on_piece(kq, q)), piece: kq as u32 });
        }
    } else {
        let kp = xs.partition_point(|x| x < p) - 1;
        let kq = xs.partition_point(|x| x <= q) - 1;
        if kp == kq {
            let id = lower.intern(map.eval_on_piece(kp, p), map.eval_on_piece(kp, q));
            return vec![Part::Child { id, piece: kp as u32 }];
        }
        let mut top = kp + 1;
        if *p != xs[kp + 1] {
            parts.push(Part::Child { id: lower.intern(map.eval_on_piece(kp, p), ys[kp].clone()), piece: kp as u32 });
            top = kp;
        }
        let full_bottom = *q == xs[kq];
        let bottom = if full_bottom { kq } else { kq + 1 };
        if bottom < top {
            parts.push(Part::Range { start: bottom as u32, end: top as u32, forward: false });
        }
        if !full_bottom {
            parts.push(Part::Child { id: lower.intern(ys[kq + 1].clone(), map.eval_on_piece(kq, q)), piece: kq as u32 });
        }
    }
    parts
}
