use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exactmap::{is_measure_preserving, FloatMap, PLMap};
use crate::rational::Rational;

/// Deepest exact orbit sampled by default; denominators grow with every level.
pub const DEFAULT_EXACT_DEPTH: usize = 60;

/// Float-mode tolerance for `x_i = f(x_{i+1})`.
pub const FLOAT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Float,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Coords {
    Exact(Vec<Rational>),
    Float(Vec<f64>),
}

/// Truncated point `(x_0, …, x_d)` of the inverse limit, `x_i = f(x_{i+1})`.
#[derive(Clone, Debug, PartialEq)]
pub struct BackwardOrbit {
    pub coords: Coords,
    /// Content hash of the generating map.
    pub map_id: String,
}

impl BackwardOrbit {
    pub fn depth(&self) -> usize {
        match &self.coords {
            Coords::Exact(v) => v.len() - 1,
            Coords::Float(v) => v.len() - 1,
        }
    }

    pub fn mode(&self) -> Mode {
        match self.coords {
            Coords::Exact(_) => Mode::Exact,
            Coords::Float(_) => Mode::Float,
        }
    }

    /// Coordinate `x_i` as a double.
    pub fn project(&self, i: usize) -> f64 {
        match &self.coords {
            Coords::Exact(v) => v[i].to_f64(),
            Coords::Float(v) => v[i],
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        (0..=self.depth()).map(|i| self.project(i)).collect()
    }

    /// Checks `x_i = f(x_{i+1})`, exactly or within [`FLOAT_TOLERANCE`].
    pub fn validate(&self, f: &PLMap) -> Result<()> {
        match &self.coords {
            Coords::Exact(v) => {
                for i in 0..v.len() - 1 {
                    if f.eval(&v[i + 1])? != v[i] {
                        return Err(Error::Invariant(format!("x_{i} != f(x_{})", i + 1)));
                    }
                }
            }
            Coords::Float(v) => {
                let g = f.to_float();
                for i in 0..v.len() - 1 {
                    if (g.eval(v[i + 1]) - v[i]).abs() > FLOAT_TOLERANCE {
                        return Err(Error::Invariant(format!("x_{i} and f(x_{}) differ by more than {FLOAT_TOLERANCE}", i + 1)));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Bucketed lookup of the pieces whose image contains a value.
///
/// Piece `k` owns `y` when `min_k <= y < max_k`; at the top of the codomain
/// the interval is closed on the right instead. For a measure-preserving map
/// the owned branches then carry weights `1/|slope|` summing to 1 at every
/// value.
struct BranchIndex {
    lo: f64,
    scale: f64,
    /// `offsets[b]..offsets[b + 1]` indexes `items` for bucket `b`.
    offsets: Vec<usize>,
    items: Vec<u32>,
    /// Running sums of `1/|slope|` over each bucket's items.
    cumulative: Vec<f64>,
}

impl BranchIndex {
    fn new(f: &PLMap, float: &FloatMap) -> Self {
        let (ys, n) = (float.ys(), f.piece_count());
        let lo = f.codomain_lo().to_f64();
        let hi = f.codomain_hi().to_f64();
        let height = (hi - lo).max(f64::MIN_POSITIVE);
        let variation: f64 = ys.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / height;
        let buckets = ((4.0 * n as f64 / variation.max(1.0)).ceil() as usize).clamp(1, 1 << 20);
        let scale = buckets as f64 / height;
        let margin = 1e-9 * height;
        let range = |k: usize| {
            let (a, b) = (ys[k].min(ys[k + 1]), ys[k].max(ys[k + 1]));
            let first = (((a - margin - lo) * scale).floor().max(0.0) as usize).min(buckets - 1);
            let last = (((b + margin - lo) * scale).floor().max(0.0) as usize).min(buckets - 1);
            (first, last)
        };
        let mut counts = vec![0usize; buckets + 1];
        for k in 0..n {
            let (a, b) = range(k);
            for c in &mut counts[a..=b] {
                *c += 1;
            }
        }
        let mut offsets = vec![0usize; buckets + 1];
        for b in 0..buckets {
            offsets[b + 1] = offsets[b] + counts[b];
        }
        let mut fill = offsets.clone();
        let mut items = vec![0u32; offsets[buckets]];
        for k in 0..n {
            let (a, b) = range(k);
            for bucket in a..=b {
                items[fill[bucket]] = k as u32;
                fill[bucket] += 1;
            }
        }
        let xs = float.xs();
        let mut cumulative = vec![0.0; items.len()];
        for b in 0..buckets {
            let mut acc = 0.0;
            for i in offsets[b]..offsets[b + 1] {
                let k = items[i] as usize;
                acc += (xs[k + 1] - xs[k]) / (ys[k + 1] - ys[k]).abs();
                cumulative[i] = acc;
            }
        }
        BranchIndex { lo, scale, offsets, items, cumulative }
    }

    fn bucket(&self, y: f64) -> usize {
        (((y - self.lo) * self.scale).floor().max(0.0) as usize).min(self.offsets.len() - 2)
    }

    fn candidates(&self, y: f64) -> &[u32] {
        let b = self.bucket(y);
        &self.items[self.offsets[b]..self.offsets[b + 1]]
    }
}

/// Backward sampler for one measure-preserving map.
pub struct BackwardSampler<'a> {
    map: &'a PLMap,
    float: FloatMap,
    id: String,
    index: BranchIndex,
    top: Rational,
}

impl<'a> BackwardSampler<'a> {
    /// Requires a measure-preservation certificate and no plateaus.
    pub fn new(map: &'a PLMap) -> Result<Self> {
        if map.has_plateau() {
            return Err(Error::Precondition("backward sampling needs a map without plateaus".into()));
        }
        let cert = is_measure_preserving(map)?;
        if !cert.verdict {
            return Err(Error::Precondition("backward sampling needs a measure-preserving map".into()));
        }
        let float = map.to_float();
        let index = BranchIndex::new(map, &float);
        Ok(BackwardSampler { map, index, float, id: map.content_hash(), top: map.codomain_hi().clone() })
    }

    pub fn map(&self) -> &PLMap {
        self.map
    }

    pub fn map_id(&self) -> &str {
        &self.id
    }

    pub fn float_map(&self) -> &FloatMap {
        &self.float
    }

    fn owns(&self, k: usize, y: &Rational) -> bool {
        let ys = self.map.ys();
        let (a, b) = if ys[k] < ys[k + 1] { (&ys[k], &ys[k + 1]) } else { (&ys[k + 1], &ys[k]) };
        if *y == self.top {
            a < y && y <= b
        } else {
            a <= y && y < b
        }
    }

    /// Exact preimage branches `(x, 1/|slope|)` of `y`, checking that the
    /// weights sum to 1.
    pub fn branches(&self, y: &Rational) -> Result<Vec<(Rational, Rational)>> {
        if !self.map.contains(y) {
            return Err(Error::Domain { x: y.clone(), lo: self.map.domain_lo().clone(), hi: self.map.domain_hi().clone() });
        }
        let (xs, ys) = (self.map.xs(), self.map.ys());
        let mut ks: Vec<usize> = self.index.candidates(y.to_f64()).iter().map(|&k| k as usize).filter(|&k| self.owns(k, y)).collect();
        ks.sort_unstable();
        ks.dedup();
        let mut out = Vec::with_capacity(ks.len());
        let mut total = Rational::zero();
        for k in ks {
            let slope = (&ys[k + 1] - &ys[k]) / (&xs[k + 1] - &xs[k]);
            let x = &xs[k] + (y - &ys[k]) / &slope;
            let w = slope.abs().recip();
            total = &total + &w;
            out.push((x, w));
        }
        if total != Rational::one() {
            return Err(Error::Invariant(format!("branch weights over {y} sum to {total}, not 1")));
        }
        Ok(out)
    }

    /// Exact orbit `(x0, x_1, …, x_depth)` choosing each branch with
    /// probability `1/|slope|`.
    pub fn sample_exact(&self, x0: &Rational, depth: usize, seed: u64) -> Result<BackwardOrbit> {
        self.sample_exact_capped(x0, depth, seed, DEFAULT_EXACT_DEPTH)
    }

    pub fn sample_exact_capped(&self, x0: &Rational, depth: usize, seed: u64, cap: usize) -> Result<BackwardOrbit> {
        if depth > cap {
            return Err(Error::Budget { what: "exact backward depth".into(), reached: depth as u64, limit: cap as u64 });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coords = vec![x0.clone()];
        for _ in 0..depth {
            let branches = self.branches(coords.last().unwrap())?;
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = branches.len() - 1;
            for (i, (_, w)) in branches.iter().enumerate() {
                acc += w.to_f64();
                if u < acc {
                    pick = i;
                    break;
                }
            }
            coords.push(branches.into_iter().nth(pick).unwrap().0);
        }
        Ok(BackwardOrbit { coords: Coords::Exact(coords), map_id: self.id.clone() })
    }

    /// Float preimage of `y` on a branch drawn with probability `1/|slope|`,
    /// by rejection from the bucket's running weights.
    fn float_branch(&self, y: f64, rng: &mut ChaCha8Rng) -> f64 {
        let (xs, ys) = (self.float.xs(), self.float.ys());
        let b = self.index.bucket(y);
        let (start, end) = (self.index.offsets[b], self.index.offsets[b + 1]);
        let total = self.index.cumulative[end - 1];
        let top = self.top.to_f64();
        let owns = |k: usize| {
            let (a, c) = (ys[k].min(ys[k + 1]), ys[k].max(ys[k + 1]));
            if y >= top {
                a < y && y <= c
            } else {
                a <= y && y < c
            }
        };
        let mut chosen = None;
        for _ in 0..10_000 {
            let u = rng.random::<f64>() * total;
            let i = start + self.index.cumulative[start..end].partition_point(|c| *c <= u).min(end - start - 1);
            let k = self.index.items[i] as usize;
            if owns(k) {
                chosen = Some(k);
                break;
            }
        }
        let k =
            chosen.unwrap_or_else(|| self.index.items[start..end].iter().map(|&k| k as usize).find(|&k| owns(k)).unwrap_or(self.index.items[start] as usize));
        let t = (y - ys[k]) / (ys[k + 1] - ys[k]);
        (xs[k] + t * (xs[k + 1] - xs[k])).clamp(xs[k], xs[k + 1])
    }

    /// Float orbit of length `depth + 1` starting at `x0`.
    pub fn sample_float(&self, x0: f64, depth: usize, seed: u64) -> BackwardOrbit {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coords = Vec::with_capacity(depth + 1);
        coords.push(x0);
        for _ in 0..depth {
            let y = *coords.last().unwrap();
            coords.push(self.float_branch(y, &mut rng));
        }
        BackwardOrbit { coords: Coords::Float(coords), map_id: self.id.clone() }
    }

    /// Float orbit with `x0` drawn uniformly from the domain by the same generator.
    pub(crate) fn sample_float_uniform(&self, depth: usize, mut rng: ChaCha8Rng) -> BackwardOrbit {
        let (lo, hi) = (self.float.xs()[0], *self.float.xs().last().unwrap());
        let x0 = lo + rng.random::<f64>() * (hi - lo);
        let mut coords = Vec::with_capacity(depth + 1);
        coords.push(x0);
        for _ in 0..depth {
            let y = *coords.last().unwrap();
            coords.push(self.float_branch(y, &mut rng));
        }
        BackwardOrbit { coords: Coords::Float(coords), map_id: self.id.clone() }
    }

    /// `(f(x_0), x_0, …, x_{d-1})`.
    pub fn shift(&self, orbit: &BackwardOrbit) -> Result<BackwardOrbit> {
        if orbit.map_id != self.id {
            return Err(Error::Precondition("orbit was sampled from a different map".into()));
        }
        let coords = match &orbit.coords {
            Coords::Exact(v) => {
                let mut out = Vec::with_capacity(v.len());
                out.push(self.map.eval(&v[0])?);
                out.extend(v[..v.len() - 1].iter().cloned());
                Coords::Exact(out)
            }
            Coords::Float(v) => {
                let mut out = Vec::with_capacity(v.len());
                out.push(self.float.eval(v[0]));
                out.extend_from_slice(&v[..v.len() - 1]);
                Coords::Float(out)
            }
        };
        Ok(BackwardOrbit { coords, map_id: self.id.clone() })
    }
}

/// Exact backward orbit of `f` from `x0`.
pub fn sample_backward(f: &PLMap, x0: &Rational, depth: usize, seed: u64) -> Result<BackwardOrbit> {
    BackwardSampler::new(f)?.sample_exact(x0, depth, seed)
}

/// Float backward orbit of `f` from `x0`.
pub fn sample_backward_float(f: &PLMap, x0: f64, depth: usize, seed: u64) -> Result<BackwardOrbit> {
    Ok(BackwardSampler::new(f)?.sample_float(x0, depth, seed))
}

/// The shift of the inverse limit, truncated to the orbit's depth.
pub fn shift_truncated(f: &PLMap, orbit: &BackwardOrbit) -> Result<BackwardOrbit> {
    BackwardSampler::new(f)?.shift(orbit)
}

/// `Σ 2^{-i} |x_i − y_i|`.
pub fn truncated_metric(a: &BackwardOrbit, b: &BackwardOrbit) -> Result<f64> {
    if a.depth() != b.depth() {
        return Err(Error::Precondition(format!("orbit depths differ: {} vs {}", a.depth(), b.depth())));
    }
    let mut w = 1.0;
    let mut sum = 0.0;
    for i in 0..=a.depth() {
        sum += w * (a.project(i) - b.project(i)).abs();
        w *= 0.5;
    }
    Ok(sum)
}
