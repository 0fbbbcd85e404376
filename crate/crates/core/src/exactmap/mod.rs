//! Exact piecewise-linear maps of an interval.
//!
//! A [`PLMap`] is a strictly increasing list of rational nodes joined by
//! straight segments. Construction merges collinear nodes, so two maps that
//! agree pointwise are structurally equal.

mod compose;
mod covering;
mod format;
mod image;
mod markov;
mod measure;
mod perturb;

pub use compose::{compose, conjugate, inverse, iterate};
pub use covering::{covering_time, covering_time_with, is_admissible, is_admissible_at_scale, DEFAULT_COVERING_CAP};
pub use format::{read_plmap, write_plmap};
pub use image::ImageIndex;
pub use markov::{markov_analysis, markov_analysis_with_budget, MarkovSystem, DEFAULT_ORBIT_BUDGET};
pub use measure::{is_measure_preserving, lambda_equivalent, pullback_density, MeasureCertificate};
pub use perturb::{measure_conjugator, window_perturbation, WindowPerturbation};

use std::fmt;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Continuous piecewise-linear map `[domain_lo, domain_hi] -> [codomain_lo, codomain_hi]`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PLMap {
    xs: Vec<Rational>,
    ys: Vec<Rational>,
    codomain_lo: Rational,
    codomain_hi: Rational,
}

fn collinear(x0: &Rational, y0: &Rational, x1: &Rational, y1: &Rational, x2: &Rational, y2: &Rational) -> bool {
    (y1 - y0) * (x2 - x1) == (y2 - y1) * (x1 - x0)
}

/// Drops middle nodes of collinear triples in one pass.
fn canonicalize(xs: Vec<Rational>, ys: Vec<Rational>) -> (Vec<Rational>, Vec<Rational>) {
    let n = xs.len();
    if n <= 2 {
        return (xs, ys);
    }
    let mut ox: Vec<Rational> = Vec::with_capacity(n);
    let mut oy: Vec<Rational> = Vec::with_capacity(n);
    for (x, y) in xs.into_iter().zip(ys) {
        while ox.len() >= 2 {
            let k = ox.len();
            if collinear(&ox[k - 2], &oy[k - 2], &ox[k - 1], &oy[k - 1], &x, &y) {
                ox.pop();
                oy.pop();
            } else {
                break;
            }
        }
        ox.push(x);
        oy.push(y);
    }
    (ox, oy)
}

impl PLMap {
    /// Builds a map from nodes, checking order and codomain membership.
    pub fn new(nodes: Vec<(Rational, Rational)>, codomain_lo: Rational, codomain_hi: Rational) -> Result<Self> {
        let (xs, ys): (Vec<_>, Vec<_>) = nodes.into_iter().unzip();
        Self::from_columns(xs, ys, codomain_lo, codomain_hi)
    }

    /// Map with codomain `[0, 1]`.
    pub fn unit(nodes: Vec<(Rational, Rational)>) -> Result<Self> {
        Self::new(nodes, Rational::zero(), Rational::one())
    }

    pub fn from_columns(xs: Vec<Rational>, ys: Vec<Rational>, codomain_lo: Rational, codomain_hi: Rational) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::InvalidMap("node columns differ in length".into()));
        }
        if xs.len() < 2 {
            return Err(Error::InvalidMap("need at least two nodes".into()));
        }
        if codomain_lo > codomain_hi {
            return Err(Error::InvalidMap(format!("empty codomain [{codomain_lo}, {codomain_hi}]")));
        }
        for w in xs.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidMap(format!("node abscissae not strictly increasing at {}", w[1])));
            }
        }
        if let Some(y) = ys.iter().find(|y| **y < codomain_lo || **y > codomain_hi) {
            return Err(Error::InvalidMap(format!("node value {y} outside codomain [{codomain_lo}, {codomain_hi}]")));
        }
        let (xs, ys) = canonicalize(xs, ys);
        Ok(PLMap { xs, ys, codomain_lo, codomain_hi })
    }

    /// Trusted constructor for internal callers whose nodes are valid by construction.
    pub(crate) fn from_parts(xs: Vec<Rational>, ys: Vec<Rational>, codomain_lo: Rational, codomain_hi: Rational) -> Self {
        debug_assert!(xs.len() >= 2 && xs.len() == ys.len());
        debug_assert!(xs.windows(2).all(|w| w[0] < w[1]));
        let (xs, ys) = canonicalize(xs, ys);
        PLMap { xs, ys, codomain_lo, codomain_hi }
    }

    pub fn identity(lo: Rational, hi: Rational) -> Self {
        PLMap::from_parts(vec![lo.clone(), hi.clone()], vec![lo.clone(), hi.clone()], lo, hi)
    }

    pub fn unit_identity() -> Self {
        Self::identity(Rational::zero(), Rational::one())
    }

    /// Full tent map `x -> 1 - |2x - 1|` on `[0, 1]`.
    pub fn tent() -> Self {
        let (z, h, o) = (Rational::zero(), Rational::new(1, 2), Rational::one());
        PLMap::from_parts(vec![z.clone(), h, o.clone()], vec![z.clone(), o.clone(), z.clone()], z, o)
    }

    pub fn domain_lo(&self) -> &Rational {
        &self.xs[0]
    }

    pub fn domain_hi(&self) -> &Rational {
        self.xs.last().unwrap()
    }

    pub fn codomain_lo(&self) -> &Rational {
        &self.codomain_lo
    }

    pub fn codomain_hi(&self) -> &Rational {
        &self.codomain_hi
    }

    pub fn xs(&self) -> &[Rational] {
        &self.xs
    }

    pub fn ys(&self) -> &[Rational] {
        &self.ys
    }

    pub fn nodes(&self) -> impl DoubleEndedIterator<Item = (&Rational, &Rational)> + ExactSizeIterator {
        self.xs.iter().zip(self.ys.iter())
    }

    pub fn node_count(&self) -> usize {
        self.xs.len()
    }

    pub fn piece_count(&self) -> usize {
        self.xs.len() - 1
    }

    pub fn slope(&self, k: usize) -> Rational {
        (&self.ys[k + 1] - &self.ys[k]) / (&self.xs[k + 1] - &self.xs[k])
    }

    pub fn slopes(&self) -> Vec<Rational> {
        (0..self.piece_count()).map(|k| self.slope(k)).collect()
    }

    pub fn min_abs_slope(&self) -> Rational {
        self.slopes().into_iter().map(|s| s.abs()).min().unwrap()
    }

    pub fn max_abs_slope(&self) -> Rational {
        self.slopes().into_iter().map(|s| s.abs()).max().unwrap()
    }

    pub fn has_plateau(&self) -> bool {
        self.ys.windows(2).any(|w| w[0] == w[1])
    }

    /// Smallest and largest node value, i.e. the exact range.
    pub fn range(&self) -> (Rational, Rational) {
        let lo = self.ys.iter().min().unwrap().clone();
        let hi = self.ys.iter().max().unwrap().clone();
        (lo, hi)
    }

    pub fn contains(&self, x: &Rational) -> bool {
        x >= self.domain_lo() && x <= self.domain_hi()
    }

    fn check_domain(&self, x: &Rational) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain { x: x.clone(), lo: self.domain_lo().clone(), hi: self.domain_hi().clone() })
        }
    }

    /// Index `k` of a piece `[x_k, x_{k+1}]` containing `x`; the left piece at interior nodes.
    pub fn piece_index(&self, x: &Rational) -> usize {
        let p = self.xs.partition_point(|v| v < x);
        p.saturating_sub(1).min(self.piece_count() - 1)
    }

    pub fn eval(&self, x: &Rational) -> Result<Rational> {
        self.check_domain(x)?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &Rational) -> Rational {
        let p = self.xs.partition_point(|v| v < x);
        if p < self.xs.len() && &self.xs[p] == x {
            return self.ys[p].clone();
        }
        let k = p.saturating_sub(1).min(self.piece_count() - 1);
        self.eval_on_piece(k, x)
    }

    pub(crate) fn eval_on_piece(&self, k: usize, x: &Rational) -> Rational {
        if x == &self.xs[k] {
            return self.ys[k].clone();
        }
        if x == &self.xs[k + 1] {
            return self.ys[k + 1].clone();
        }
        &self.ys[k] + (&self.ys[k + 1] - &self.ys[k]) * (x - &self.xs[k]) / (&self.xs[k + 1] - &self.xs[k])
    }

    /// Values at ascending points using a single forward sweep.
    pub fn eval_sorted(&self, points: &[Rational]) -> Result<Vec<Rational>> {
        let mut out = Vec::with_capacity(points.len());
        let mut k = 0usize;
        for (i, x) in points.iter().enumerate() {
            if i > 0 && points[i - 1] > *x {
                return Err(Error::Precondition("eval_sorted needs ascending points".into()));
            }
            self.check_domain(x)?;
            while k + 1 < self.piece_count() && &self.xs[k + 1] < x {
                k += 1;
            }
            out.push(self.eval_on_piece(k, x));
        }
        Ok(out)
    }

    /// Exact `(min, max)` of the map over `[a, b]`.
    pub fn image_of_interval(&self, a: &Rational, b: &Rational) -> Result<(Rational, Rational)> {
        if a > b {
            return Err(Error::Precondition(format!("empty interval [{a}, {b}]")));
        }
        self.check_domain(a)?;
        self.check_domain(b)?;
        let fa = self.eval_unchecked(a);
        let fb = self.eval_unchecked(b);
        let (mut lo, mut hi) = if fa <= fb { (fa, fb) } else { (fb, fa) };
        let start = self.xs.partition_point(|v| v <= a);
        let end = self.xs.partition_point(|v| v < b);
        for y in &self.ys[start..end.max(start)] {
            if *y < lo {
                lo = y.clone();
            }
            if *y > hi {
                hi = y.clone();
            }
        }
        Ok((lo, hi))
    }

    /// Sorted, deduplicated preimages of `y`. Errors if a plateau sits at level `y`.
    pub fn preimages(&self, y: &Rational) -> Result<Vec<Rational>> {
        let mut out: Vec<Rational> = Vec::new();
        for k in 0..self.piece_count() {
            let (y0, y1) = (&self.ys[k], &self.ys[k + 1]);
            if y0 == y1 {
                if y0 == y {
                    return Err(Error::Unsupported(format!("plateau at level {y}")));
                }
                continue;
            }
            let (lo, hi) = if y0 < y1 { (y0, y1) } else { (y1, y0) };
            if y < lo || y > hi {
                continue;
            }
            let x = if y == y0 {
                self.xs[k].clone()
            } else if y == y1 {
                self.xs[k + 1].clone()
            } else {
                &self.xs[k] + (y - y0) * (&self.xs[k + 1] - &self.xs[k]) / (y1 - y0)
            };
            if out.last() != Some(&x) {
                out.push(x);
            }
        }
        Ok(out)
    }

    /// `x -> alpha * x + beta` applied to abscissae (`alpha > 0`).
    pub fn affine_domain(&self, alpha: &Rational, beta: &Rational) -> Result<Self> {
        if !alpha.is_positive() {
            return Err(Error::Precondition("domain rescaling needs a positive factor".into()));
        }
        let xs = self.xs.iter().map(|x| alpha * x + beta).collect();
        Ok(PLMap::from_parts(xs, self.ys.clone(), self.codomain_lo.clone(), self.codomain_hi.clone()))
    }

    /// `y -> alpha * y + beta` applied to values and codomain (`alpha != 0`).
    pub fn affine_values(&self, alpha: &Rational, beta: &Rational) -> Result<Self> {
        if alpha.is_zero() {
            return Err(Error::Precondition("value rescaling needs a nonzero factor".into()));
        }
        let ys = self.ys.iter().map(|y| alpha * y + beta).collect();
        let c0 = alpha * &self.codomain_lo + beta;
        let c1 = alpha * &self.codomain_hi + beta;
        let (lo, hi) = if c0 <= c1 { (c0, c1) } else { (c1, c0) };
        Ok(PLMap::from_parts(self.xs.clone(), ys, lo, hi))
    }

    /// The map `x -> f(lo + hi - x)` on the same domain.
    pub fn reflect_domain(&self) -> Self {
        let s = self.domain_lo() + self.domain_hi();
        let xs = self.xs.iter().rev().map(|x| &s - x).collect();
        let ys = self.ys.iter().rev().cloned().collect();
        PLMap::from_parts(xs, ys, self.codomain_lo.clone(), self.codomain_hi.clone())
    }

    pub fn with_codomain(&self, lo: Rational, hi: Rational) -> Result<Self> {
        Self::from_columns(self.xs.clone(), self.ys.clone(), lo, hi)
    }

    /// Restriction to `[a, b]` inside the domain.
    pub fn restrict(&self, a: &Rational, b: &Rational) -> Result<Self> {
        if a >= b {
            return Err(Error::Precondition(format!("degenerate restriction [{a}, {b}]")));
        }
        self.check_domain(a)?;
        self.check_domain(b)?;
        let mut xs = vec![a.clone()];
        let mut ys = vec![self.eval_unchecked(a)];
        for (x, y) in self.nodes() {
            if x > a && x < b {
                xs.push(x.clone());
                ys.push(y.clone());
            }
        }
        xs.push(b.clone());
        ys.push(self.eval_unchecked(b));
        Ok(PLMap::from_parts(xs, ys, self.codomain_lo.clone(), self.codomain_hi.clone()))
    }

    /// Turning points plus endpoints: the nodes where the map is a local extremum.
    pub fn critical_points(&self) -> Vec<Rational> {
        let n = self.xs.len();
        let mut out = vec![self.xs[0].clone()];
        for i in 1..n - 1 {
            let d0 = (&self.ys[i] - &self.ys[i - 1]).signum();
            let d1 = (&self.ys[i + 1] - &self.ys[i]).signum();
            if d0 != d1 {
                out.push(self.xs[i].clone());
            }
        }
        out.push(self.xs[n - 1].clone());
        out
    }

    /// Sorted distinct values at critical points.
    pub fn critical_values(&self) -> Vec<Rational> {
        let mut v: Vec<Rational> = self.critical_points().iter().map(|x| self.eval_unchecked(x)).collect();
        v.sort();
        v.dedup();
        v
    }

    /// Number of maximal monotone pieces (laps).
    pub fn lap_count(&self) -> usize {
        self.critical_points().len() - 1
    }

    /// Content hash of the canonical serialization.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(write_plmap(self).as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Double-precision shadow for fast evaluation.
    pub fn to_float(&self) -> FloatMap {
        FloatMap { xs: self.xs.iter().map(Rational::to_f64).collect(), ys: self.ys.iter().map(Rational::to_f64).collect() }
    }
}

impl fmt::Debug for PLMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PLMap[{}, {}]->[{}, {}] {} pieces", self.domain_lo(), self.domain_hi(), self.codomain_lo, self.codomain_hi, self.piece_count())
    }
}

/// Exact `sup |f - g|` over a common domain.
pub fn sup_distance(f: &PLMap, g: &PLMap) -> Result<Rational> {
    if f.domain_lo() != g.domain_lo() || f.domain_hi() != g.domain_hi() {
        return Err(Error::Precondition(format!("domains differ: [{}, {}] vs [{}, {}]", f.domain_lo(), f.domain_hi(), g.domain_lo(), g.domain_hi())));
    }
    let mut pts: Vec<Rational> = f.xs.iter().chain(g.xs.iter()).cloned().collect();
    pts.sort();
    pts.dedup();
    let fv = f.eval_sorted(&pts)?;
    let gv = g.eval_sorted(&pts)?;
    Ok(fv.iter().zip(&gv).map(|(a, b)| (a - b).abs()).max().unwrap())
}

/// Float copy of a [`PLMap`] for orbit sampling and rendering.
#[derive(Clone, Debug)]
pub struct FloatMap {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl FloatMap {
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let x = x.clamp(self.xs[0], self.xs[n - 1]);
        let p = self.xs.partition_point(|v| *v < x);
        if p < n && self.xs[p] == x {
            return self.ys[p];
        }
        let k = p.saturating_sub(1).min(n - 2);
        let t = (x - self.xs[k]) / (self.xs[k + 1] - self.xs[k]);
        self.ys[k] + t * (self.ys[k + 1] - self.ys[k])
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn zigzag() -> PLMap {
        PLMap::unit(vec![(q(0, 1), q(0, 1)), (q(1, 3), q(1, 1)), (q(2, 3), q(0, 1)), (q(1, 1), q(1, 1))]).unwrap()
    }

    #[test]
    fn merges_collinear_nodes() {
        let f = PLMap::unit(vec![(q(0, 1), q(0, 1)), (q(1, 4), q(1, 4)), (q(1, 2), q(1, 2)), (q(1, 1), q(1, 1))]).unwrap();
        assert_eq!(f, PLMap::unit_identity());
        assert_eq!(f.piece_count(), 1);
    }

    #[test]
    fn rejects_bad_nodes() {
        assert!(PLMap::unit(vec![(q(0, 1), q(0, 1))]).is_err());
        assert!(PLMap::unit(vec![(q(0, 1), q(0, 1)), (q(0, 1), q(1, 1))]).is_err());
        assert!(PLMap::unit(vec![(q(0, 1), q(0, 1)), (q(1, 1), q(2, 1))]).is_err());
    }

    #[test]
    fn evaluates_and_checks_domain() {
        let f = zigzag();
        assert_eq!(f.eval(&q(1, 6)).unwrap(), q(1, 2));
        assert_eq!(f.eval(&q(1, 3)).unwrap(), q(1, 1));
        assert_eq!(PLMap::unit_identity().eval(&q(1, 3)).unwrap(), q(1, 3));
        assert!(matches!(f.eval(&q(3, 2)), Err(Error::Domain { .. })));
    }

    #[test]
    fn images_and_preimages() {
        let f = zigzag();
        assert_eq!(f.image_of_interval(&q(1, 6), &q(1, 2)).unwrap(), (q(1, 2), q(1, 1)));
        assert_eq!(f.image_of_interval(&q(1, 3), &q(2, 3)).unwrap(), (q(0, 1), q(1, 1)));
        assert_eq!(f.preimages(&q(1, 1)).unwrap(), vec![q(1, 3), q(1, 1)]);
        assert_eq!(f.preimages(&q(1, 2)).unwrap(), vec![q(1, 6), q(1, 2), q(5, 6)]);
        assert_eq!(f.critical_values(), vec![q(0, 1), q(1, 1)]);
        assert_eq!(f.lap_count(), 3);
    }

    #[test]
    fn sup_distance_basic() {
        let f = zigzag();
        assert_eq!(sup_distance(&f, &f).unwrap(), q(0, 1));
        assert_eq!(sup_distance(&f, &PLMap::unit_identity()).unwrap(), q(2, 3));
        let g = PLMap::identity(q(0, 1), q(2, 1));
        assert!(sup_distance(&f, &g).is_err());
    }

    #[test]
    fn reflection_and_restriction() {
        let r = PLMap::tent().reflect_domain();
        assert_eq!(r, PLMap::tent());
        let h = PLMap::tent().restrict(&q(1, 4), &q(1, 2)).unwrap();
        assert_eq!(h.piece_count(), 1);
        assert_eq!(h.eval(&q(1, 4)).unwrap(), q(1, 2));
    }

    #[test]
    fn float_shadow_matches() {
        let f = zigzag().to_float();
        assert!((f.eval(1.0 / 6.0) - 0.5).abs() < 1e-15);
        assert_eq!(f.eval(1.0), 1.0);
    }
}
