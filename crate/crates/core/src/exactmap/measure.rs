use crate::error::{Error, Result};
use crate::rational::Rational;

use super::PLMap;

/// Outcome of the exact Lebesgue-measure test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasureCertificate {
    pub verdict: bool,
    /// `(gap midpoint, sum of 1/|slope| over its preimage branches)`.
    pub witnesses: Vec<(Rational, Rational)>,
    pub failing_value: Option<Rational>,
}

/// Sums of `1/|slope|` over the branches above each gap `(values[i], values[i+1])`.
///
/// `values` must be sorted, distinct and contain every node value of `f`, so
/// that every non-constant piece spans a whole number of gaps.
fn gap_sums(f: &PLMap, values: &[Rational]) -> Vec<Rational> {
    let gaps = values.len().saturating_sub(1);
    let mut diff = vec![Rational::zero(); gaps + 1];
    let ys = f.ys();
    for k in 0..f.piece_count() {
        let (y0, y1) = (&ys[k], &ys[k + 1]);
        if y0 == y1 {
            continue;
        }
        let w = (&f.xs()[k + 1] - &f.xs()[k]) / (y1 - y0).abs();
        let (lo, hi) = if y0 < y1 { (y0, y1) } else { (y1, y0) };
        let i = values.binary_search(lo).expect("node value missing from value list");
        let j = values.binary_search(hi).expect("node value missing from value list");
        diff[i] = &diff[i] + &w;
        diff[j] = &diff[j] - &w;
    }
    let mut acc = Rational::zero();
    let mut out = Vec::with_capacity(gaps);
    for d in diff.iter().take(gaps) {
        acc = &acc + d;
        out.push(acc.clone());
    }
    out
}

fn sorted_values<'a>(maps: impl IntoIterator<Item = &'a PLMap>) -> Vec<Rational> {
    let mut v: Vec<Rational> = maps.into_iter().flat_map(|m| m.ys().iter().cloned()).collect();
    v.sort();
    v.dedup();
    v
}

/// Piecewise-constant density of the pullback of Lebesgue measure:
/// `(lo, hi, Σ 1/|f'|)` on each gap between consecutive node values.
pub fn pullback_density(f: &PLMap) -> Result<Vec<(Rational, Rational, Rational)>> {
    if f.has_plateau() {
        return Err(Error::Unsupported("zero-slope piece".into()));
    }
    let values = sorted_values([f]);
    let sums = gap_sums(f, &values);
    Ok(values.windows(2).zip(sums).map(|(w, s)| (w[0].clone(), w[1].clone(), s)).collect())
}

/// Exact test that `f: [0,1] -> [0,1]` preserves Lebesgue measure.
pub fn is_measure_preserving(f: &PLMap) -> Result<MeasureCertificate> {
    let (z, o) = (Rational::zero(), Rational::one());
    if *f.domain_lo() != z || *f.domain_hi() != o || *f.codomain_lo() != z || *f.codomain_hi() != o {
        return Err(Error::Precondition("measure test needs a self-map of [0, 1]".into()));
    }
    let fail = |y: Rational| MeasureCertificate { verdict: false, witnesses: Vec::new(), failing_value: Some(y) };
    if let Some(k) = (0..f.piece_count()).find(|&k| f.ys()[k] == f.ys()[k + 1]) {
        return Ok(fail(f.ys()[k].clone()));
    }
    let (lo, hi) = f.range();
    if lo > z {
        return Ok(fail(&lo / &Rational::from_int(2)));
    }
    if hi < o {
        return Ok(fail(Rational::midpoint(&hi, &o)));
    }
    let values = sorted_values([f]);
    let sums = gap_sums(f, &values);
    let witnesses: Vec<(Rational, Rational)> = values.windows(2).zip(sums).map(|(w, s)| (Rational::midpoint(&w[0], &w[1]), s)).collect();
    let failing_value = witnesses.iter().find(|(_, s)| *s != o).map(|(y, _)| y.clone());
    Ok(MeasureCertificate { verdict: failing_value.is_none(), witnesses, failing_value })
}

/// Whether `f` and `g` pull Lebesgue measure on `[a, b]` back to the same measure.
pub fn lambda_equivalent(f: &PLMap, g: &PLMap, a: &Rational, b: &Rational) -> Result<bool> {
    let fr = f.restrict(a, b)?;
    let gr = g.restrict(a, b)?;
    if fr.has_plateau() || gr.has_plateau() {
        return Err(Error::Unsupported("zero-slope piece on the window".into()));
    }
    let values = sorted_values([&fr, &gr]);
    Ok(gap_sums(&fr, &values) == gap_sums(&gr, &values))
}
