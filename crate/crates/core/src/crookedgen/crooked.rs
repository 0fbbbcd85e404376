use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exactmap::PLMap;
use crate::par::{self, Execution};
use crate::rational::Rational;

/// Outcome of an exact check between one pair of values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairCheck {
    pub crooked: bool,
    /// Preimages `c` of `a` and `d` of `b` admitting no admissible `c'`, `d'`.
    pub violation: Option<(Rational, Rational)>,
}

impl PairCheck {
    fn pass() -> Self {
        PairCheck { crooked: true, violation: None }
    }
}

/// Scans left to right for an `a`-preimage `c` followed by a `b`-preimage `d`
/// such that no point of `(t*, d)` maps into the open `delta`-band around `a`,
/// where `t*` is the first entry after `c` into the open band around `b`.
fn forward_violation(f: &PLMap, a: &Rational, b: &Rational, delta: &Rational) -> Option<(Rational, Rational)> {
    let xs = f.xs();
    let ys = f.ys();
    let (b_lo, b_hi) = (b - delta, b + delta);
    let (a_lo, a_hi) = (a - delta, a + delta);
    let mut c: Option<Rational> = None;
    // Running value range over [t*, current] once t* is known.
    let mut run: Option<(Rational, Rational)> = None;
    let point_at = |k: usize, v: &Rational| -> Rational {
        if *v == ys[k] {
            return xs[k].clone();
        }
        if *v == ys[k + 1] {
            return xs[k + 1].clone();
        }
        &xs[k] + (v - &ys[k]) * (&xs[k + 1] - &xs[k]) / (&ys[k + 1] - &ys[k])
    };
    // Process one straight sub-segment from value `v0` (already handled) to `v1`.
    let advance = |v0: &Rational, v1: &Rational, c: &Option<Rational>, run: &mut Option<(Rational, Rational)>| {
        if c.is_none() {
            return;
        }
        match run {
            Some((lo, hi)) => {
                if v1 < lo {
                    *lo = v1.clone();
                }
                if v1 > hi {
                    *hi = v1.clone();
                }
            }
            None => {
                let (lo, hi) = if v0 <= v1 { (v0, v1) } else { (v1, v0) };
                if *lo < b_hi && *hi > b_lo {
                    let entry = if *v0 <= b_lo { b_lo.clone() } else { b_hi.clone() };
                    let (r0, r1) = if entry <= *v1 { (entry, v1.clone()) } else { (v1.clone(), entry) };
                    *run = Some((r0, r1));
                }
            }
        }
    };
    if ys[0] == *a {
        c = Some(xs[0].clone());
    }
    for k in 0..f.piece_count() {
        let (y0, y1) = (&ys[k], &ys[k + 1]);
        if y0 == y1 {
            advance(y0, y1, &c, &mut run);
            continue;
        }
        let rising = y0 < y1;
        let strictly_inside = |v: &Rational| if rising { v > y0 && v <= y1 } else { v < y0 && v >= y1 };
        let mut events: Vec<(&Rational, bool)> = Vec::with_capacity(2);
        if strictly_inside(a) {
            events.push((a, true));
        }
        if strictly_inside(b) {
            events.push((b, false));
        }
        if events.len() == 2 {
            let a_first = if rising { a < b } else { a > b };
            if !a_first {
                events.swap(0, 1);
            }
        }
        let mut prev = y0.clone();
        for (level, is_a) in events {
            advance(&prev, level, &c, &mut run);
            if is_a {
                c = Some(point_at(k, level));
                run = None;
            } else if let Some(cx) = &c {
                let ok = match &run {
                    Some((lo, hi)) => *lo < a_hi && *hi > a_lo,
                    None => false,
                };
                if !ok {
                    return Some((cx.clone(), point_at(k, level)));
                }
            }
            prev = level.clone();
        }
        advance(&prev, y1, &c, &mut run);
    }
    None
}

/// Exact decision of whether `f` is `delta`-crooked between `a` and `b`.
pub fn is_crooked_between(f: &PLMap, a: &Rational, b: &Rational, delta: &Rational) -> Result<PairCheck> {
    if !delta.is_positive() {
        return Err(Error::Precondition("delta must be positive".into()));
    }
    if (a - b).abs() < *delta {
        return Ok(PairCheck::pass());
    }
    for k in 0..f.piece_count() {
        let y = &f.ys()[k];
        if *y == f.ys()[k + 1] && (y == a || y == b) {
            return Err(Error::Unsupported(format!("plateau at level {y}")));
        }
    }
    if let Some(v) = forward_violation(f, a, b, delta) {
        return Ok(PairCheck { crooked: false, violation: Some(v) });
    }
    let r = f.reflect_domain();
    if let Some((c, d)) = forward_violation(&r, a, b, delta) {
        let s = f.domain_lo() + f.domain_hi();
        return Ok(PairCheck { crooked: false, violation: Some((&s - &c, &s - &d)) });
    }
    Ok(PairCheck::pass())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckMode {
    ExactPair,
    ValueGrid,
    Sampled,
}

impl fmt::Display for CheckMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckMode::ExactPair => "exact_pair",
            CheckMode::ValueGrid => "value_grid",
            CheckMode::Sampled => "sampled",
        })
    }
}

/// Result of a crookedness check over many value pairs.
#[derive(Clone, Debug)]
pub struct CrookednessReport {
    pub delta: Rational,
    pub mode: CheckMode,
    pub verdict: bool,
    /// `(a, b, c, d)` for the lexicographically smallest violating pair.
    pub worst_pair: Option<Witness>,
    pub grid_step: Option<Rational>,
    pub defect_estimate: Option<Rational>,
    pub pairs_checked: usize,
}

/// `lo, lo + step, ...` up to `hi`, plus `hi` itself.
pub fn value_grid(lo: &Rational, hi: &Rational, step: &Rational) -> Result<Vec<Rational>> {
    if !step.is_positive() {
        return Err(Error::Precondition("grid step must be positive".into()));
    }
    let mut v = Vec::new();
    let mut x = lo.clone();
    while x <= *hi {
        v.push(x.clone());
        x = &x + step;
    }
    if v.last() != Some(hi) {
        v.push(hi.clone());
    }
    Ok(v)
}

/// Violating `(a, b, c, d)`.
pub type Witness = (Rational, Rational, Rational, Rational);

/// Runs `check` over ordered pairs of `values` (skipping pairs closer than
/// `delta`, which pass trivially) and keeps the lexicographically first failure.
pub fn check_pairs<F>(values: &[Rational], delta: &Rational, exec: Execution, check: F) -> Result<(Option<Witness>, usize)>
where
    F: Fn(&Rational, &Rational) -> Result<PairCheck> + Sync + Send,
{
    let pairs: Vec<(usize, usize)> =
        (0..values.len()).flat_map(|i| (0..values.len()).map(move |j| (i, j))).filter(|&(i, j)| (&values[i] - &values[j]).abs() >= *delta).collect();
    let results = std::sync::Mutex::new(None::<Error>);
    let first = par::find_first(exec, pairs.len(), |p| {
        let (i, j) = pairs[p];
        match check(&values[i], &values[j]) {
            Ok(r) => !r.crooked,
            Err(e) => {
                results.lock().unwrap().get_or_insert(e);
                true
            }
        }
    });
    if let Some(e) = results.into_inner().unwrap() {
        return Err(e);
    }
    match first {
        None => Ok((None, pairs.len())),
        Some(p) => {
            let (i, j) = pairs[p];
            let r = check(&values[i], &values[j])?;
            let (c, d) = r.violation.expect("failing check carries a violation");
            Ok((Some((values[i].clone(), values[j].clone(), c, d)), p + 1))
        }
    }
}

/// Step grid on the codomain merged with the critical values.
pub fn grid_values(f: &PLMap, step: &Rational) -> Result<Vec<Rational>> {
    let mut values = value_grid(f.codomain_lo(), f.codomain_hi(), step)?;
    values.extend(f.critical_values());
    values.sort();
    values.dedup();
    Ok(values)
}

pub fn crookedness_grid_check(f: &PLMap, delta: &Rational, step: &Rational) -> Result<CrookednessReport> {
    crookedness_grid_check_with(f, delta, step, Execution::default())
}

pub fn crookedness_grid_check_with(f: &PLMap, delta: &Rational, step: &Rational, exec: Execution) -> Result<CrookednessReport> {
    let values = grid_values(f, step)?;
    let (worst_pair, pairs_checked) = check_pairs(&values, delta, exec, |a, b| is_crooked_between(f, a, b, delta))?;
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

/// Denominator of the `delta` lattice searched by the defect estimate.
pub const DEFECT_LATTICE: i64 = 1024;

/// Smallest `delta` on the lattice `j/1024` of the codomain width for which
/// every sampled pair (random pairs plus all critical-value pairs) passes.
pub fn crookedness_defect_estimate(f: &PLMap, samples: usize, seed: u64) -> Result<Rational> {
    crookedness_defect_estimate_with(f, samples, seed, Execution::default())
}

pub fn crookedness_defect_estimate_with(f: &PLMap, samples: usize, seed: u64, exec: Execution) -> Result<Rational> {
    let pairs = defect_sample_pairs(f, samples, seed);
    let width = f.codomain_hi() - f.codomain_lo();
    let passes = |j: i64| -> Result<bool> {
        let delta = &width * &Rational::new(j, DEFECT_LATTICE);
        let fails = par::map_slice(exec, &pairs, |(a, b)| is_crooked_between(f, a, b, &delta).map(|r| !r.crooked));
        for r in fails {
            if r? {
                return Ok(false);
            }
        }
        Ok(true)
    };
    // passes(1024) holds: every pair is closer than the full width... except
    // pairs at exactly the width, which the next lattice point covers.
    let (mut lo, mut hi) = (0i64, DEFECT_LATTICE + 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if passes(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(&width * &Rational::new(hi, DEFECT_LATTICE))
}

/// The deterministic pair sample used by the defect estimate.
pub fn defect_sample_pairs(f: &PLMap, samples: usize, seed: u64) -> Vec<(Rational, Rational)> {
    let crit = f.critical_values();
    let mut pairs: Vec<(Rational, Rational)> = Vec::new();
    for a in &crit {
        for b in &crit {
            if a != b {
                pairs.push((a.clone(), b.clone()));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, width) = (f.codomain_lo().clone(), f.codomain_hi() - f.codomain_lo());
    let den = 1i64 << 16;
    for _ in 0..samples {
        let a = &lo + &width * &Rational::new(rng.random_range(0..=den), den);
        let b = &lo + &width * &Rational::new(rng.random_range(0..=den), den);
        pairs.push((a, b));
    }
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crookedgen::sigma;
    use crate::rational::q;

    #[test]
    fn identity_is_not_crooked_between_ends() {
        let id = PLMap::unit_identity();
        let r = is_crooked_between(&id, &q(0, 1), &q(1, 1), &q(1, 4)).unwrap();
        assert!(!r.crooked);
        assert_eq!(r.violation, Some((q(0, 1), q(1, 1))));
        let r = is_crooked_between(&id, &q(1, 1), &q(0, 1), &q(1, 4)).unwrap();
        assert_eq!(r.violation, Some((q(1, 1), q(0, 1))));
        assert!(is_crooked_between(&id, &q(0, 1), &q(1, 5), &q(1, 4)).unwrap().crooked);
    }

    #[test]
    fn sigma_five_between_ends() {
        let s5 = sigma(5).unwrap();
        assert!(is_crooked_between(&s5, &q(0, 1), &q(1, 1), &q(3, 5)).unwrap().crooked);
    }

    #[test]
    fn plateau_level_is_unsupported() {
        let f = PLMap::unit(vec![(q(0, 1), q(0, 1)), (q(1, 3), q(1, 2)), (q(2, 3), q(1, 2)), (q(1, 1), q(1, 1))]).unwrap();
        assert!(matches!(is_crooked_between(&f, &q(1, 2), &q(1, 1), &q(1, 8)), Err(Error::Unsupported(_))));
        assert!(is_crooked_between(&f, &q(0, 1), &q(1, 1), &q(1, 8)).is_ok());
    }

    #[test]
    fn tangential_band_contact_does_not_count() {
        // Path 0 -> 3/4 -> 1/4 -> 1: the dip to 1/4 touches the closed band
        // around a = 0 only at its edge when delta = 1/4.
        let f = PLMap::unit(vec![(q(0, 1), q(0, 1)), (q(1, 3), q(3, 4)), (q(2, 3), q(1, 4)), (q(1, 1), q(1, 1))]).unwrap();
        assert!(!is_crooked_between(&f, &q(0, 1), &q(1, 1), &q(1, 4)).unwrap().crooked);
        assert!(is_crooked_between(&f, &q(0, 1), &q(1, 1), &q(1, 3)).unwrap().crooked);
    }

    #[test]
    fn grid_includes_end_and_critical_values() {
        let v = value_grid(&q(0, 1), &q(1, 1), &q(2, 5)).unwrap();
        assert_eq!(v, vec![q(0, 1), q(2, 5), q(4, 5), q(1, 1)]);
    }
}
