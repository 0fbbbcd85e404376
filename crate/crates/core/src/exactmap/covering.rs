use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::rational::Rational;

use super::{ImageIndex, PLMap};

/// Default iterate cap for covering searches.
pub const DEFAULT_COVERING_CAP: u32 = 64;

/// Smallest `N <= cap` such that `g^N` maps every interval of length at
/// least `beta` onto the whole domain.
///
/// Checks the intervals of length `3 beta / 4` whose left ends lie on the
/// `beta / 4` grid; each interval of length `beta` contains one of them.
pub fn covering_time(g: &PLMap, beta: &Rational, cap: u32) -> Result<u32> {
    covering_time_with(g, beta, cap, Execution::default())
}

pub fn covering_time_with(g: &PLMap, beta: &Rational, cap: u32, exec: Execution) -> Result<u32> {
    let (lo, hi) = (g.domain_lo().clone(), g.domain_hi().clone());
    let width = &hi - &lo;
    if !beta.is_positive() || *beta >= width {
        return Err(Error::Precondition(format!("covering scale {beta} must lie in (0, {width})")));
    }
    let (r_lo, r_hi) = g.range();
    if r_lo < lo || r_hi > hi {
        return Err(Error::Precondition("covering time needs a self-map".into()));
    }
    let spacing = beta / &Rational::from_int(4);
    let len = &spacing * &Rational::from_int(3);
    let mut lefts = Vec::new();
    let mut x = lo.clone();
    while &x + &len <= hi {
        lefts.push(x.clone());
        x = &x + &spacing;
    }
    let index = ImageIndex::new(g);
    // Per candidate: Ok(steps) or Err(final image) when stuck or capped.
    let outcomes = par::map_slice(exec, &lefts, |left| -> Result<std::result::Result<u32, (Rational, Rational)>> {
        let (mut a, mut b) = (left.clone(), left + &len);
        for step in 1..=cap {
            let (na, nb) = index.image(&a, &b)?;
            if na == lo && nb == hi {
                return Ok(Ok(step));
            }
            if na == a && nb == b {
                return Ok(Err((a, b)));
            }
            a = na;
            b = nb;
        }
        Ok(Err((a, b)))
    });
    let mut n = 0u32;
    let mut worst: Option<(usize, Rational, Rational)> = None;
    for (i, o) in outcomes.into_iter().enumerate() {
        match o? {
            Ok(steps) => n = n.max(steps),
            Err((a, b)) => {
                if worst.as_ref().is_none_or(|(_, wa, wb)| &b - &a < wb - wa) {
                    worst = Some((i, a, b));
                }
            }
        }
    }
    match worst {
        None => Ok(n),
        Some((i, img_lo, img_hi)) => Err(Error::Covering { cap, lo: lefts[i].clone(), hi: &lefts[i] + &len, img_lo, img_hi }),
    }
}

/// Minimum slope at least 4, and every interval eventually covers the domain.
///
/// With `|slope| >= 4`, an interval shorter than every piece contains at most
/// one turning point, so its image is at least twice as long; it therefore
/// grows until it reaches the shortest piece width, and covering at that
/// scale decides the rest.
pub fn is_admissible(f: &PLMap) -> bool {
    let beta = (0..f.piece_count()).map(|k| &f.xs()[k + 1] - &f.xs()[k]).min().unwrap();
    is_admissible_at_scale(f, &beta)
}

/// Minimum slope at least 4 and covering from scale `beta`.
///
/// Decides admissibility when every interval is already known to grow to
/// length `beta`. For `f ∘ h` with `f` of slope at least 4 and `h` never
/// shrinking intervals, `beta` can be the shortest piece of `f`: an interval
/// `A` has `|f(h(A))| >= 2 min(|A|, beta)`.
pub fn is_admissible_at_scale(f: &PLMap, beta: &Rational) -> bool {
    if f.min_abs_slope() < Rational::from_int(4) {
        return false;
    }
    let width = f.domain_hi() - f.domain_lo();
    let beta = if *beta >= width { &width / &Rational::from_int(2) } else { beta.clone() };
    covering_time(f, &beta, DEFAULT_COVERING_CAP).is_ok()
}
