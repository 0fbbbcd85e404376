use crate::error::{Error, Result};
use crate::rational::Rational;

use super::PLMap;

/// Exact `g ∘ f`.
///
/// The result's nodes are `f`'s nodes plus every preimage under `f` of an
/// interior node of `g`, then canonicalized.
pub fn compose(g: &PLMap, f: &PLMap) -> Result<PLMap> {
    let (lo, hi) = f.range();
    if lo < *g.domain_lo() || hi > *g.domain_hi() {
        return Err(Error::Composition(format!("range [{lo}, {hi}] of inner map not inside domain [{}, {}] of outer map", g.domain_lo(), g.domain_hi())));
    }
    let gx = g.xs();
    let gy = g.ys();
    let mut xs = Vec::with_capacity(f.node_count());
    let mut ys = Vec::with_capacity(f.node_count());
    xs.push(f.xs()[0].clone());
    ys.push(g.eval_unchecked(&f.ys()[0]));
    for k in 0..f.piece_count() {
        let (x0, x1) = (&f.xs()[k], &f.xs()[k + 1]);
        let (y0, y1) = (&f.ys()[k], &f.ys()[k + 1]);
        if y0 != y1 {
            let inv_slope = (x1 - x0) / (y1 - y0);
            let (a, b) = if y0 < y1 { (y0, y1) } else { (y1, y0) };
            let start = gx.partition_point(|u| u <= a);
            let end = gx.partition_point(|u| u < b);
            let push = |i: usize, xs: &mut Vec<Rational>, ys: &mut Vec<Rational>| {
                xs.push(x0 + (&gx[i] - y0) * &inv_slope);
                ys.push(gy[i].clone());
            };
            if y0 < y1 {
                for i in start..end {
                    push(i, &mut xs, &mut ys);
                }
            } else {
                for i in (start..end).rev() {
                    push(i, &mut xs, &mut ys);
                }
            }
        }
        xs.push(x1.clone());
        ys.push(g.eval_unchecked(y1));
    }
    Ok(PLMap::from_parts(xs, ys, g.codomain_lo().clone(), g.codomain_hi().clone()))
}

/// Exact `f^n`, aborting once an iterate has more than `piece_budget` pieces.
pub fn iterate(f: &PLMap, n: u64, piece_budget: usize) -> Result<PLMap> {
    let (lo, hi) = f.range();
    if lo < *f.domain_lo() || hi > *f.domain_hi() {
        return Err(Error::Composition("iterate needs a self-map".into()));
    }
    let mut acc = PLMap::identity(f.domain_lo().clone(), f.domain_hi().clone());
    for i in 1..=n {
        acc = if i == 1 { f.clone() } else { compose(f, &acc)? };
        if acc.piece_count() > piece_budget {
            return Err(Error::IterateBudget { iterate: i, pieces: acc.piece_count() as u64, limit: piece_budget as u64 });
        }
    }
    Ok(acc)
}

/// Exact inverse of a strictly monotone map.
pub fn inverse(h: &PLMap) -> Result<PLMap> {
    let inc = h.ys().windows(2).all(|w| w[0] < w[1]);
    let dec = h.ys().windows(2).all(|w| w[0] > w[1]);
    if !inc && !dec {
        return Err(Error::InvalidMap("map is not injective".into()));
    }
    let mut nodes: Vec<(Rational, Rational)> = h.ys().iter().cloned().zip(h.xs().iter().cloned()).collect();
    if dec {
        nodes.reverse();
    }
    PLMap::new(nodes, h.domain_lo().clone(), h.domain_hi().clone())
}

/// Exact `h ∘ f ∘ h⁻¹` for a PL homeomorphism `h`.
pub fn conjugate(f: &PLMap, h: &PLMap) -> Result<PLMap> {
    let hinv = inverse(h)?;
    compose(h, &compose(f, &hinv)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn tent_iterates() {
        let t3 = iterate(&PLMap::tent(), 3, 1_000_000).unwrap();
        assert_eq!(t3.piece_count(), 8);
        assert!(t3.slopes().iter().all(|s| s.abs() == q(8, 1)));
        assert_eq!(iterate(&PLMap::tent(), 0, 10).unwrap(), PLMap::unit_identity());
        assert_eq!(iterate(&PLMap::tent(), 1, 10).unwrap(), PLMap::tent());
    }

    #[test]
    fn budget_reports_iterate() {
        let err = iterate(&PLMap::tent(), 10, 100).unwrap_err();
        match err {
            Error::IterateBudget { iterate, pieces, limit } => {
                assert_eq!((iterate, pieces, limit), (7, 128, 100));
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn composition_domain_mismatch() {
        let wide = PLMap::new(vec![(q(0, 1), q(0, 1)), (q(1, 1), q(2, 1))], q(0, 1), q(2, 1)).unwrap();
        assert!(matches!(compose(&PLMap::tent(), &wide), Err(Error::Composition(_))));
    }

    #[test]
    fn inverse_round_trip() {
        let h = PLMap::unit(vec![(q(0, 1), q(0, 1)), (q(1, 2), q(1, 4)), (q(1, 1), q(1, 1))]).unwrap();
        let hi = inverse(&h).unwrap();
        assert_eq!(compose(&h, &hi).unwrap(), PLMap::unit_identity());
        assert!(inverse(&PLMap::tent()).is_err());
    }

    #[test]
    fn conjugate_by_identity() {
        let t = PLMap::tent();
        assert_eq!(conjugate(&t, &PLMap::unit_identity()).unwrap(), t);
    }
}
