use crate::crookedgen::lambda_nk;
use crate::error::{Error, Result};
use crate::exactmap::{compose, PLMap};
use crate::rational::{q, Rational};

/// The parametrized family `f̃_t`, `t in [0, 1]`.
///
/// On `[2/7, 1]` every member is the fixed zigzag through
/// `(2/7,0) (3/7,1) (4/7,0) (5/7,1) (17/21,0) (19/21,1) (1,0)`. On `[0, 2/7]`
/// a slope-21/2 zigzag of width `2t/21` on each side brackets a slope-7 tent
/// between height `t` and 1, so `f̃_t(0) = t`.
pub fn f_tilde(t: &Rational) -> Result<PLMap> {
    if *t < Rational::zero() || *t > Rational::one() {
        return Err(Error::Precondition(format!("parameter t = {t} outside [0, 1]")));
    }
    let one_minus = Rational::one() - t;
    let x1 = t * &q(2, 21);
    let x2 = t * &q(4, 21);
    let x3 = &x2 + &one_minus / &q(7, 1);
    let x4 = (q(6, 1) - t * &q(2, 1)) / &q(21, 1);
    let left = [(Rational::zero(), t.clone()), (x1, Rational::zero()), (x2, t.clone()), (x3, Rational::one()), (x4, t.clone())];
    let right =
        [(q(2, 7), q(0, 1)), (q(3, 7), q(1, 1)), (q(4, 7), q(0, 1)), (q(5, 7), q(1, 1)), (q(17, 21), q(0, 1)), (q(19, 21), q(1, 1)), (q(1, 1), q(0, 1))];
    let mut nodes: Vec<(Rational, Rational)> = Vec::with_capacity(12);
    for (x, y) in left.into_iter().chain(right) {
        // Zero-width pieces at t = 0 and t = 1 collapse onto their neighbors.
        if nodes.last().is_some_and(|(px, _)| *px == x) {
            continue;
        }
        nodes.push((x, y));
    }
    PLMap::unit(nodes)
}

/// `f̃_t ∘ λ_{n_1,k_1} ∘ … ∘ λ_{n_m,k_m}`, failing once an intermediate
/// composition exceeds `piece_budget` pieces.
pub fn g_tilde(t: &Rational, stages: &[(u32, u32)], piece_budget: usize) -> Result<PLMap> {
    let mut acc = f_tilde(t)?;
    for &(n, k) in stages {
        acc = compose(&acc, &lambda_nk(n, k)?)?;
        if acc.piece_count() > piece_budget {
            return Err(Error::Budget { what: "g_tilde pieces".into(), reached: acc.piece_count() as u64, limit: piece_budget as u64 });
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmap::{is_admissible, is_measure_preserving, markov_analysis, sup_distance};

    #[test]
    fn figure_anchors() {
        let f0 = f_tilde(&q(0, 1)).unwrap();
        assert_eq!(f0.eval(&q(1, 7)).unwrap(), q(1, 1));
        assert_eq!(f0.eval(&q(0, 1)).unwrap(), q(0, 1));
        let f1 = f_tilde(&q(1, 1)).unwrap();
        assert_eq!(f1.eval(&q(0, 1)).unwrap(), q(1, 1));
        assert_eq!(f1.eval(&q(1, 1)).unwrap(), q(0, 1));
        assert_eq!(f1.eval(&q(2, 21)).unwrap(), q(0, 1));
        let fh = f_tilde(&q(1, 2)).unwrap();
        assert_eq!(fh.eval(&q(0, 1)).unwrap(), q(1, 2));
        assert_eq!(fh.eval(&q(1, 21)).unwrap(), q(0, 1));
        assert_eq!(fh.eval(&q(1, 6)).unwrap(), q(1, 1));
        assert_eq!(fh.eval(&q(5, 21)).unwrap(), q(1, 2));
        assert!(f_tilde(&q(-1, 3)).is_err());
        assert!(f_tilde(&q(4, 3)).is_err());
    }

    #[test]
    fn slopes_anchors_and_measure_across_t() {
        let allowed = [q(7, 1), q(21, 2)];
        for j in 0..=16 {
            let t = q(j, 16);
            let f = f_tilde(&t).unwrap();
            assert!(f.slopes().iter().all(|s| allowed.contains(&s.abs())), "t = {t}");
            assert_eq!(f.eval(&q(2, 7)).unwrap(), q(0, 1));
            assert_eq!(f.eval(&q(3, 7)).unwrap(), q(1, 1));
            assert!(is_measure_preserving(&f).unwrap().verdict, "t = {t}");
        }
    }

    #[test]
    fn f0_markov_on_sevenths() {
        let m = markov_analysis(&f_tilde(&q(0, 1)).unwrap()).unwrap();
        assert!(m.is_markov && m.is_leo);
        let mut cuts: Vec<Rational> = (0..=5).map(|i| q(i, 7)).collect();
        cuts.extend([q(17, 21), q(19, 21), q(1, 1)]);
        assert_eq!(m.partition, cuts);
        assert_eq!(m.rows, vec![(0, 8); 8]);
        assert!(is_admissible(&f_tilde(&q(1, 2)).unwrap()));
    }

    #[test]
    fn endpoint_behavior_of_g() {
        assert_eq!(g_tilde(&q(0, 1), &[(7, 1)], 1 << 20).unwrap().eval(&q(0, 1)).unwrap(), q(0, 1));
        let g1 = g_tilde(&q(1, 1), &[(7, 1)], 1 << 20).unwrap();
        assert_eq!(g1.eval(&q(0, 1)).unwrap(), q(1, 1));
        assert_eq!(g1.eval(&q(1, 1)).unwrap(), q(0, 1));
        assert!(matches!(g_tilde(&q(1, 2), &[(7, 1)], 10), Err(Error::Budget { .. })));
    }

    #[test]
    fn g_piece_count_matches_node_enumeration() {
        // Oracle: a node of f∘λ sits at each λ node and at each preimage under
        // λ of an f node; merge those points and drop collinear interior ones.
        let t = q(1, 2);
        let f = f_tilde(&t).unwrap();
        let l = lambda_nk(7, 1).unwrap();
        let mut pts: Vec<Rational> = l.xs().to_vec();
        for x in f.xs() {
            pts.extend(l.preimages(x).unwrap());
        }
        pts.sort();
        pts.dedup();
        let vals: Vec<Rational> = pts.iter().map(|x| f.eval(&l.eval(x).unwrap()).unwrap()).collect();
        let mut count = 0;
        for i in 1..pts.len() - 1 {
            let s0 = (&vals[i] - &vals[i - 1]) / (&pts[i] - &pts[i - 1]);
            let s1 = (&vals[i + 1] - &vals[i]) / (&pts[i + 1] - &pts[i]);
            if s0 != s1 {
                count += 1;
            }
        }
        let g = g_tilde(&t, &[(7, 1)], 1 << 20).unwrap();
        assert_eq!(g.piece_count(), count + 1);
    }

    #[test]
    fn lipschitz_in_t() {
        // Largest ratio sup|f̃_t - f̃_t'| / |t - t'| over the 1/64 grid.
        let h = q(1, 64);
        let mut k = Rational::zero();
        for j in 0..64 {
            let a = f_tilde(&q(j, 64)).unwrap();
            let b = f_tilde(&q(j + 1, 64)).unwrap();
            k = Rational::max(&k, &(sup_distance(&a, &b).unwrap() / &h));
        }
        assert_eq!(k, q(LIPSCHITZ_IN_T.0, LIPSCHITZ_IN_T.1));
    }

    /// Frozen from the first exact sweep.
    const LIPSCHITZ_IN_T: (i64, i64) = (1, 1);
}
