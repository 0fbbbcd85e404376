use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::exactmap::{compose, PLMap};
use crate::rational::Rational;

/// `scr(1) = 1`, `scr(2) = 2`, `scr(n) = 2 scr(n-1) + scr(n-2)`.
pub fn scr(n: u32) -> BigInt {
    assert!(n >= 1, "scr is defined for n >= 1");
    let (mut a, mut b) = (BigInt::from(1), BigInt::from(2));
    if n == 1 {
        return a;
    }
    for _ in 2..n {
        let c = &b * 2 + &a;
        a = b;
        b = c;
    }
    b
}

fn scr_rational(n: u32) -> Rational {
    Rational::from(scr(n))
}

fn fixes_unit_endpoints(g: &PLMap) -> bool {
    let (z, o) = (Rational::zero(), Rational::one());
    *g.domain_lo() == z && *g.domain_hi() == o && g.ys()[0] == z && *g.ys().last().unwrap() == o
}

/// Three-branch map built from `g2` (rising to `(m-1)/m`), a reversed,
/// squeezed copy of `g1`, and `g2` again rising from `1/m` to 1.
pub fn phi(g1: &PLMap, g2: &PLMap, s: &Rational, m: u32) -> Result<PLMap> {
    if !fixes_unit_endpoints(g1) || !fixes_unit_endpoints(g2) {
        return Err(Error::Precondition("phi needs maps of [0,1] fixing 0 and 1".into()));
    }
    if !s.is_positive() || *s >= Rational::new(1, 2) {
        return Err(Error::Precondition(format!("phi needs 0 < s < 1/2, got {s}")));
    }
    if m < 3 {
        return Err(Error::Precondition(format!("phi needs m >= 3, got {m}")));
    }
    let mr = Rational::from_int(m as i64);
    let one = Rational::one();
    let top = (&mr - &one) / &mr;
    let mid = (&mr - Rational::from_int(2)) / &mr;
    let low = one.clone() / &mr;
    let inner = &one - s - s;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (u, v) in g2.nodes() {
        xs.push(u * s);
        ys.push(v * &top);
    }
    for (u, v) in g1.nodes().rev().skip(1) {
        xs.push(&one - s - u * &inner);
        ys.push(&low + v * &mid);
    }
    for (u, v) in g2.nodes().skip(1) {
        xs.push(&one - s + u * s);
        ys.push(&low + v * &top);
    }
    PLMap::from_columns(xs, ys, Rational::zero(), one)
}

fn sigma_cache() -> &'static Mutex<HashMap<u32, Arc<PLMap>>> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<PLMap>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn sigma_positive(n: u32) -> Arc<PLMap> {
    if let Some(m) = sigma_cache().lock().unwrap().get(&n) {
        return m.clone();
    }
    let map = if n <= 2 {
        Arc::new(PLMap::unit_identity())
    } else {
        let g1 = sigma_positive(n - 2);
        let g2 = sigma_positive(n - 1);
        let s = scr_rational(n - 1) / scr_rational(n);
        Arc::new(phi(&g1, &g2, &s, n).expect("valid recursion parameters"))
    };
    sigma_cache().lock().unwrap().insert(n, map.clone());
    map
}

/// The simple `n`-crooked map; negative `n` gives the reflection `1 - σ_{|n|}`.
pub fn sigma(n: i64) -> Result<PLMap> {
    if n == 0 {
        return Err(Error::Precondition("sigma index must be nonzero".into()));
    }
    let base = sigma_positive(n.unsigned_abs() as u32);
    if n > 0 {
        Ok((*base).clone())
    } else {
        base.affine_values(&Rational::from_int(-1), &Rational::one())
    }
}

fn check_nk(n: u32, k: u32) -> Result<()> {
    if n < 7 || n.is_multiple_of(2) {
        return Err(Error::Precondition(format!("n must be odd and at least 7, got {n}")));
    }
    if k < 1 {
        return Err(Error::Precondition("k must be positive".into()));
    }
    Ok(())
}

/// `scr(n-1) / (2 (scr(n) + scr(n-1)))`.
pub fn eta(n: u32) -> Rational {
    let a = scr_rational(n - 1);
    let b = scr_rational(n);
    &a / (Rational::from_int(2) * (&b + &a))
}

/// Uncompressed building map on `[0, n+k-1]` with values in `[0, (2n+k-2)/n]`.
pub fn lambda_hat(n: u32, k: u32) -> Result<PLMap> {
    check_nk(n, k)?;
    let nr = Rational::from_int(n as i64);
    let one = Rational::one();
    let half = Rational::new(1, 2);
    let e = eta(n);
    let two_e = &e + &e;
    let core = sigma(n as i64)?;
    let side = sigma(-(n as i64 - 1))?;
    let scale = (&nr - &one) / &nr;
    let width = &one - &two_e;
    let mut xs: Vec<Rational> = Vec::new();
    let mut ys: Vec<Rational> = Vec::new();
    let push = |x: Rational, y: Rational, xs: &mut Vec<Rational>, ys: &mut Vec<Rational>| {
        if xs.last() != Some(&x) {
            xs.push(x);
            ys.push(y);
        }
    };
    for i in 0..(n + k - 1) {
        let ir = Rational::from_int(i as i64);
        let shift = &ir / &nr;
        let shift_next = (&ir + &one) / &nr;
        // Right half of the reflected side map on [i, i + eta].
        push(ir.clone(), &scale * side.eval(&half)? + &shift, &mut xs, &mut ys);
        for (u, v) in side.nodes().filter(|(u, _)| **u > half) {
            push(&ir + (u - &half) * &two_e, &scale * v + &shift, &mut xs, &mut ys);
        }
        for (u, v) in core.nodes() {
            push(&ir + &e + u * &width, v + &shift, &mut xs, &mut ys);
        }
        // Left half on [i + 1 - eta, i + 1].
        for (u, v) in side.nodes().filter(|(u, _)| **u < half) {
            push(&ir + &one + (u - &half) * &two_e, &scale * v + &shift_next, &mut xs, &mut ys);
        }
        push(&ir + &one, &scale * side.eval(&half)? + &shift_next, &mut xs, &mut ys);
    }
    let hi = Rational::from_int(2 * n as i64 + k as i64 - 2) / &nr;
    PLMap::from_columns(xs, ys, Rational::zero(), hi)
}

/// Folding map `s -> |s|` below 0, identity on `[0,1]`, `2 - s` above 1.
pub fn flip(n: u32, k: u32) -> PLMap {
    let big_n = Rational::from_int((n + k - 1) as i64);
    let lo = -(Rational::from_int(n as i64 - 1) / (Rational::from_int(2) * &big_n));
    let hi = Rational::from_int(3 * n as i64 + 2 * k as i64 - 3) / (Rational::from_int(2) * &big_n);
    let (z, o) = (Rational::zero(), Rational::one());
    let nodes = vec![(lo.clone(), -&lo), (z.clone(), z.clone()), (o.clone(), o.clone()), (hi.clone(), Rational::from_int(2) - &hi)];
    PLMap::new(nodes, z, o).expect("flip nodes are valid")
}

/// The measure-preserving perturbation of the identity with uniform slope
/// `scr(n) + scr(n-1)`, fixing every `j / (n+k-1)`.
pub fn lambda_nk(n: u32, k: u32) -> Result<PLMap> {
    let hat = lambda_hat(n, k)?;
    let big_n = Rational::from_int((n + k - 1) as i64);
    let squeezed = hat.affine_domain(&big_n.recip(), &Rational::zero())?;
    let alpha = Rational::from_int(n as i64) / &big_n;
    let beta = -(Rational::from_int(n as i64 - 1) / (Rational::from_int(2) * &big_n));
    let shifted = squeezed.affine_values(&alpha, &beta)?;
    let fl = flip(n, k);
    let out = compose(&fl, &shifted)?;
    out.with_codomain(Rational::zero(), Rational::one())
}

/// `(n-1)/(n+k-1)` and `1/(n+k-1)`.
pub fn epsilon_gamma(n: u32, k: u32) -> (Rational, Rational) {
    let big_n = (n + k - 1) as i64;
    (Rational::new(n as i64 - 1, big_n), Rational::new(1, big_n))
}

/// Number of monotone pieces of the map inside each box of the `m x m`
/// grid on `[0,1]^2`, indexed `[column][row]`.
///
/// Counts preimages of each row's midpoint inside each column, which is exact
/// when all critical values are multiples of `1/m`.
pub fn box_counts(f: &PLMap, m: u32) -> Result<Vec<Vec<u64>>> {
    let mr = Rational::from_int(m as i64);
    let mut out = vec![vec![0u64; m as usize]; m as usize];
    for row in 0..m {
        let y = (Rational::from_int(2 * row as i64 + 1)) / (Rational::from_int(2) * &mr);
        for x in f.preimages(&y)? {
            let col = (&x * &mr).floor().to_u32().unwrap_or(0).min(m - 1);
            out[col as usize][row as usize] += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn scr_values() {
        let v: Vec<i64> = (1..=8).map(|n| scr(n).to_i64().unwrap()).collect();
        assert_eq!(v, vec![1, 2, 5, 12, 29, 70, 169, 408]);
    }

    #[test]
    fn sigma_three_from_phi() {
        let s3 = phi(&sigma(1).unwrap(), &sigma(2).unwrap(), &q(2, 5), 3).unwrap();
        assert_eq!(s3, sigma(3).unwrap());
        let nodes: Vec<(Rational, Rational)> = s3.nodes().map(|(x, y)| (x.clone(), y.clone())).collect();
        assert_eq!(nodes, vec![(q(0, 1), q(0, 1)), (q(2, 5), q(2, 3)), (q(3, 5), q(1, 3)), (q(1, 1), q(1, 1))]);
    }

    #[test]
    fn sigma_five_matches_drawn_path() {
        let s5 = sigma(5).unwrap();
        let drawn = [
            (0, 0, 1),
            (2, 2, 5),
            (3, 1, 5),
            (5, 3, 5),
            (7, 1, 5),
            (9, 3, 5),
            (10, 2, 5),
            (12, 4, 5),
            (14, 2, 5),
            (15, 3, 5),
            (17, 1, 5),
            (19, 3, 5),
            (20, 2, 5),
            (22, 4, 5),
            (24, 2, 5),
            (26, 4, 5),
            (27, 3, 5),
            (29, 1, 1),
        ];
        let expected: Vec<(Rational, Rational)> = drawn.iter().map(|&(x, a, b)| (q(x, 29), q(a, b))).collect();
        let got: Vec<(Rational, Rational)> = s5.nodes().map(|(x, y)| (x.clone(), y.clone())).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn lambda_hat_unit_block_matches_drawing() {
        let h = lambda_hat(7, 1).unwrap();
        assert_eq!(eta(7), q(35, 239));
        assert_eq!(h.eval(&q(0, 1)).unwrap(), q(3, 7));
        assert_eq!(h.eval(&q(1, 239)).unwrap(), q(2, 7));
        assert_eq!(h.eval(&q(35, 239)).unwrap(), q(0, 1));
        assert_eq!(h.eval(&q(204, 239)).unwrap(), q(1, 1));
        assert_eq!(h.eval(&q(238, 239)).unwrap(), q(5, 7));
        assert_eq!(h.eval(&q(1, 1)).unwrap(), q(4, 7));
    }

    #[test]
    fn flip_folds() {
        let f = flip(7, 5);
        assert_eq!(f.eval(&q(-3, 11)).unwrap(), q(3, 11));
        assert_eq!(f.eval(&q(1, 2)).unwrap(), q(1, 2));
        assert_eq!(f.eval(&q(25, 22)).unwrap(), q(19, 22));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(lambda_nk(8, 1).is_err());
        assert!(lambda_nk(5, 1).is_err());
        assert!(lambda_nk(7, 0).is_err());
        assert!(sigma(0).is_err());
        assert!(phi(&PLMap::tent(), &PLMap::unit_identity(), &q(1, 4), 3).is_err());
        assert!(phi(&PLMap::unit_identity(), &PLMap::unit_identity(), &q(1, 2), 3).is_err());
    }
}
