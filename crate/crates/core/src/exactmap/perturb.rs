use crate::error::{Error, Result};
use crate::rational::Rational;

use super::PLMap;

/// Result of an `m`-fold window perturbation of `f` on `[a, b]`.
#[derive(Clone, Debug)]
pub struct WindowPerturbation {
    /// The accordion map on `[a, b]` alone.
    pub window: PLMap,
    /// `f` outside `[a, b]` glued to the window; `None` when the glue would
    /// be discontinuous at `b`.
    pub glued: Option<PLMap>,
    /// Set when the window's value at `b` differs from `f(b)` (even `m`).
    pub discontinuous_at_b: bool,
}

impl WindowPerturbation {
    /// The glued map, or an error naming the jump at `b`.
    pub fn into_map(self) -> Result<PLMap> {
        self.glued.ok_or_else(|| Error::Precondition("even-fold perturbation is discontinuous at the window end".into()))
    }
}

/// Replaces `f` on `[a, b]` by `m` alternately reversed copies of `f|[a,b]`,
/// each squeezed into a subwindow of length `(b - a) / m`.
pub fn window_perturbation(f: &PLMap, a: &Rational, b: &Rational, m: u32) -> Result<WindowPerturbation> {
    if m == 0 {
        return Err(Error::Precondition("fold count must be positive".into()));
    }
    if a >= b || a < f.domain_lo() || b > f.domain_hi() {
        return Err(Error::Precondition(format!("window [{a}, {b}] not inside the domain")));
    }
    let base = f.restrict(a, b)?;
    let mr = Rational::from_int(m as i64);
    let width = (b - a) / &mr;
    let mut xs: Vec<Rational> = Vec::new();
    let mut ys: Vec<Rational> = Vec::new();
    for j in 0..m {
        let left = a + &width * &Rational::from_int(j as i64);
        let right = &left + &width;
        let copy: Vec<(Rational, Rational)> = if j % 2 == 0 {
            base.nodes().map(|(u, v)| (&left + (u - a) / &mr, v.clone())).collect()
        } else {
            base.nodes().rev().map(|(u, v)| (&right - (u - a) / &mr, v.clone())).collect()
        };
        for (i, (x, y)) in copy.into_iter().enumerate() {
            if j > 0 && i == 0 {
                continue;
            }
            xs.push(x);
            ys.push(y);
        }
    }
    let window = PLMap::from_parts(xs.clone(), ys.clone(), f.codomain_lo().clone(), f.codomain_hi().clone());
    let fb = f.eval_unchecked(b);
    let discontinuous_at_b = ys.last() != Some(&fb);
    let glued = if discontinuous_at_b {
        None
    } else {
        let mut gx: Vec<Rational> = Vec::new();
        let mut gy: Vec<Rational> = Vec::new();
        for (x, y) in f.nodes() {
            if x < a {
                gx.push(x.clone());
                gy.push(y.clone());
            }
        }
        gx.extend(xs);
        gy.extend(ys);
        for (x, y) in f.nodes() {
            if x > b {
                gx.push(x.clone());
                gy.push(y.clone());
            }
        }
        Some(PLMap::from_parts(gx, gy, f.codomain_lo().clone(), f.codomain_hi().clone()))
    };
    Ok(WindowPerturbation { window, glued, discontinuous_at_b })
}

/// The PL homeomorphism `h(x) = μ([0, x])` for a piecewise-constant density.
///
/// `density_breaks` lists `(right end, density)` for consecutive cells
/// starting at 0; the last right end must be 1.
pub fn measure_conjugator(density_breaks: &[(Rational, Rational)]) -> Result<PLMap> {
    if density_breaks.is_empty() {
        return Err(Error::Precondition("empty density".into()));
    }
    let mut xs = vec![Rational::zero()];
    let mut ys = vec![Rational::zero()];
    for (end, d) in density_breaks {
        if !d.is_positive() {
            return Err(Error::Precondition(format!("non-positive density {d}")));
        }
        let start = xs.last().unwrap().clone();
        if *end <= start {
            return Err(Error::Precondition(format!("cell ends not increasing at {end}")));
        }
        let y = ys.last().unwrap() + d * &(end - &start);
        xs.push(end.clone());
        ys.push(y);
    }
    if *xs.last().unwrap() != Rational::one() {
        return Err(Error::Precondition("density cells must end at 1".into()));
    }
    let total = ys.last().unwrap().clone();
    if total != Rational::one() {
        return Err(Error::Precondition(format!("total mass {total} differs from 1")));
    }
    PLMap::from_columns(xs, ys, Rational::zero(), Rational::one())
}
