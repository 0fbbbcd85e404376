//! Exact checks of the near-identity properties of `λ_{n,k}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::exactmap::{sup_distance, ImageIndex, PLMap};
use crate::par::Execution;
use crate::rational::Rational;

use super::crooked::{check_pairs, is_crooked_between, value_grid};
use super::generators::{epsilon_gamma, lambda_nk};

/// A failed interval check: the interval `A`, the radius `r` used by the
/// neighborhood check, and the exact image of `A`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalWitness {
    pub a: (Rational, Rational),
    pub r: Rational,
    pub image: (Rational, Rational),
}

/// Outcome of [`verify_minc_updt`].
#[derive(Clone, Debug)]
pub struct MincReport {
    pub n: u32,
    pub k: u32,
    pub epsilon: Rational,
    pub gamma: Rational,
    /// Exact `sup |λ - id|` against the bound `ε/2 + γ`.
    pub distance: Rational,
    pub distance_bound: Rational,
    pub distance_ok: bool,
    /// `3γ`-crookedness on grid pairs closer than `ε`.
    pub crooked_ok: bool,
    pub crooked_pairs: usize,
    pub crooked_step: Rational,
    pub crooked_witness: Option<(Rational, Rational, Rational, Rational)>,
    pub trials: usize,
    pub nondecreasing_ok: bool,
    pub long_image_ok: bool,
    pub contains_ok: bool,
    pub neighborhood_ok: bool,
    pub interval_witness: Option<(String, IntervalWitness)>,
    /// First-maximum locations in consecutive `γ`-cells sit `γ` apart, with values `γ` apart.
    pub maxima_spacing_ok: bool,
}

impl MincReport {
    pub fn passed(&self) -> bool {
        self.distance_ok && self.crooked_ok && self.nondecreasing_ok && self.long_image_ok && self.contains_ok && self.neighborhood_ok && self.maxima_spacing_ok
    }
}

/// First point of `[lo, hi]` where `f` attains its maximum over that interval.
pub fn first_max_location(f: &PLMap, lo: &Rational, hi: &Rational) -> Result<Rational> {
    let (_, top) = f.image_of_interval(lo, hi)?;
    let mut best = if f.eval(lo)? == top { Some(lo.clone()) } else { None };
    if best.is_none() {
        best = f.xs().iter().find(|x| *x > lo && *x <= hi && f.eval(x).map(|v| v == top).unwrap_or(false)).cloned();
    }
    Ok(best.unwrap_or_else(|| hi.clone()))
}

/// Consecutive first-maximum locations of `λ_{n,k}` over the cells
/// `[(j-1)γ, jγ]`, `j = 1..=k+(n-1)/2`.
pub fn maxima_locations(lambda: &PLMap, n: u32, k: u32) -> Result<Vec<(Rational, Rational)>> {
    let (_, gamma) = epsilon_gamma(n, k);
    let cells = k + (n - 1) / 2;
    (1..=cells)
        .map(|j| {
            let lo = &gamma * &Rational::from_int(j as i64 - 1);
            let hi = &gamma * &Rational::from_int(j as i64);
            let x = first_max_location(lambda, &lo, &hi)?;
            let y = lambda.eval(&x)?;
            Ok((x, y))
        })
        .collect()
}

fn random_unit(rng: &mut ChaCha8Rng, den: i64) -> Rational {
    Rational::new(rng.random_range(0..=den), den)
}

/// Checks the distance bound, local `3γ`-crookedness and the interval
/// properties of `λ_{n,k}`; interval checks use `trials` random rational
/// intervals drawn from `seed`.
pub fn verify_minc_updt(n: u32, k: u32, trials: usize, seed: u64) -> Result<MincReport> {
    verify_minc_updt_with(n, k, trials, seed, Execution::default())
}

pub fn verify_minc_updt_with(n: u32, k: u32, trials: usize, seed: u64, exec: Execution) -> Result<MincReport> {
    let lambda = lambda_nk(n, k)?;
    let (epsilon, gamma) = epsilon_gamma(n, k);
    let two = Rational::from_int(2);
    let three = Rational::from_int(3);

    let distance = sup_distance(&lambda, &PLMap::unit_identity())?;
    let distance_bound = &epsilon / &two + &gamma;
    let distance_ok = distance < distance_bound;

    let crooked_delta = &three * &gamma;
    let crooked_step = &gamma / &three;
    let values = value_grid(&Rational::zero(), &Rational::one(), &crooked_step)?;
    let (crooked_witness, crooked_pairs) = check_pairs(&values, &crooked_delta, exec, |a, b| {
        if (a - b).abs() >= epsilon {
            return Ok(super::crooked::PairCheck { crooked: true, violation: None });
        }
        is_crooked_between(&lambda, a, b, &crooked_delta)
    })?;

    let index = ImageIndex::new(&lambda);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let den = 1i64 << 20;
    let mut report = MincReport {
        n,
        k,
        epsilon: epsilon.clone(),
        gamma: gamma.clone(),
        distance,
        distance_bound,
        distance_ok,
        crooked_ok: crooked_witness.is_none(),
        crooked_pairs,
        crooked_step,
        crooked_witness,
        trials,
        nondecreasing_ok: true,
        long_image_ok: true,
        contains_ok: true,
        neighborhood_ok: true,
        interval_witness: None,
        maxima_spacing_ok: true,
    };
    let fail = |name: &str, ok: &mut bool, w: IntervalWitness, slot: &mut Option<(String, IntervalWitness)>| {
        *ok = false;
        slot.get_or_insert((name.to_string(), w));
    };
    for trial in 0..trials {
        // Alternate short and long intervals so both regimes are exercised.
        let (u, v) = (random_unit(&mut rng, den), random_unit(&mut rng, den));
        let (mut lo, mut hi) = if u <= v { (u, v) } else { (v, u) };
        if trial % 2 == 0 {
            let len = &gamma * &Rational::new(rng.random_range(1..=4 * den), den);
            hi = Rational::min(&(&lo + &len), &Rational::one());
            if hi == lo {
                lo = &hi - &len;
            }
        }
        let r = &gamma * &Rational::new(rng.random_range(0..=8 * den), den);
        let image = index.image(&lo, &hi)?;
        let w = || IntervalWitness { a: (lo.clone(), hi.clone()), r: r.clone(), image: image.clone() };
        let diam = &hi - &lo;
        let image_diam = &image.1 - &image.0;
        if image_diam < diam {
            fail("nondecreasing", &mut report.nondecreasing_ok, w(), &mut report.interval_witness);
        }
        if diam <= gamma {
            continue;
        }
        if image_diam <= &epsilon / &two {
            fail("long_image", &mut report.long_image_ok, w(), &mut report.interval_witness);
        }
        if image.0 > lo || image.1 < hi {
            fail("contains", &mut report.contains_ok, w(), &mut report.interval_witness);
        }
        let b_lo = Rational::max(&(&lo - &r), &Rational::zero());
        let b_hi = Rational::min(&(&hi + &r), &Rational::one());
        let (bl, bh) = index.image(&b_lo, &b_hi)?;
        let reach = &r + &gamma;
        if bl < &image.0 - &reach || bh > &image.1 + &reach {
            fail("neighborhood", &mut report.neighborhood_ok, w(), &mut report.interval_witness);
        }
    }

    let maxima = maxima_locations(&lambda, n, k)?;
    report.maxima_spacing_ok = maxima.windows(2).all(|w| &w[1].0 - &w[0].0 == gamma && &w[1].1 - &w[0].1 == gamma);
    Ok(report)
}
