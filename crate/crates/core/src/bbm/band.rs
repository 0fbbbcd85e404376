use rand::Rng;

use crate::error::{Error, Result};
use crate::exactmap::{FloatMap, PLMap};
use crate::par::{self, Execution};
use crate::rational::Rational;

/// Default vertical contraction parameter.
pub const DEFAULT_DELTA: (i64, i64) = (1, 8);

/// Point of the band `[0, 1] × [-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub enum BandPoint {
    Exact(Rational, Rational),
    Float(f64, f64),
}

impl BandPoint {
    pub fn in_band(&self) -> bool {
        match self {
            BandPoint::Exact(x, y) => {
                let one = Rational::one();
                *x >= Rational::zero() && *x <= one && y.abs() <= one
            }
            BandPoint::Float(x, y) => (0.0..=1.0).contains(x) && (-1.0..=1.0).contains(y),
        }
    }

    pub fn to_f64(&self) -> (f64, f64) {
        match self {
            BandPoint::Exact(x, y) => (x.to_f64(), y.to_f64()),
            BandPoint::Float(x, y) => (*x, *y),
        }
    }
}

pub(crate) fn check_delta(delta: &Rational) -> Result<()> {
    if !delta.is_positive() || *delta > Rational::new(1, 2) {
        return Err(Error::Precondition(format!("band parameter {delta} outside (0, 1/2]")));
    }
    Ok(())
}

/// `H(x, y) = (f(x), δ(x − 1/2) + δ² y)`.
pub fn band_map(f: &PLMap, delta: &Rational, p: &BandPoint) -> Result<BandPoint> {
    check_delta(delta)?;
    if !p.in_band() {
        return Err(Error::Precondition(format!("{p:?} is outside the band")));
    }
    Ok(match p {
        BandPoint::Exact(x, y) => {
            let fx = f.eval(x)?;
            let y2 = delta * &(x - &Rational::new(1, 2)) + &(delta * delta) * y;
            BandPoint::Exact(fx, y2)
        }
        BandPoint::Float(x, y) => {
            let d = delta.to_f64();
            BandPoint::Float(f.to_float().eval(*x), float_step_y(d, *x, *y))
        }
    })
}

#[inline]
fn float_step_y(d: f64, x: f64, y: f64) -> f64 {
    d * (x - 0.5) + d * d * y
}

/// Float band map with a cached [`FloatMap`].
#[derive(Clone, Debug)]
pub struct FloatBand {
    pub map: FloatMap,
    pub delta: f64,
}

impl FloatBand {
    pub fn new(f: &PLMap, delta: &Rational) -> Result<Self> {
        check_delta(delta)?;
        Ok(FloatBand { map: f.to_float(), delta: delta.to_f64() })
    }

    #[inline]
    pub fn step(&self, (x, y): (f64, f64)) -> (f64, f64) {
        (self.map.eval(x), float_step_y(self.delta, x, y))
    }

    pub fn iterate(&self, mut p: (f64, f64), n: usize) -> (f64, f64) {
        for _ in 0..n {
            p = self.step(p);
        }
        p
    }
}

/// Float approximation of the band attractor.
#[derive(Clone, Debug, PartialEq)]
pub struct AttractorCloud {
    pub points: Vec<(f64, f64)>,
    pub map_id: String,
    pub delta: Rational,
    pub burn_in: usize,
    /// Points kept per seed.
    pub kept: usize,
    pub seeds: usize,
    pub seed: u64,
}

impl AttractorCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The cloud as an [`EmpiricalMeasure`](crate::invlim::EmpiricalMeasure) table.
    pub fn to_measure(&self) -> crate::invlim::EmpiricalMeasure {
        crate::invlim::EmpiricalMeasure {
            points: self.points.iter().map(|&(x, y)| vec![x, y]).collect(),
            map_id: self.map_id.clone(),
            depth: self.burn_in,
            seed: self.seed,
        }
    }
}

/// Iterates the band map from `seeds` uniform starting points, dropping the
/// first `burn_in` images and keeping the next `kept` of each orbit.
///
/// Orbit `i` draws its start from stream `i` of `seed`; orbits are concatenated in order.
pub fn attractor_cloud(f: &PLMap, delta: &Rational, burn_in: usize, kept: usize, seeds: usize, seed: u64, exec: Execution) -> Result<AttractorCloud> {
    if kept == 0 || seeds == 0 {
        return Err(Error::Precondition("kept and seeds must be positive".into()));
    }
    let band = FloatBand::new(f, delta)?;
    let orbits = par::map_range(exec, seeds, |i| {
        let mut rng = par::stream_rng(seed, i as u64);
        let start = (rng.random::<f64>(), 2.0 * rng.random::<f64>() - 1.0);
        let mut p = band.iterate(start, burn_in);
        let mut out = Vec::with_capacity(kept);
        for _ in 0..kept {
            p = band.step(p);
            out.push(p);
        }
        out
    });
    Ok(AttractorCloud { points: orbits.into_iter().flatten().collect(), map_id: f.content_hash(), delta: delta.clone(), burn_in, kept, seeds, seed })
}

/// Exact edge behavior read off `f(0)` and `f(1)`.
#[derive(Clone, Debug, PartialEq)]
pub enum EdgeDynamics {
    /// `f(0) = 0`: the left edge maps into itself with this attracting fixed point.
    FixedEdge {
        fixed: (Rational, Rational),
    },
    /// `f(0) = 1`, `f(1) = 0`: the edges swap along this period-2 orbit.
    SwappedEdges {
        orbit: [(Rational, Rational); 2],
    },
    Neither,
}

pub fn edge_dynamics_check(f: &PLMap, delta: &Rational) -> Result<EdgeDynamics> {
    check_delta(delta)?;
    let (zero, one) = (Rational::zero(), Rational::one());
    let half_delta = delta / &Rational::from_int(2);
    let d2 = delta * delta;
    let (f0, f1) = (f.eval(&zero)?, f.eval(&one)?);
    if f0 == zero {
        // y = -δ/2 + δ² y
        let y = -(&half_delta / &(&one - &d2));
        return Ok(EdgeDynamics::FixedEdge { fixed: (zero, y) });
    }
    if f0 == one && f1 == zero {
        // y0 = δ/2 + δ²(-δ/2 + δ² y0)
        let y0 = &half_delta / &(&one + &d2);
        return Ok(EdgeDynamics::SwappedEdges { orbit: [(zero, y0.clone()), (one, -y0)] });
    }
    Ok(EdgeDynamics::Neither)
}
