use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exactmap::FloatMap;

/// Per-step jitter amplitude in float Birkhoff orbits.
///
/// Doubles lose one bit per step under slope-2 branches, so plain float
/// orbits of the tent map die at a fixed point within ~60 steps.
pub const BIRKHOFF_JITTER: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TestFn {
    Id,
    Square,
    Indicator(f64, f64),
}

impl TestFn {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            TestFn::Id => x,
            TestFn::Square => x * x,
            TestFn::Indicator(a, b) => f64::from(u8::from(a <= x && x <= b)),
        }
    }

    /// Integral against Lebesgue measure on `[0, 1]`.
    pub fn lebesgue_integral(self) -> f64 {
        match self {
            TestFn::Id => 0.5,
            TestFn::Square => 1.0 / 3.0,
            TestFn::Indicator(a, b) => (b.min(1.0) - a.max(0.0)).max(0.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BirkhoffReport {
    pub average: f64,
    pub target: f64,
    pub steps: usize,
}

/// Time average of `testfn` along the forward float orbit of `x0`, each step
/// followed by a seeded jitter of size [`BIRKHOFF_JITTER`] kept inside `[0, 1]`.
pub fn birkhoff_average(f: &FloatMap, x0: f64, steps: usize, testfn: TestFn) -> BirkhoffReport {
    let mut rng = ChaCha8Rng::seed_from_u64(x0.to_bits());
    let mut x = x0;
    let mut sum = 0.0;
    for _ in 0..steps.max(1) {
        sum += testfn.eval(x);
        let jitter = BIRKHOFF_JITTER * (rng.random::<f64>() - 0.5);
        x = (f.eval(x) + jitter).clamp(0.0, 1.0);
    }
    BirkhoffReport { average: sum / steps.max(1) as f64, target: testfn.lebesgue_integral(), steps: steps.max(1) }
}
