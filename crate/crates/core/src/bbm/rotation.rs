use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::exactmap::PLMap;
use crate::rational::Rational;

use super::band::FloatBand;

/// Fewest boundary samples accepted by the estimator.
pub const MIN_ROTATION_SAMPLES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimateStatus {
    Experimental,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationEstimate {
    /// Mean angular displacement in turns, in `[0, 1)`.
    pub value: f64,
    /// Length of the mean displacement vector on the unit circle, in `[0, 1]`.
    pub coherence: f64,
    pub status: EstimateStatus,
}

impl RotationEstimate {
    /// Distance from `target` on the circle of turns.
    pub fn circle_distance(&self, target: f64) -> f64 {
        let d = (self.value - target).rem_euclid(1.0);
        d.min(1.0 - d)
    }
}

/// Point at arc-length parameter `s in [0, 1)` on the band boundary,
/// counterclockwise from `(0, -1)`.
fn boundary_point(s: f64) -> (f64, f64) {
    // Perimeter 6: bottom 1, right 2, top 1, left 2.
    let u = s * 6.0;
    match u {
        u if u < 1.0 => (u, -1.0),
        u if u < 3.0 => (1.0, -1.0 + (u - 1.0)),
        u if u < 4.0 => (1.0 - (u - 3.0), 1.0),
        u => (0.0, 1.0 - (u - 4.0)),
    }
}

/// Angular displacement about `(1/2, 0)`, averaged on the circle.
///
/// The boundary of the band is sampled at `samples` equally spaced
/// arc-length positions and pushed forward `n_band_iters` times, giving
/// points on the boundary of the `n`-th image of the band. Each is paired
/// with its image under one more step; the displacement angles are averaged
/// as unit vectors.
pub fn estimate_boundary_rotation(f: &PLMap, delta: &Rational, n_band_iters: usize, samples: usize) -> Result<RotationEstimate> {
    if samples < MIN_ROTATION_SAMPLES {
        return Err(Error::Precondition(format!("need at least {MIN_ROTATION_SAMPLES} boundary samples, got {samples}")));
    }
    let band = FloatBand::new(f, delta)?;
    let angle = |(x, y): (f64, f64)| (y).atan2(x - 0.5);
    let (mut sx, mut sy) = (0.0, 0.0);
    for j in 0..samples {
        let p = band.iterate(boundary_point(j as f64 / samples as f64), n_band_iters);
        let q = band.step(p);
        let d = angle(q) - angle(p);
        sx += d.cos();
        sy += d.sin();
    }
    let coherence = (sx * sx + sy * sy).sqrt() / samples as f64;
    if coherence < 1e-9 {
        return Err(Error::Precondition("boundary displacements cancel out".into()));
    }
    let value = (sy.atan2(sx) / TAU).rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.
    let value = if value >= 1.0 { 0.0 } else { value };
    Ok(RotationEstimate { value, coherence, status: EstimateStatus::Experimental })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn identity_does_not_rotate() {
        let r = estimate_boundary_rotation(&PLMap::unit_identity(), &q(1, 8), 10, 600).unwrap();
        assert!(r.circle_distance(0.0) < 1e-6, "{r:?}");
    }

    #[test]
    fn flip_rotates_by_half() {
        let flip = PLMap::unit(vec![(q(0, 1), q(1, 1)), (q(1, 1), q(0, 1))]).unwrap();
        let r = estimate_boundary_rotation(&flip, &q(1, 8), 10, 600).unwrap();
        assert!(r.circle_distance(0.5) < 0.05, "{r:?}");
    }

    #[test]
    fn too_few_samples() {
        assert!(estimate_boundary_rotation(&PLMap::tent(), &q(1, 8), 4, 3).is_err());
    }

    #[test]
    fn boundary_walk() {
        assert_eq!(boundary_point(0.0), (0.0, -1.0));
        assert_eq!(boundary_point(0.5), (1.0, 1.0));
        assert_eq!(boundary_point(5.0 / 6.0), (0.0, 0.0));
    }
}
