use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::exactmap::{FloatMap, PLMap};
use crate::par::{self, Execution};

use super::orbit::BackwardSampler;

/// Uniformly weighted point cloud in `R^m`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMeasure {
    pub points: Vec<Vec<f64>>,
    pub map_id: String,
    pub depth: usize,
    pub seed: u64,
}

impl EmpiricalMeasure {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    /// The common weight `1/count`.
    pub fn weight(&self) -> f64 {
        1.0 / self.points.len() as f64
    }

    /// Coordinate `i` of every point.
    pub fn marginal(&self, i: usize) -> Vec<f64> {
        self.points.iter().map(|p| p[i]).collect()
    }

    /// Image under the truncated shift `(x_0, …) -> (f(x_0), x_0, …)`.
    pub fn shifted(&self, f: &FloatMap) -> EmpiricalMeasure {
        let points = self
            .points
            .iter()
            .map(|p| {
                let mut q = Vec::with_capacity(p.len());
                q.push(f.eval(p[0]));
                q.extend_from_slice(&p[..p.len() - 1]);
                q
            })
            .collect();
        EmpiricalMeasure { points, ..self.clone() }
    }

    /// `#`-prefixed metadata, then one point per line at 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(24 * self.len() * self.dim().max(1) + 128);
        let _ = writeln!(s, "# map {}", self.map_id);
        let _ = writeln!(s, "# depth {}", self.depth);
        let _ = writeln!(s, "# seed {}", self.seed);
        let _ = writeln!(s, "# count {}", self.len());
        for p in &self.points {
            let row: Vec<String> = p.iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut out = EmpiricalMeasure { points: Vec::new(), map_id: String::new(), depth: 0, seed: 0 };
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let mut it = meta.split_whitespace();
                let bad = || Error::Parse(format!("line {}: bad metadata {line:?}", no + 1));
                match (it.next(), it.next()) {
                    (Some("map"), Some(v)) => out.map_id = v.to_string(),
                    (Some("map"), None) => out.map_id.clear(),
                    (Some("depth"), Some(v)) => out.depth = v.parse().map_err(|_| bad())?,
                    (Some("seed"), Some(v)) => out.seed = v.parse().map_err(|_| bad())?,
                    _ => {}
                }
                continue;
            }
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|_| Error::Parse(format!("line {}: bad number {v:?}", no + 1))))
                .collect::<Result<_>>()?;
            if out.points.first().is_some_and(|p| p.len() != row.len()) {
                return Err(Error::Parse(format!("line {}: expected {} coordinates", no + 1, out.dim())));
            }
            out.points.push(row);
        }
        Ok(out)
    }
}

/// `count` independent float backward orbits of depth `depth`, each started
/// uniformly and projected to its first `dims` coordinates.
///
/// Orbit `i` draws from stream `i` of `seed`, so the sample does not depend on scheduling.
pub fn sample_mu_hat(f: &PLMap, depth: usize, count: usize, dims: usize, seed: u64, exec: Execution) -> Result<EmpiricalMeasure> {
    if dims == 0 || dims > depth + 1 {
        return Err(Error::Precondition(format!("projection to {dims} coordinates needs 1 <= dims <= depth + 1 = {}", depth + 1)));
    }
    let sampler = BackwardSampler::new(f)?;
    let points = par::map_range(exec, count, |i| {
        let orbit = sampler.sample_float_uniform(depth, par::stream_rng(seed, i as u64));
        (0..dims).map(|j| orbit.project(j)).collect::<Vec<f64>>()
    });
    Ok(EmpiricalMeasure { points, map_id: sampler.map_id().to_string(), depth, seed })
}

/// Kolmogorov–Smirnov distance between the sample's CDF and the uniform CDF on `[0, 1]`.
pub fn ks_uniform(sample: &[f64]) -> f64 {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            ((i + 1) as f64 / n - x).max(x - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = (na * nb / (na + nb)).sqrt();
    (d, kolmogorov_q((ne + 0.12 + 0.11 / ne) * d))
}

/// `Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} exp(−2 k² λ²)`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-12 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crookedgen::lambda_nk;

    #[test]
    fn depth_zero_is_uniform_sampling() {
        let f = lambda_nk(7, 1).unwrap();
        let m = sample_mu_hat(&f, 0, 20_000, 1, 5, Execution::Sequential).unwrap();
        assert_eq!(m.dim(), 1);
        assert!(ks_uniform(&m.marginal(0)) < 0.02);
        assert!(sample_mu_hat(&f, 0, 10, 2, 5, Execution::Sequential).is_err());
    }

    #[test]
    fn execution_modes_agree() {
        let f = PLMap::tent();
        let a = sample_mu_hat(&f, 8, 500, 3, 9, Execution::Sequential).unwrap();
        let b = sample_mu_hat(&f, 8, 500, 3, 9, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn text_round_trip() {
        let f = PLMap::tent();
        let m = sample_mu_hat(&f, 4, 50, 3, 1, Execution::Sequential).unwrap();
        let text = m.to_text();
        assert!(text.starts_with("# map "));
        let back = EmpiricalMeasure::parse(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn ks_statistics() {
        let grid: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!(ks_uniform(&grid) <= 0.0005 + 1e-12);
        assert!((ks_uniform(&[0.0; 10]) - 1.0).abs() < 1e-12);
        let (d, p) = ks_two_sample(&grid, &grid);
        assert_eq!(d, 0.0);
        assert_eq!(p, 1.0);
        let shifted: Vec<f64> = grid.iter().map(|x| x * 0.5).collect();
        let (d, p) = ks_two_sample(&grid, &shifted);
        assert!((d - 0.5).abs() < 1e-9 && p < 1e-6);
    }
}
