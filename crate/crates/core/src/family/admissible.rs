use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::exactmap::{markov_analysis, PLMap};
use crate::rational::Rational;

/// Refinement rounds allowed before giving up on reaching the target mesh.
const MAX_REFINEMENTS: usize = 64;
/// Partition size allowed during refinement.
const MAX_PARTITION: usize = 1 << 20;

/// Markov partition of `f` refined by pullback until every cell and every
/// cell image is shorter than `epsilon`.
pub fn refined_partition(f: &PLMap, epsilon: &Rational) -> Result<Vec<Rational>> {
    if !epsilon.is_positive() {
        return Err(Error::Precondition(format!("epsilon {epsilon} must be positive")));
    }
    let system = markov_analysis(f)?;
    if !system.is_markov {
        return Err(Error::Precondition("map has no finite Markov partition".into()));
    }
    let mut partition = system.partition;
    for _ in 0..MAX_REFINEMENTS {
        if fine_enough(f, &partition, epsilon)? {
            return Ok(partition);
        }
        let mut next: BTreeSet<Rational> = partition.iter().cloned().collect();
        for p in &partition {
            next.extend(f.preimages(p)?);
        }
        if next.len() == partition.len() {
            break;
        }
        if next.len() > MAX_PARTITION {
            return Err(Error::Budget { what: "Markov refinement cells".into(), reached: next.len() as u64, limit: MAX_PARTITION as u64 });
        }
        partition = next.into_iter().collect();
    }
    if fine_enough(f, &partition, epsilon)? {
        Ok(partition)
    } else {
        Err(Error::Precondition(format!("Markov refinement does not reach mesh {epsilon}")))
    }
}

fn fine_enough(f: &PLMap, partition: &[Rational], epsilon: &Rational) -> Result<bool> {
    let values = f.eval_sorted(partition)?;
    Ok(partition.windows(2).zip(values.windows(2)).all(|(x, y)| &x[1] - &x[0] < *epsilon && (&y[1] - &y[0]).abs() < *epsilon))
}

/// Admissible approximation of a Markov leo map within `epsilon`.
///
/// Each cell of the refined Markov partition is replaced by its `m`-fold
/// window perturbation, `m` the smallest odd integer with `m |slope| >= 4`.
/// The cell's image is unchanged, so the sup distance is below the largest
/// cell image diameter.
pub fn make_admissible(f: &PLMap, epsilon: &Rational) -> Result<PLMap> {
    if f.has_plateau() {
        return Err(Error::Precondition("map has a plateau".into()));
    }
    let partition = refined_partition(f, epsilon)?;
    let values = f.eval_sorted(&partition)?;
    let four = Rational::from_int(4);
    let mut xs = vec![partition[0].clone()];
    let mut ys = vec![values[0].clone()];
    for (x, y) in partition.windows(2).zip(values.windows(2)) {
        let slope = ((&y[1] - &y[0]) / (&x[1] - &x[0])).abs();
        let m = fold_count(&slope, &four);
        let width = (&x[1] - &x[0]) / &Rational::from_int(m as i64);
        for j in 1..=m {
            xs.push(if j == m { x[1].clone() } else { &x[0] + &width * &Rational::from_int(j as i64) });
            ys.push(if j % 2 == 1 { y[1].clone() } else { y[0].clone() });
        }
    }
    PLMap::from_columns(xs, ys, f.codomain_lo().clone(), f.codomain_hi().clone())
}

/// Smallest odd `m` with `m * slope >= target`.
fn fold_count(slope: &Rational, target: &Rational) -> u32 {
    let mut m = 1u32;
    while &(slope * &Rational::from_int(m as i64)) < target {
        m += 2;
    }
    m
}
