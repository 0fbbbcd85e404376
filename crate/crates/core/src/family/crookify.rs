use std::fmt;
use std::sync::Arc;

use crate::crookedgen::{lambda_nk, ChainChecker, CrookednessReport};
use crate::error::{Error, Result};
use crate::exactmap::{compose, covering_time_with, is_admissible, is_admissible_at_scale, sup_distance, PLMap};
use crate::par::{self, Execution};
use crate::rational::Rational;

/// Limits for the crookify parameter search.
#[derive(Clone, Debug)]
pub struct CrookifyBudgets {
    /// Smallest odd `n` tried.
    pub min_n: u32,
    /// Largest odd `n` tried.
    pub max_n: u32,
    pub max_k: u32,
    /// Pieces allowed in `f ∘ λ_{n,k}`.
    pub piece_budget: usize,
    /// Iterate cap for the covering time `N`.
    pub covering_cap: u32,
    /// Exact distance evaluations allowed per `n`.
    pub evaluations_per_n: u32,
    /// Value-grid step for the crookedness check; `delta / 4` when unset.
    pub grid_step: Option<Rational>,
    pub exec: Execution,
}

impl Default for CrookifyBudgets {
    fn default() -> Self {
        CrookifyBudgets {
            min_n: 7,
            max_n: 15,
            max_k: 5000,
            piece_budget: 5_000_000,
            covering_cap: 8,
            evaluations_per_n: 12,
            grid_step: None,
            exec: Execution::default(),
        }
    }
}

/// One `(n, k)` the search looked at and how far it got.
#[derive(Clone, Debug)]
pub struct CandidateRecord {
    pub n: u32,
    pub k: u32,
    /// Largest exact `ρ(f ∘ λ, f)` over the base maps.
    pub distance: Option<Rational>,
    pub iterate: Option<u32>,
    pub crooked: Option<bool>,
    /// Pairs checked before the first violation (all pairs on success).
    pub pairs_checked: usize,
    pub note: String,
}

impl fmt::Display for CandidateRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={} k={}", self.n, self.k)?;
        if let Some(d) = &self.distance {
            write!(f, " rho={d}")?;
        }
        if let Some(it) = self.iterate {
            write!(f, " N={it}")?;
        }
        if let Some(c) = self.crooked {
            write!(f, " crooked={c} pairs={}", self.pairs_checked)?;
        }
        if !self.note.is_empty() {
            write!(f, " ({})", self.note)?;
        }
        Ok(())
    }
}

/// Result of a successful [`crookify_step`].
#[derive(Clone, Debug)]
pub struct CrookifyOutcome {
    /// `F = f ∘ λ_{n,k}`.
    pub map: PLMap,
    pub n: u32,
    pub k: u32,
    /// Iterate exponent: `F^N` is `delta`-crooked on the value grid.
    pub iterate: u32,
    /// Exact `ρ(F, f)`.
    pub distance: Rational,
    pub report: CrookednessReport,
    pub admissible: bool,
    pub candidates: Vec<CandidateRecord>,
}

/// Per-base data for a successful candidate.
pub(crate) struct Accepted {
    pub map: PLMap,
    pub distance: Rational,
    pub report: CrookednessReport,
}

pub(crate) struct SearchResult {
    pub n: u32,
    pub k: u32,
    pub iterate: u32,
    pub accepted: Vec<Accepted>,
    pub candidates: Vec<CandidateRecord>,
}

/// Smallest `k >= 1` with `(n + 1) / (2 (n + k - 1)) < eta`.
pub fn min_k_for(n: u32, eta: &Rational) -> u32 {
    let bound = Rational::from_int(n as i64 + 1) / (Rational::from_int(2) * eta);
    let floor = bound.floor();
    let k = i64::try_from(&floor).unwrap_or(i64::MAX).saturating_sub(n as i64).saturating_add(2);
    k.clamp(1, u32::MAX as i64) as u32
}

/// Perturbed members with their sup distance to the base.
type Perturbed = Vec<(PLMap, Rational)>;

/// `f ∘ λ_{n,k}` for every base, or `None` when one exceeds the piece budget.
fn perturbed(bases: &[PLMap], n: u32, k: u32, budgets: &CrookifyBudgets) -> Result<Option<Perturbed>> {
    let lambda = lambda_nk(n, k)?;
    let built = par::map_slice(budgets.exec, bases, |f| -> Result<Option<(PLMap, Rational)>> {
        let g = compose(f, &lambda)?;
        if g.piece_count() > budgets.piece_budget {
            return Ok(None);
        }
        let d = sup_distance(&g, f)?;
        Ok(Some((g, d)))
    });
    let mut out = Vec::with_capacity(bases.len());
    for b in built {
        match b? {
            Some(v) => out.push(v),
            None => return Ok(None),
        }
    }
    Ok(Some(out))
}

/// Smallest `k` found for `n` with `max ρ(f ∘ λ_{n,k}, f) < eta`.
///
/// The distance scales roughly like `C / (n + k - 1)`, so each miss jumps to
/// the predicted `k`; a hit then steps down while the next smaller `k` still
/// passes.
fn distance_search(bases: &[PLMap], n: u32, eta: &Rational, budgets: &CrookifyBudgets, records: &mut Vec<CandidateRecord>) -> Result<Option<(u32, Perturbed)>> {
    let record =
        |k: u32, d: Option<Rational>, note: &str| CandidateRecord { n, k, distance: d, iterate: None, crooked: None, pairs_checked: 0, note: note.into() };
    let max_of = |v: &[(PLMap, Rational)]| v.iter().map(|(_, d)| d.clone()).max().unwrap();
    let mut k = min_k_for(n, eta);
    let mut failed_below = k.saturating_sub(1);
    let mut hit: Option<(u32, Perturbed)> = None;
    let mut evaluations = 0;
    while hit.is_none() {
        if k > budgets.max_k || evaluations >= budgets.evaluations_per_n {
            return Ok(None);
        }
        evaluations += 1;
        let Some(maps) = perturbed(bases, n, k, budgets)? else {
            records.push(record(k, None, "over piece budget"));
            return Ok(None);
        };
        let d = max_of(&maps);
        if d < *eta {
            hit = Some((k, maps));
        } else {
            records.push(record(k, Some(d.clone()), "distance too large"));
            failed_below = k;
            let scale = Rational::from_int((n + k - 1) as i64);
            let predicted = (&d * &scale / eta).floor();
            let predicted = i64::try_from(&predicted).unwrap_or(i64::MAX) + 2 - n as i64;
            k = (predicted.clamp(0, u32::MAX as i64) as u32).max(k + 1);
        }
    }
    let (mut k, mut maps) = hit.unwrap();
    while k - 1 > failed_below && evaluations < budgets.evaluations_per_n {
        evaluations += 1;
        match perturbed(bases, n, k - 1, budgets)? {
            Some(lower) if max_of(&lower) < *eta => {
                k -= 1;
                maps = lower;
            }
            Some(lower) => {
                records.push(record(k - 1, Some(max_of(&lower)), "distance too large"));
                break;
            }
            None => break,
        }
    }
    Ok(Some((k, maps)))
}

/// Searches `(n, k)` for `f ∘ λ_{n,k}` close to every base with a crooked
/// common iterate.
pub(crate) fn search(bases: &[PLMap], eta: &Rational, delta: &Rational, budgets: &CrookifyBudgets) -> Result<SearchResult> {
    if bases.is_empty() {
        return Err(Error::Precondition("no base maps".into()));
    }
    if !eta.is_positive() || !delta.is_positive() {
        return Err(Error::Precondition("eta and delta must be positive".into()));
    }
    let step = budgets.grid_step.clone().unwrap_or_else(|| delta / &Rational::from_int(4));
    let mut records: Vec<CandidateRecord> = Vec::new();
    let mut n = budgets.min_n.max(7) | 1;
    while n <= budgets.max_n {
        let Some((k, maps)) = distance_search(bases, n, eta, budgets, &mut records)? else {
            n += 2;
            continue;
        };
        let gamma = Rational::new(1, (n + k - 1) as i64);
        let mut rec =
            CandidateRecord { n, k, distance: maps.iter().map(|(_, d)| d.clone()).max(), iterate: None, crooked: None, pairs_checked: 0, note: String::new() };
        let mut iterate = 1;
        let mut covered = true;
        for (g, _) in &maps {
            match covering_time_with(g, &gamma, budgets.covering_cap, budgets.exec) {
                Ok(t) => iterate = iterate.max(t),
                Err(Error::Covering { .. }) => {
                    covered = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if !covered {
            rec.note = format!("no covering within {} iterates", budgets.covering_cap);
            records.push(rec);
            n += 2;
            continue;
        }
        rec.iterate = Some(iterate);
        let mut accepted = Vec::with_capacity(maps.len());
        let mut all_crooked = true;
        for (f, (g, d)) in bases.iter().zip(maps) {
            let shared = Arc::new(g);
            let checker = ChainChecker::power_shared(shared.clone(), iterate as usize)?;
            let report = checker.grid_check(delta, &step, &f.critical_values(), budgets.exec)?;
            rec.pairs_checked += report.pairs_checked;
            drop(checker);
            if !report.verdict {
                all_crooked = false;
                if let Some((a, b, ..)) = &report.worst_pair {
                    rec.note = format!("violation at ({a}, {b})");
                }
                break;
            }
            let map = Arc::try_unwrap(shared).unwrap_or_else(|a| (*a).clone());
            accepted.push(Accepted { map, distance: d, report });
        }
        rec.crooked = Some(all_crooked);
        records.push(rec);
        if all_crooked {
            return Ok(SearchResult { n, k, iterate, accepted, candidates: records });
        }
        n += 2;
    }
    let best = records
        .iter()
        .filter(|r| r.crooked.is_some())
        .max_by_key(|r| r.pairs_checked)
        .or_else(|| records.iter().filter(|r| r.distance.is_some()).min_by_key(|r| r.distance.clone()))
        .map_or_else(|| "none".to_string(), |r| r.to_string());
    Err(Error::Exhausted { what: "crookify search".into(), best })
}

/// `F = f ∘ λ_{n,k}` with `ρ(F, f) < eta` and `F^N` `delta`-crooked on a
/// value grid, `N` the covering time of `F` at scale `1/(n + k - 1)`.
///
/// Odd `n` are tried upward from `budgets.min_n`; for each, the smallest `k`
/// meeting the exact distance bound is the only candidate.
pub fn crookify_step(f: &PLMap, eta: &Rational, delta: &Rational, budgets: &CrookifyBudgets) -> Result<CrookifyOutcome> {
    if !is_admissible(f) {
        return Err(Error::Precondition("crookify needs an admissible map".into()));
    }
    let found = search(std::slice::from_ref(f), eta, delta, budgets)?;
    let Accepted { map, distance, report } = found.accepted.into_iter().next().unwrap();
    let beta = (0..f.piece_count()).map(|i| &f.xs()[i + 1] - &f.xs()[i]).min().unwrap();
    let admissible = is_admissible_at_scale(&map, &beta);
    Ok(CrookifyOutcome { map, n: found.n, k: found.k, iterate: found.iterate, distance, report, admissible, candidates: found.candidates })
}
