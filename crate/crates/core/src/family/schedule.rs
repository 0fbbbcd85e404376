use std::fmt::Write as _;

use crate::crookedgen::CrookednessReport;
use crate::error::{Error, Result};
use crate::exactmap::{is_admissible, PLMap};
use crate::rational::Rational;

use super::crookify::{search, CrookifyBudgets};
use super::{f_tilde, g_tilde};

/// Stages `(n_i, k_i)` applied on the right of `f̃_t`, with their distance
/// budgets, crookedness targets and iterate exponents.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PerturbationSchedule {
    pub stages: Vec<(u32, u32)>,
    pub etas: Vec<Rational>,
    pub deltas: Vec<Rational>,
    pub ns: Vec<u32>,
}

impl PerturbationSchedule {
    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    /// Whether the stage budgets sum to less than `total`.
    pub fn within_budget(&self, total: &Rational) -> bool {
        self.etas.iter().fold(Rational::zero(), |acc, e| &acc + e) < *total
    }

    /// `f̃_t ∘ λ_{n_1,k_1} ∘ … ∘ λ_{n_m,k_m}`.
    pub fn apply(&self, t: &Rational, piece_budget: usize) -> Result<PLMap> {
        g_tilde(t, &self.stages, piece_budget)
    }

    /// One `stage n k eta delta N` line per stage.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for i in 0..self.len() {
            let (n, k) = self.stages[i];
            let _ = writeln!(s, "stage {n} {k} {} {} {}", self.etas[i], self.deltas[i], self.ns[i]);
        }
        s
    }

    /// Parses [`to_text`](Self::to_text) output; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = PerturbationSchedule::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Parse(format!("line {}: expected `stage n k eta delta N`, got {line:?}", no + 1));
            if fields.len() != 6 || fields[0] != "stage" {
                return Err(bad());
            }
            let n: u32 = fields[1].parse().map_err(|_| bad())?;
            let k: u32 = fields[2].parse().map_err(|_| bad())?;
            let big_n: u32 = fields[5].parse().map_err(|_| bad())?;
            if n < 7 || n.is_multiple_of(2) || k == 0 {
                return Err(Error::Parse(format!("line {}: n must be odd and at least 7, k positive", no + 1)));
            }
            out.stages.push((n, k));
            out.etas.push(fields[3].parse()?);
            out.deltas.push(fields[4].parse()?);
            out.ns.push(big_n);
        }
        Ok(out)
    }
}

/// Outcome of one stage at one parameter value.
#[derive(Clone, Debug)]
pub struct StageReport {
    pub t: Rational,
    /// Exact `ρ(g_t ∘ λ, g_t)`.
    pub distance: Rational,
    pub report: CrookednessReport,
}

/// Schedule found by [`crookify_family`] and the per-stage evidence.
#[derive(Clone, Debug)]
pub struct FamilySchedule {
    pub schedule: PerturbationSchedule,
    pub ts: Vec<Rational>,
    /// `reports[i][j]`: stage `i` at `ts[j]`.
    pub reports: Vec<Vec<StageReport>>,
    /// Final maps `g_t`, in the order of `ts`.
    pub maps: Vec<PLMap>,
    /// Set when a stage could not be completed; the schedule holds the
    /// stages found before it.
    pub diagnostics: Option<String>,
}

impl FamilySchedule {
    pub fn complete(&self) -> bool {
        self.diagnostics.is_none()
    }
}

/// One stage sequence for the whole sampled family.
///
/// Stage `i` (from 1) gets the distance budget `eta_total / 2^i` and the
/// target `deltas[i - 1]`; the same `λ_{n,k}` is composed on the right of
/// every `g_t`, and the common iterate is the largest covering time.
pub fn crookify_family(ts: &[Rational], eta_total: &Rational, deltas: &[Rational], budgets: &CrookifyBudgets) -> Result<FamilySchedule> {
    if ts.is_empty() {
        return Err(Error::Precondition("no parameter values".into()));
    }
    let mut maps: Vec<PLMap> = ts.iter().map(f_tilde).collect::<Result<_>>()?;
    if let Some(j) = maps.iter().position(|f| !is_admissible(f)) {
        return Err(Error::Precondition(format!("f̃_t is not admissible at t = {}", ts[j])));
    }
    let mut schedule = PerturbationSchedule::default();
    let mut reports = Vec::new();
    let mut eta = eta_total.clone();
    for (i, delta) in deltas.iter().enumerate() {
        eta = &eta / &Rational::from_int(2);
        match search(&maps, &eta, delta, budgets) {
            Ok(found) => {
                schedule.stages.push((found.n, found.k));
                schedule.etas.push(eta.clone());
                schedule.deltas.push(delta.clone());
                schedule.ns.push(found.iterate);
                let mut stage = Vec::with_capacity(ts.len());
                maps = Vec::with_capacity(ts.len());
                for (t, acc) in ts.iter().zip(found.accepted) {
                    stage.push(StageReport { t: t.clone(), distance: acc.distance, report: acc.report });
                    maps.push(acc.map);
                }
                reports.push(stage);
            }
            Err(e @ (Error::Exhausted { .. } | Error::Budget { .. })) => {
                return Ok(FamilySchedule { schedule, ts: ts.to_vec(), reports, maps, diagnostics: Some(format!("stage {}: {e}", i + 1)) });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(FamilySchedule { schedule, ts: ts.to_vec(), reports, maps, diagnostics: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmap::sup_distance;
    use crate::rational::q;

    fn sample() -> PerturbationSchedule {
        PerturbationSchedule { stages: vec![(11, 530), (7, 5)], etas: vec![q(1, 10), q(1, 20)], deltas: vec![q(1, 4), q(1, 8)], ns: vec![3, 2] }
    }

    #[test]
    fn text_round_trip() {
        let s = sample();
        let text = s.to_text();
        assert_eq!(text, "stage 11 530 1/10 1/4 3\nstage 7 5 1/20 1/8 2\n");
        assert_eq!(PerturbationSchedule::parse(&text).unwrap(), s);
        assert_eq!(PerturbationSchedule::parse(&format!("# header\n\n{text}")).unwrap(), s);
        assert!(s.within_budget(&q(1, 5)));
        assert!(!s.within_budget(&q(3, 20)));
    }

    #[test]
    fn parse_rejects_malformed() {
        assert!(PerturbationSchedule::parse("stage 7 5 1/10 1/4").is_err());
        assert!(PerturbationSchedule::parse("stage 8 5 1/10 1/4 2").is_err());
        assert!(PerturbationSchedule::parse("stage 7 0 1/10 1/4 2").is_err());
        assert!(PerturbationSchedule::parse("step 7 5 1/10 1/4 2").is_err());
        assert!(PerturbationSchedule::parse("stage 7 5 x 1/4 2").is_err());
    }

    #[test]
    fn schedule_keeps_endpoint_behavior() {
        let s = PerturbationSchedule { stages: vec![(7, 1), (7, 1)], etas: vec![q(1, 4), q(1, 8)], deltas: vec![q(1, 2), q(1, 2)], ns: vec![1, 1] };
        let g0 = s.apply(&q(0, 1), 1 << 20).unwrap();
        let g1 = s.apply(&q(1, 1), 1 << 20).unwrap();
        assert_eq!(g0.eval(&q(0, 1)).unwrap(), q(0, 1));
        assert_eq!(g1.eval(&q(0, 1)).unwrap(), q(1, 1));
        assert_eq!(g1.eval(&q(1, 1)).unwrap(), q(0, 1));
    }

    #[test]
    fn family_members_stay_as_close_as_the_base_family() {
        let stages = [(7u32, 1u32), (7, 1)];
        let ts: Vec<Rational> = (0..=4).map(|j| q(j, 4)).collect();
        let gs: Vec<PLMap> = ts.iter().map(|t| g_tilde(t, &stages, 1 << 20).unwrap()).collect();
        for j in 0..4 {
            let base = sup_distance(&f_tilde(&ts[j]).unwrap(), &f_tilde(&ts[j + 1]).unwrap()).unwrap();
            assert!(sup_distance(&gs[j], &gs[j + 1]).unwrap() <= base);
        }
    }
}
