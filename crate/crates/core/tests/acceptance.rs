//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pseudoarc::bbm::{attractor_cloud, attractor_raster, edge_dynamics_check, estimate_boundary_rotation, hausdorff_distance, EdgeDynamics};
use pseudoarc::crookedgen::{box_counts, crookedness_grid_check, is_crooked_between, lambda_nk, scr, sigma, verify_minc_updt, ChainChecker};
use pseudoarc::exactmap::{is_measure_preserving, read_plmap, sup_distance, write_plmap, PLMap};
use pseudoarc::family::{crookify_family, crookify_step, f_tilde, CrookifyBudgets, FamilySchedule};
use pseudoarc::invlim::{ks_uniform, prokhorov_brute_force, prokhorov_points, sample_mu_hat, BackwardSampler};
use pseudoarc::par::Execution;
use pseudoarc::rational::{q, Rational};

type Check = Result<String, String>;
type Criterion = (u32, &'static str, fn(&mut Suite) -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if !($cond as bool) {
            return Err(format!($($msg)*));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// Shared state: maps built by earlier criteria and the round-trip tally.
#[derive(Default)]
struct Suite {
    family: Option<FamilySchedule>,
    round_trips: usize,
    round_trip_failures: Vec<String>,
}

impl Suite {
    /// Checks that `f` survives a plmap write/read/write cycle bit-exactly.
    fn register(&mut self, name: &str, f: &PLMap) {
        let text = write_plmap(f);
        let good = matches!(read_plmap(&text), Ok(back) if back == *f && write_plmap(&back) == text);
        self.round_trips += 1;
        if !good {
            self.round_trip_failures.push(name.to_string());
        }
    }
}

fn within(start: Instant, limit: Duration, what: &str) -> Result<(), String> {
    let took = start.elapsed();
    ensure!(took < limit, "{what} took {took:.2?}, limit {limit:?}");
    Ok(())
}

fn c1(s: &mut Suite) -> Check {
    let start = Instant::now();
    for (n, d) in [(5, 29u32), (6, 70), (7, 169)] {
        ensure!(scr(n) == d.into(), "scr({n}) = {}, expected {d}", scr(n));
    }
    let s5 = ok(sigma(5))?;
    s.register("sigma5", &s5);
    ensure!(ok(s5.eval(&q(2, 29)))? == q(2, 5), "σ₅(2/29) != 2/5");
    ensure!(ok(s5.eval(&q(12, 29)))? == q(4, 5), "σ₅(12/29) != 4/5");
    within(start, Duration::from_secs(1), "σ values")?;
    Ok(format!("scr = 29/70/169, σ₅ path anchors exact, {:.3?}", start.elapsed()))
}

fn c2(s: &mut Suite) -> Check {
    let mut times = Vec::new();
    for n in [5i64, 6, 7] {
        let start = Instant::now();
        let f = ok(sigma(n))?;
        s.register(&format!("sigma{n}"), &f);
        let r = ok(crookedness_grid_check(&f, &q(3, n), &q(1, 210)))?;
        ensure!(r.verdict, "σ_{n} not 3/{n}-crooked: {:?}", r.worst_pair);
        within(start, Duration::from_secs(60), &format!("σ_{n} grid check"))?;
        times.push(format!("σ_{n} {:.2?} ({} pairs)", start.elapsed(), r.pairs_checked));
    }
    Ok(times.join(", "))
}

/// Branch counts of `λ_{7,5}` in the 11×11 boxes, as drawn: a symmetric band.
fn lambda75_boxes() -> Vec<Vec<u64>> {
    let diag = [141, 85, 83, 83, 83, 83, 83, 83, 83, 85, 141];
    let off1 = [76, 58, 58, 58, 58, 58, 58, 58, 58, 76];
    let off2 = [20, 18, 18, 18, 18, 18, 18, 18, 20];
    let mut m = vec![vec![0u64; 11]; 11];
    for i in 0..11 {
        m[i][i] = diag[i];
        if i + 1 < 11 {
            m[i][i + 1] = off1[i];
            m[i + 1][i] = off1[i];
        }
        if i + 2 < 11 {
            m[i][i + 2] = off2[i];
            m[i + 2][i] = off2[i];
        }
        if i + 3 < 11 {
            m[i][i + 3] = 2;
            m[i + 3][i] = 2;
        }
    }
    m
}

fn c3(s: &mut Suite) -> Check {
    let f = ok(lambda_nk(7, 5))?;
    s.register("lambda_7_5", &f);
    let cert = ok(is_measure_preserving(&f))?;
    ensure!(cert.verdict, "measure certificate failed at {:?}", cert.failing_value);
    ensure!(cert.witnesses.iter().all(|(_, sum)| *sum == Rational::one()), "a branch sum differs from 1");
    for j in 0..=11 {
        ensure!(ok(f.eval(&q(j, 11)))? == q(j, 11), "λ_{{7,5}}({j}/11) != {j}/11");
    }
    ensure!(f.slopes().iter().all(|s| s.abs() == q(239, 1)), "slope field is not ±239");
    let boxes = ok(box_counts(&f, 11))?;
    ensure!(boxes == lambda75_boxes(), "box matrix differs: {boxes:?}");
    ensure!(boxes.iter().all(|col| col.iter().sum::<u64>() == 239), "a column sum differs from 239");
    ensure!((0..11).all(|r| boxes.iter().map(|col| col[r]).sum::<u64>() == 239), "a row sum differs from 239");
    Ok(format!("{} gaps sum to 1, 12 fixed points, |slope| 239, box matrix exact", cert.witnesses.len()))
}

fn c4(s: &mut Suite) -> Check {
    let start = Instant::now();
    let mut parts = Vec::new();
    for (n, k) in [(7u32, 1u32), (7, 5), (9, 3)] {
        let f = ok(lambda_nk(n, k))?;
        s.register(&format!("lambda_{n}_{k}"), &f);
        let m = ok(verify_minc_updt(n, k, 500, 0xACCE))?;
        let bound = q(n as i64 + 1, 2 * (n + k - 1) as i64);
        ensure!(m.distance < bound, "({n},{k}): ρ(λ, id) = {} not below {bound}", m.distance);
        ensure!(m.distance == ok(sup_distance(&f, &PLMap::unit_identity()))?, "({n},{k}): distance routes disagree");
        ensure!(m.crooked_ok, "({n},{k}): 3γ-crookedness failed at {:?}", m.crooked_witness);
        ensure!(m.trials == 500, "({n},{k}): ran {} trials", m.trials);
        ensure!(m.nondecreasing_ok && m.long_image_ok && m.contains_ok && m.neighborhood_ok, "({n},{k}): interval property failed: {:?}", m.interval_witness);
        ensure!(m.passed(), "({n},{k}): report did not pass");
        parts.push(format!("({n},{k}) ρ={}<{bound}", m.distance));
    }
    within(start, Duration::from_secs(600), "Minc suite")?;
    Ok(format!("{}, {:.2?}", parts.join(" "), start.elapsed()))
}

/// Frozen from the first exact sweep over the 1/64 grid.
const FAMILY_LIPSCHITZ: (i64, i64) = (1, 1);

fn c5(s: &mut Suite) -> Check {
    let allowed = [q(7, 1), q(21, 2)];
    for j in 0..=4 {
        let t = q(j, 4);
        let f = ok(f_tilde(&t))?;
        s.register(&format!("f_tilde_{j}/4"), &f);
        ensure!(ok(is_measure_preserving(&f))?.verdict, "f̃_{t} is not measure preserving");
        ensure!(f.slopes().iter().all(|s| allowed.contains(&s.abs())), "f̃_{t} has a slope outside ±7, ±21/2");
        ensure!(ok(f.eval(&q(2, 7)))? == Rational::zero() && ok(f.eval(&q(3, 7)))? == Rational::one(), "f̃_{t} misses its anchors");
    }
    ensure!(ok(ok(f_tilde(&q(0, 1)))?.eval(&q(1, 7)))? == Rational::one(), "f̃₀(1/7) != 1");
    ensure!(ok(ok(f_tilde(&q(1, 1)))?.eval(&Rational::zero()))? == Rational::one(), "f̃₁(0) != 1");
    ensure!(ok(ok(f_tilde(&q(1, 2)))?.eval(&Rational::zero()))? == q(1, 2), "f̃_{{1/2}}(0) != 1/2");
    let h = q(1, 64);
    let lip = q(FAMILY_LIPSCHITZ.0, FAMILY_LIPSCHITZ.1);
    let mut worst = Rational::zero();
    for j in 0..64 {
        let d = ok(sup_distance(&ok(f_tilde(&q(j, 64)))?, &ok(f_tilde(&q(j + 1, 64)))?))?;
        ensure!(d <= &lip * &h, "sup|f̃_t - f̃_t+h| = {d} at t = {j}/64");
        worst = Rational::max(&worst, &d);
    }
    Ok(format!("5 members exact, sweep max {worst} ≤ {lip}·(1/64)"))
}

fn c6(s: &mut Suite) -> Check {
    let start = Instant::now();
    let f = ok(f_tilde(&q(1, 2)))?;
    let (eta, delta) = (q(1, 10), q(1, 4));
    let out = ok(crookify_step(&f, &eta, &delta, &CrookifyBudgets::default()))?;
    let search_time = start.elapsed();
    ensure!(out.distance < eta, "ρ(F, f̃) = {} not below 1/10", out.distance);
    ensure!(ok(sup_distance(&out.map, &f))? == out.distance, "recomputed ρ differs");
    ensure!(out.report.verdict && out.report.worst_pair.is_none(), "report does not pass");
    within(start, Duration::from_secs(1800), "crookify")?;

    // Re-verify the accepted report on a sample of its grid pairs, pair by pair.
    let n = out.iterate as usize;
    let checker = ok(ChainChecker::power(&out.map, n))?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let step = &delta / &q(4, 1);
    let grid: Vec<Rational> = (0..=16).map(|i| &step * &q(i, 1)).collect();
    let mut rechecked = 0;
    for _ in 0..40 {
        let (i, j) = (rng.random_range(0..grid.len()), rng.random_range(0..grid.len()));
        if i == j {
            continue;
        }
        ensure!(ok(checker.is_crooked_pair(&grid[i], &grid[j], &delta))?, "F^{n} fails at ({}, {})", grid[i], grid[j]);
        rechecked += 1;
    }
    drop(checker);

    // The chain route agrees with the direct check on F itself.
    let single = ok(ChainChecker::power(&out.map, 1))?;
    for (a, b) in [(q(0, 1), q(1, 1)), (q(1, 4), q(3, 4)), (q(1, 16), q(11, 16))] {
        let chain = ok(single.check_pair(&a, &b, &delta))?.crooked;
        let direct = ok(is_crooked_between(&out.map, &a, &b, &delta))?.crooked;
        ensure!(chain == direct, "routes disagree on F at ({a}, {b})");
    }
    drop(single);

    // Rejected candidates' violations re-verify as violations.
    let mut violations = 0;
    for c in out.candidates.iter().filter(|c| c.crooked == Some(false)) {
        let Some((a, b)) = c.note.strip_prefix("violation at (").and_then(|r| r.strip_suffix(')')).and_then(|r| r.split_once(", ")) else {
            continue;
        };
        let (a, b): (Rational, Rational) = (ok(a.parse())?, ok(b.parse())?);
        let g = ok(pseudoarc::exactmap::compose(&f, &ok(lambda_nk(c.n, c.k))?))?;
        let iterate = c.iterate.unwrap_or(1) as usize;
        let check = ok(ok(ChainChecker::power(&g, iterate))?.check_pair(&a, &b, &delta))?;
        ensure!(!check.crooked, "candidate ({}, {}) violation at ({a}, {b}) does not reproduce", c.n, c.k);
        violations += 1;
    }
    s.register("crookified_f_half", &out.map);
    Ok(format!(
        "n={} k={} N={} ρ={} ({:.4}), {} pieces, search {:.1?}, {rechecked} pairs and {violations} rejections re-verified",
        out.n,
        out.k,
        out.iterate,
        out.distance,
        out.distance.to_f64(),
        out.map.piece_count(),
        search_time
    ))
}

fn c7(s: &mut Suite) -> Check {
    let f = ok(lambda_nk(7, 1))?;
    s.register("lambda_7_1", &f);
    let sampler = ok(BackwardSampler::new(&f))?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let y = Rational::new(rng.random_range(0..=1i64 << 40), 1 << 40);
        let branches = ok(sampler.branches(&y))?;
        let total = branches.iter().fold(Rational::zero(), |acc, (_, w)| &acc + w);
        ensure!(total == Rational::one(), "weights over {y} sum to {total}");
    }
    let m = ok(sample_mu_hat(&f, 20, 100_000, 21, 7, Execution::default()))?;
    let worst = (0..m.dim()).map(|i| ks_uniform(&m.marginal(i))).fold(0.0, f64::max);
    ensure!(worst < 0.02, "largest marginal KS {worst}");
    let mut instances = 0;
    for n in 1..=8 {
        for _ in 0..25 {
            let draw = |rng: &mut ChaCha8Rng| (0..n).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect::<Vec<_>>();
            let (a, b) = (draw(&mut rng), draw(&mut rng));
            let fast = ok(prokhorov_points(&a, &b))?;
            let slow = ok(prokhorov_brute_force(&a, &b))?;
            ensure!(fast == slow, "n={n}: {fast} vs brute force {slow}");
            instances += 1;
        }
    }
    Ok(format!("100 levels sum to 1, max KS over 21 marginals {worst:.4}, {instances} Prokhorov instances exact"))
}

/// Crookified family on `t in {0, 1/4, 1/2, 3/4, 1}`, built once for criteria 8 and 9.
fn family(s: &mut Suite) -> Result<&FamilySchedule, String> {
    if s.family.is_none() {
        let ts: Vec<Rational> = (0..=4).map(|j| q(j, 4)).collect();
        let fam = ok(crookify_family(&ts, &q(1, 5), &[q(1, 4)], &CrookifyBudgets::default()))?;
        ensure!(fam.complete(), "family schedule incomplete: {:?}", fam.diagnostics);
        s.family = Some(fam);
    }
    Ok(s.family.as_ref().unwrap())
}

fn c8(s: &mut Suite) -> Check {
    let start = Instant::now();
    let fam = family(s)?;
    let built = start.elapsed();
    let (g0, g1) = (&fam.maps[0], &fam.maps[4]);
    let delta = q(1, 8);
    let half = &delta / &q(2, 1);
    let d2 = &delta * &delta;
    let expected_fixed = -(&half / &(Rational::one() - &d2));
    let expected_swap = &half / &(Rational::one() + &d2);
    ensure!(expected_fixed == q(-4, 63) && expected_swap == q(4, 65), "affine solves disagree with -4/63, 4/65");
    match ok(edge_dynamics_check(g0, &delta))? {
        EdgeDynamics::FixedEdge { fixed } => ensure!(fixed == (Rational::zero(), expected_fixed.clone()), "g̃₀ fixed point {fixed:?}"),
        other => return Err(format!("g̃₀ edge dynamics {other:?}")),
    }
    match ok(edge_dynamics_check(g1, &delta))? {
        EdgeDynamics::SwappedEdges { orbit } => {
            ensure!(orbit == [(Rational::zero(), expected_swap.clone()), (Rational::one(), -&expected_swap)], "g̃₁ orbit {orbit:?}")
        }
        other => return Err(format!("g̃₁ edge dynamics {other:?}")),
    }
    let schedule = fam.schedule.to_text().trim().to_string();
    let maps: Vec<PLMap> = fam.maps.clone();
    for (j, g) in maps.iter().enumerate() {
        s.register(&format!("g_tilde_{j}/4"), g);
    }
    Ok(format!("fixed edge y = {expected_fixed}, swapped orbit y₀ = {expected_swap}; schedule `{schedule}` built in {built:.1?}"))
}

/// Attractor sampling budget: 100 seeds × 100 kept points after 100 burn-in steps.
const CLOUD: (usize, usize, usize) = (100, 100, 100);

fn c9(s: &mut Suite) -> Check {
    let fam = family(s)?;
    let schedule = fam.schedule.clone();
    let (m0, m1) = (fam.maps[0].clone(), fam.maps[4].clone());
    let delta = q(1, 8);
    let (burn_in, kept, seeds) = CLOUD;
    let mut clouds = Vec::with_capacity(17);
    for i in 0..=16 {
        let g = ok(schedule.apply(&q(i, 16), 1 << 24))?;
        clouds.push(ok(attractor_cloud(&g, &delta, burn_in, kept, seeds, 9, Execution::default()))?.points);
    }
    let mut means = Vec::new();
    for h in [4usize, 2, 1] {
        let mut total = 0.0;
        for base in [0usize, 4, 8, 12] {
            total += ok(hausdorff_distance(&clouds[base], &clouds[base + h], Execution::default()))?;
        }
        means.push(total / 4.0);
    }
    let r0 = ok(estimate_boundary_rotation(&m0, &delta, 20, 6000))?;
    let r1 = ok(estimate_boundary_rotation(&m1, &delta, 20, 6000))?;
    let detail =
        format!("mean d_H at h = 1/4, 1/8, 1/16: {:.4}, {:.4}, {:.4}; rotation t=0 {:.4}, t=1 {:.4}", means[0], means[1], means[2], r0.value, r1.value);
    ensure!(means[0] > means[1] && means[1] > means[2], "Hausdorff trend not decreasing: {detail}");
    ensure!(r0.circle_distance(0.0) < 0.05 && r1.circle_distance(0.5) < 0.05, "rotation estimates off: {detail}");
    Ok(detail)
}

fn c10(s: &mut Suite) -> Check {
    let exec_modes = [Execution::Sequential, Execution::Parallel];
    let maps =
        || -> Result<Vec<String>, String> { Ok(vec![write_plmap(&ok(lambda_nk(7, 1))?), write_plmap(&ok(sigma(5))?), write_plmap(&ok(f_tilde(&q(1, 3)))?)]) };
    ensure!(maps()? == maps()?, "plmap files differ between constructions");
    let f = ok(lambda_nk(7, 1))?;
    let tables: Vec<String> = exec_modes.iter().map(|&e| ok(sample_mu_hat(&f, 20, 2000, 3, 10, e)).map(|m| m.to_text())).collect::<Result<_, _>>()?;
    ensure!(tables[0] == tables[1], "measure tables differ across execution modes");
    ensure!(tables[0] == ok(sample_mu_hat(&f, 20, 2000, 3, 10, Execution::Parallel))?.to_text(), "measure tables differ between runs");
    let pgms: Vec<Vec<u8>> = exec_modes
        .iter()
        .map(|&e| {
            let cloud = ok(attractor_cloud(&f, &q(1, 8), 50, 200, 20, 10, e))?;
            Ok(ok(attractor_raster(&cloud, 64, 128, e))?.to_pgm())
        })
        .collect::<Result<_, String>>()?;
    ensure!(pgms[0] == pgms[1], "PGM rasters differ across execution modes");
    s.register("f_tilde_1/3", &ok(f_tilde(&q(1, 3)))?);
    ensure!(s.round_trip_failures.is_empty(), "plmap round trip failed for {:?}", s.round_trip_failures);
    Ok(format!("plmap, measure table and PGM byte-identical; {} maps round-trip exactly", s.round_trips))
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "sigma family exactness", c1),
        (2, "sigma crookedness", c2),
        (3, "lambda_{7,5} structure", c3),
        (4, "near-identity lemma suite", c4),
        (5, "parametrized family", c5),
        (6, "crookify f̃_{1/2}", c6),
        (7, "inverse-limit sampling", c7),
        (8, "band edge dynamics", c8),
        (9, "attractor continuity probe", c9),
        (10, "determinism and round trip", c10),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut suite = Suite::default();
    let mut failed = 0;
    for (id, title, run) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| run(&mut suite))).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let took = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {id:>2} PASS [{took:.1?}] {title}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {id:>2} FAIL [{took:.1?}] {title}: {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
