use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Subcommand};
use pseudoarc::bbm::{attractor_cloud, attractor_raster, edge_dynamics_check, estimate_boundary_rotation, EdgeDynamics};
use pseudoarc::crookedgen::{crookedness_defect_estimate_with, crookedness_grid_check_with, lambda_nk, scr, sigma, verify_minc_updt_with, CrookednessReport};
use pseudoarc::error::Error;
use pseudoarc::exactmap::{is_admissible, is_measure_preserving, markov_analysis, read_plmap, write_plmap, PLMap};
use pseudoarc::family::{crookify_family, crookify_step, f_tilde, CrookifyBudgets, PerturbationSchedule};
use pseudoarc::invlim::{birkhoff_average, ks_uniform, prokhorov_distance, sample_mu_hat, EmpiricalMeasure, TestFn};
use pseudoarc::par::Execution;
use pseudoarc::rational::Rational;

use crate::report::{Check, RunReport};
use crate::{parse_rational, Cli, Command, Global};

/// Invalid arguments that clap cannot catch on its own.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

const EXEC: Execution = Execution::Parallel;

fn require_seed(g: &Global) -> Result<u64> {
    g.seed.ok_or_else(|| usage("this command is randomized and requires --seed"))
}

fn artifact_path(g: &Global, given: &Option<PathBuf>, default_name: &str) -> PathBuf {
    g.out_dir.join(given.as_deref().unwrap_or(Path::new(default_name)))
}

fn write_artifact(report: &mut RunReport, path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
    report.artifact(path.display());
    Ok(())
}

fn read_map(path: &Path) -> Result<PLMap> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    read_plmap(&text).with_context(|| format!("parsing {}", path.display()))
}

fn quad(p: &Option<(Rational, Rational, Rational, Rational)>) -> String {
    match p {
        Some((a, b, c, d)) => format!("{a} {b} {c} {d}"),
        None => "none".into(),
    }
}

fn record_crookedness(c: &mut Check, r: &CrookednessReport) {
    c.verdict = Some(r.verdict);
    c.value("delta", &r.delta).value("mode", r.mode).value("pairs_checked", r.pairs_checked).value("worst_pair", quad(&r.worst_pair));
    if let Some(step) = &r.grid_step {
        c.value("grid_step", step);
    }
    if let Some(d) = &r.defect_estimate {
        c.value("defect_estimate", d);
    }
}

fn record_map(c: &mut Check, f: &PLMap) {
    let ends = |x: &Rational| f.eval(x).map(|y| y.to_string()).unwrap_or_else(|_| "undefined".into());
    c.value("pieces", f.piece_count())
        .value("laps", f.lap_count())
        .value("domain", format!("{} {}", f.domain_lo(), f.domain_hi()))
        .value("f(lo)", ends(f.domain_lo()))
        .value("f(hi)", ends(f.domain_hi()))
        .value("min_abs_slope", f.min_abs_slope())
        .value("max_abs_slope", f.max_abs_slope())
        .value("hash", f.content_hash());
}

pub fn run(cli: &Cli, report: &mut RunReport) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Sigma(a) => sigma_cmd(g, a, report),
        Command::Lambda(a) => lambda_cmd(g, a, report),
        Command::Family(a) => family_cmd(g, a, report),
        Command::Crookify(a) => crookify_cmd(g, a, report),
        Command::Attractor(a) => attractor_cmd(g, a, report),
        Command::Invlim(a) => invlim_cmd(g, a, report),
        Command::Crooked(a) => crooked_cmd(a, report),
        Command::Verify(a) => verify_cmd(a, report),
    }
}

#[derive(Args, Debug)]
pub struct SigmaArgs {
    #[arg(long, value_parser = clap::value_parser!(i64).range(1..))]
    pub n: i64,
    /// Run a grid crookedness check at this δ.
    #[arg(long, value_parser = parse_rational)]
    pub check_delta: Option<Rational>,
    #[arg(long, value_parser = parse_rational, default_value = "1/210")]
    pub step: Rational,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn sigma_cmd(g: &Global, a: &SigmaArgs, report: &mut RunReport) -> Result<()> {
    let f = report.check("sigma", |c| {
        let f = sigma(a.n)?;
        c.value("n", a.n).value("scr", scr(a.n as u32));
        record_map(c, &f);
        Ok(f)
    })?;
    let path = artifact_path(g, &a.out, &format!("sigma_{}.plmap", a.n));
    write_artifact(report, &path, write_plmap(&f).as_bytes())?;
    if let Some(delta) = &a.check_delta {
        report.check("crooked", |c| {
            record_crookedness(c, &crookedness_grid_check_with(&f, delta, &a.step, EXEC)?);
            Ok(())
        })?;
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct LambdaArgs {
    /// Odd, at least 7.
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub k: u32,
    /// Run the measure certificate and the near-identity checks.
    #[arg(long)]
    pub verify: bool,
    /// Random intervals per interval property under --verify.
    #[arg(long, default_value_t = 500)]
    pub trials: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn lambda_cmd(g: &Global, a: &LambdaArgs, report: &mut RunReport) -> Result<()> {
    if a.n < 7 || a.n.is_multiple_of(2) {
        return Err(usage(format!("--n must be odd and at least 7, got {}", a.n)));
    }
    if a.k == 0 {
        return Err(usage("--k must be positive"));
    }
    let seed = if a.verify { Some(require_seed(g)?) } else { None };
    let f = report.check("lambda", |c| {
        let f = lambda_nk(a.n, a.k)?;
        c.value("n", a.n).value("k", a.k);
        let slopes = f.slopes();
        let uniform = slopes.iter().all(|s| s.abs() == slopes[0].abs());
        c.value("slope_field", if uniform { format!("constant {}", slopes[0].abs()) } else { "mixed".into() });
        record_map(c, &f);
        Ok(f)
    })?;
    let path = artifact_path(g, &a.out, &format!("lambda_{}_{}.plmap", a.n, a.k));
    write_artifact(report, &path, write_plmap(&f).as_bytes())?;
    if let Some(seed) = seed {
        report.check("measure", |c| {
            let cert = is_measure_preserving(&f)?;
            c.verdict = Some(cert.verdict);
            c.value("gaps", cert.witnesses.len());
            if let Some(y) = &cert.failing_value {
                c.value("failing_value", y);
            }
            Ok(())
        })?;
        report.check("near_identity", |c| {
            let m = verify_minc_updt_with(a.n, a.k, a.trials, seed, EXEC)?;
            c.verdict = Some(m.passed());
            c.value("epsilon", &m.epsilon)
                .value("gamma", &m.gamma)
                .value("distance", &m.distance)
                .value("distance_bound", &m.distance_bound)
                .value("distance_ok", m.distance_ok)
                .value("crooked_ok", m.crooked_ok)
                .value("crooked_step", &m.crooked_step)
                .value("crooked_pairs", m.crooked_pairs)
                .value("crooked_witness", quad(&m.crooked_witness))
                .value("trials", m.trials)
                .value("nondecreasing_ok", m.nondecreasing_ok)
                .value("long_image_ok", m.long_image_ok)
                .value("contains_ok", m.contains_ok)
                .value("neighborhood_ok", m.neighborhood_ok)
                .value("maxima_spacing_ok", m.maxima_spacing_ok);
            if let Some((name, w)) = &m.interval_witness {
                c.value("interval_witness", format!("{name} [{}, {}] r={} image=[{}, {}]", w.a.0, w.a.1, w.r, w.image.0, w.image.1));
            }
            Ok(())
        })?;
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct FamilyArgs {
    /// Parameter in [0, 1].
    #[arg(long, value_parser = parse_rational)]
    pub t: Option<Rational>,
    /// Write the member at --t.
    #[arg(long)]
    pub emit: bool,
    /// Apply this perturbation schedule to the member at --t.
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    /// Build a perturbation schedule for the whole family and write it.
    #[arg(long)]
    pub build_schedule: bool,
    #[arg(long, value_parser = parse_rational, value_delimiter = ',', default_value = "0,1/4,1/2,3/4,1")]
    pub ts: Vec<Rational>,
    #[arg(long, value_parser = parse_rational, default_value = "1/5")]
    pub eta_total: Rational,
    /// Crookedness target per stage.
    #[arg(long, value_parser = parse_rational, value_delimiter = ',', default_value = "1/4")]
    pub deltas: Vec<Rational>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn family_cmd(g: &Global, a: &FamilyArgs, report: &mut RunReport) -> Result<()> {
    if a.build_schedule {
        let budgets = CrookifyBudgets { piece_budget: g.piece_budget, ..Default::default() };
        let fam = report.check("schedule", |c| {
            let fam = crookify_family(&a.ts, &a.eta_total, &a.deltas, &budgets)?;
            c.verdict = Some(fam.complete());
            c.value("stages", fam.schedule.len()).value("eta_total", &a.eta_total);
            for (i, stage) in fam.reports.iter().enumerate() {
                for s in stage {
                    c.value(&format!("stage{}.t={}", i + 1, s.t), format!("distance {} crooked {}", s.distance, s.report.verdict));
                }
            }
            if let Some(d) = &fam.diagnostics {
                c.value("diagnostics", d);
            }
            Ok(fam)
        })?;
        let path = artifact_path(g, &a.out, "schedule.txt");
        return write_artifact(report, &path, fam.schedule.to_text().as_bytes());
    }
    let t = a.t.as_ref().ok_or_else(|| usage("--t is required unless --build-schedule is given"))?;
    if *t < Rational::zero() || *t > Rational::one() {
        return Err(usage(format!("--t must lie in [0, 1], got {t}")));
    }
    let f = report.check("member", |c| {
        let mut f = f_tilde(t)?;
        c.value("t", t);
        if let Some(path) = &a.schedule {
            let s = PerturbationSchedule::parse(&fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?)?;
            c.value("stages", s.len());
            f = s.apply(t, g.piece_budget)?;
        }
        record_map(c, &f);
        Ok(f)
    })?;
    if a.emit || a.out.is_some() {
        let path = artifact_path(g, &a.out, "family.plmap");
        write_artifact(report, &path, write_plmap(&f).as_bytes())?;
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct CrookifyArgs {
    /// Input map; defaults to the family member at --t.
    #[arg(long)]
    pub map: Option<PathBuf>,
    #[arg(long, value_parser = parse_rational)]
    pub t: Option<Rational>,
    #[arg(long, value_parser = parse_rational)]
    pub eta: Rational,
    #[arg(long, value_parser = parse_rational)]
    pub delta: Rational,
    #[arg(long, default_value_t = 7)]
    pub min_n: u32,
    #[arg(long, default_value_t = 15)]
    pub max_n: u32,
    #[arg(long, default_value_t = 5000)]
    pub max_k: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn crookify_cmd(g: &Global, a: &CrookifyArgs, report: &mut RunReport) -> Result<()> {
    let f = match (&a.map, &a.t) {
        (Some(p), None) => read_map(p)?,
        (None, Some(t)) => f_tilde(t)?,
        _ => return Err(usage("give exactly one of --map and --t")),
    };
    let budgets = CrookifyBudgets { min_n: a.min_n, max_n: a.max_n, max_k: a.max_k, piece_budget: g.piece_budget, ..Default::default() };
    let outcome = report.check("crookify", |c| {
        c.value("eta", &a.eta).value("delta", &a.delta);
        match crookify_step(&f, &a.eta, &a.delta, &budgets) {
            Ok(o) => {
                c.verdict = Some(o.distance < a.eta && o.report.verdict);
                c.value("n", o.n).value("k", o.k).value("iterate", o.iterate).value("distance", &o.distance).value("admissible", o.admissible);
                for (i, cand) in o.candidates.iter().enumerate() {
                    c.value(&format!("candidate{i}"), cand);
                }
                Ok(Some(o))
            }
            Err(e @ (Error::Exhausted { .. } | Error::Budget { .. })) => {
                c.verdict = Some(false);
                c.value("diagnostics", e);
                Ok(None)
            }
            Err(e) => Err(e.into()),
        }
    })?;
    if let Some(o) = outcome {
        report.check("crooked", |c| {
            record_crookedness(c, &o.report);
            Ok(())
        })?;
        let path = artifact_path(g, &a.out, "crookified.plmap");
        write_artifact(report, &path, write_plmap(&o.map).as_bytes())?;
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct AttractorArgs {
    #[arg(long)]
    pub map: PathBuf,
    #[arg(long, value_parser = parse_rational, default_value = "1/8")]
    pub delta: Rational,
    /// Points kept per seed.
    #[arg(long, default_value_t = 2000)]
    pub iters: usize,
    #[arg(long, default_value_t = 100)]
    pub burn_in: usize,
    /// Number of starting points.
    #[arg(long, default_value_t = 64)]
    pub seeds: usize,
    #[arg(long, default_value_t = 512)]
    pub width: usize,
    #[arg(long, default_value_t = 1024)]
    pub height: usize,
    /// Band iterations before measuring boundary rotation.
    #[arg(long, default_value_t = 20)]
    pub rotation_iters: usize,
    #[arg(long, default_value_t = 6000)]
    pub rotation_samples: usize,
    /// PGM output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Cloud table output.
    #[arg(long)]
    pub cloud: Option<PathBuf>,
}

fn attractor_cmd(g: &Global, a: &AttractorArgs, report: &mut RunReport) -> Result<()> {
    let seed = require_seed(g)?;
    let f = read_map(&a.map)?;
    let cloud = report.check("cloud", |c| {
        let cloud = attractor_cloud(&f, &a.delta, a.burn_in, a.iters, a.seeds, seed, EXEC)?;
        c.value("points", cloud.len()).value("delta", &a.delta).value("burn_in", a.burn_in).value("map", &cloud.map_id);
        Ok(cloud)
    })?;
    let raster = attractor_raster(&cloud, a.width, a.height, EXEC)?;
    write_artifact(report, &artifact_path(g, &a.out, "attractor.pgm"), &raster.to_pgm())?;
    write_artifact(report, &artifact_path(g, &a.cloud, "attractor_cloud.txt"), cloud.to_measure().to_text().as_bytes())?;
    report.check("edges", |c| {
        match edge_dynamics_check(&f, &a.delta)? {
            EdgeDynamics::FixedEdge { fixed } => c.value("kind", "fixed_edge").value("fixed", format!("{} {}", fixed.0, fixed.1)),
            EdgeDynamics::SwappedEdges { orbit } => {
                c.value("kind", "swapped_edges").value("orbit", format!("{} {} -> {} {}", orbit[0].0, orbit[0].1, orbit[1].0, orbit[1].1))
            }
            EdgeDynamics::Neither => c.value("kind", "neither"),
        };
        Ok(())
    })?;
    report.check("rotation", |c| {
        let r = estimate_boundary_rotation(&f, &a.delta, a.rotation_iters, a.rotation_samples)?;
        c.value("estimate", r.value).value("coherence", r.coherence).value("status", "experimental");
        Ok(())
    })
}

#[derive(Args, Debug)]
pub struct InvlimArgs {
    #[command(subcommand)]
    pub action: InvlimAction,
}

#[derive(Subcommand, Debug)]
pub enum InvlimAction {
    /// Sample backward orbits of a measure-preserving map.
    Sample {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, default_value_t = 20)]
        depth: usize,
        #[arg(long, default_value_t = 100_000)]
        count: usize,
        /// Leading coordinates kept per orbit.
        #[arg(long, default_value_t = 3)]
        dims: usize,
        /// Marginal uniformity threshold for the KS statistic.
        #[arg(long, default_value_t = 0.02)]
        ks_threshold: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Prokhorov distance between two measure tables.
    Prokhorov {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Birkhoff average of a test function along a float orbit.
    Birkhoff {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, default_value_t = std::f64::consts::FRAC_1_PI)]
        x0: f64,
        #[arg(long, default_value_t = 1_000_000)]
        steps: usize,
        /// `id`, `square`, or an indicator `a,b`.
        #[arg(long, default_value = "id")]
        test: String,
    },
}

fn parse_testfn(s: &str) -> Result<TestFn> {
    match s {
        "id" => Ok(TestFn::Id),
        "square" => Ok(TestFn::Square),
        _ => {
            let (a, b) = s.split_once(',').ok_or_else(|| usage(format!("unknown test function {s:?}")))?;
            Ok(TestFn::Indicator(a.trim().parse()?, b.trim().parse()?))
        }
    }
}

fn invlim_cmd(g: &Global, a: &InvlimArgs, report: &mut RunReport) -> Result<()> {
    match &a.action {
        InvlimAction::Sample { map, depth, count, dims, ks_threshold, out } => {
            let seed = require_seed(g)?;
            let f = read_map(map)?;
            let m = report.check("sample", |c| {
                let m = sample_mu_hat(&f, *depth, *count, *dims, seed, EXEC)?;
                c.value("depth", depth).value("count", m.len()).value("dims", m.dim()).value("map", &m.map_id);
                Ok(m)
            })?;
            for i in 0..m.dim() {
                report.check(&format!("marginal{i}"), |c| {
                    let d = ks_uniform(&m.marginal(i));
                    c.verdict = Some(d < *ks_threshold);
                    c.value("ks", d).value("threshold", ks_threshold);
                    Ok(())
                })?;
            }
            write_artifact(report, &artifact_path(g, out, "mu_hat.txt"), m.to_text().as_bytes())
        }
        InvlimAction::Prokhorov { a, b } => {
            let load = |p: &PathBuf| -> Result<EmpiricalMeasure> {
                Ok(EmpiricalMeasure::parse(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?)
            };
            let (ma, mb) = (load(a)?, load(b)?);
            report.check("prokhorov", |c| {
                c.value("distance", prokhorov_distance(&ma, &mb)?).value("sizes", format!("{} {}", ma.len(), mb.len()));
                Ok(())
            })
        }
        InvlimAction::Birkhoff { map, x0, steps, test } => {
            let f = read_map(map)?;
            let testfn = parse_testfn(test)?;
            report.check("birkhoff", |c| {
                let r = birkhoff_average(&f.to_float(), *x0, *steps, testfn);
                c.value("average", r.average).value("target", r.target).value("steps", r.steps);
                Ok(())
            })
        }
    }
}

#[derive(Args, Debug)]
pub struct CrookedArgs {
    #[arg(long)]
    pub map: PathBuf,
    #[arg(long, value_parser = parse_rational)]
    pub delta: Option<Rational>,
    /// Value-grid step for the δ check.
    #[arg(long, value_parser = parse_rational)]
    pub step: Option<Rational>,
    /// Estimate the crookedness defect from this many random pairs instead.
    #[arg(long)]
    pub samples: Option<usize>,
}

fn crooked_cmd(a: &CrookedArgs, report: &mut RunReport) -> Result<()> {
    let f = read_map(&a.map)?;
    if let Some(samples) = a.samples {
        let seed = report.seed.ok_or_else(|| usage("--samples requires --seed"))?;
        return report.check("defect", |c| {
            c.value("samples", samples).value("estimate", crookedness_defect_estimate_with(&f, samples, seed, EXEC)?);
            Ok(())
        });
    }
    let delta = a.delta.as_ref().ok_or_else(|| usage("give --delta or --samples"))?;
    let step = a.step.clone().unwrap_or_else(|| delta / &Rational::from_int(4));
    report.check("crooked", |c| {
        record_crookedness(c, &crookedness_grid_check_with(&f, delta, &step, EXEC)?);
        Ok(())
    })
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub map: PathBuf,
}

fn verify_cmd(a: &VerifyArgs, report: &mut RunReport) -> Result<()> {
    let f = read_map(&a.map)?;
    report.check("map", |c| {
        record_map(c, &f);
        Ok(())
    })?;
    report.check("measure", |c| {
        let cert = is_measure_preserving(&f)?;
        c.verdict = Some(cert.verdict);
        if let Some(y) = &cert.failing_value {
            c.value("failing_value", y);
        }
        Ok(())
    })?;
    report.check("markov", |c| {
        let m = markov_analysis(&f)?;
        c.value("markov", m.is_markov).value("primitive", m.is_primitive).value("leo", m.is_leo).value("dimension", m.dimension());
        Ok(())
    })?;
    report.check("admissible", |c| {
        c.value("admissible", is_admissible(&f));
        Ok(())
    })
}
