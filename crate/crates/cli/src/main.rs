mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pseudoarc::rational::Rational;

use report::RunReport;

#[derive(Parser, Debug)]
#[command(name = "pseudoarc", version, about = "Exact piecewise-linear interval maps, crookedness checks and planar attractors")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Seed for every randomized step; required by randomized commands.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Largest number of pieces any intermediate map may have.
    #[arg(long, global = true, default_value_t = 1 << 22)]
    pub piece_budget: usize,
    /// Directory for artifacts given by bare file names.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Report path; the report goes to stdout when absent.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Emit the simple n-crooked map σ_n.
    Sigma(commands::SigmaArgs),
    /// Emit λ_{n,k}, optionally with its exact certificates.
    Lambda(commands::LambdaArgs),
    /// Emit a member of the parametrized family, or build a crookifying schedule.
    Family(commands::FamilyArgs),
    /// Perturb a map into a δ-crooked one within η.
    Crookify(commands::CrookifyArgs),
    /// Render the band attractor of a map.
    Attractor(commands::AttractorArgs),
    /// Inverse-limit sampling and measure comparisons.
    Invlim(commands::InvlimArgs),
    /// Check crookedness of a map.
    Crooked(commands::CrookedArgs),
    /// Exact structural checks of a map.
    Verify(commands::VerifyArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Sigma(_) => "sigma",
            Command::Lambda(_) => "lambda",
            Command::Family(_) => "family",
            Command::Crookify(_) => "crookify",
            Command::Attractor(_) => "attractor",
            Command::Invlim(_) => "invlim",
            Command::Crooked(_) => "crooked",
            Command::Verify(_) => "verify",
        }
    }
}

pub fn parse_rational(s: &str) -> Result<Rational, String> {
    s.parse::<Rational>().map_err(|e| e.to_string())
}

fn usage_text(subcommand: Option<&str>) -> String {
    let mut cmd = <Cli as clap::CommandFactory>::command();
    cmd.build();
    match subcommand.and_then(|name| cmd.find_subcommand_mut(name)) {
        Some(sub) => sub.render_usage().to_string(),
        None => cmd.render_usage().to_string(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let text = e.render().to_string();
            eprint!("{text}");
            if !text.contains("Usage:") {
                let sub = std::env::args().skip(1).find(|a| !a.starts_with('-') && a.chars().all(|c| c.is_ascii_lowercase()));
                eprintln!("\n{}", usage_text(sub.as_deref()));
            }
            return ExitCode::from(2);
        }
        Err(e) => e.exit(),
    };
    let line = std::env::args().collect::<Vec<_>>().join(" ");
    let mut report = RunReport::new(line, cli.global.seed);
    let global = cli.global.clone();
    let outcome = pseudoarc::par::with_threads(global.threads, || commands::run(&cli, &mut report));
    let code = match outcome {
        Ok(()) if report.passed() => ExitCode::SUCCESS,
        Ok(()) => ExitCode::from(1),
        Err(e) => {
            if let Some(usage) = e.downcast_ref::<commands::UsageError>() {
                eprintln!("error: {usage}\n");
                eprintln!("{}", usage_text(Some(cli.command.name())));
                return ExitCode::from(2);
            }
            eprintln!("error: {e:#}");
            report
                .check("error", |c| {
                    c.verdict = Some(false);
                    c.value("message", format!("{e:#}"));
                    Ok(())
                })
                .ok();
            ExitCode::from(1)
        }
    };
    let text = report.to_text();
    match &global.report {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("error: cannot write report {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{text}"),
    }
    code
}
