use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use vortex_cli::{parse_config_for, run_scenario, ScenarioKind};

#[derive(Parser)]
#[command(name = "vortex", version, about = "Runs one scenario and writes CSV plus metadata.txt")]
struct Cli {
    #[command(subcommand)]
    scenario: Scenario,
}

#[derive(Subcommand)]
enum Scenario {
    /// Self-similar solution of a given mass
    Exact(Common),
    /// Characteristics solution of non-increasing step data
    Characteristics(Common),
    /// Two-bump shock, RK4 path and entropy check
    ShockTwoBumps(Common),
    /// Spurious shock next to the fan for square data
    Spurious(Common),
    /// Monotone scheme run
    Fd(Common),
    /// Viscous approximation, one or several epsilons
    Viscous(Common),
    /// Convergence to the self-similar profile
    Asymptotics(Common),
    /// Scheme error against the exact solution over a list of deltas
    ConvergenceStudy(Common),
}

#[derive(Args)]
struct Common {
    /// Flat TOML scenario file; defaults are used when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out` in the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Threads for independent sweep members
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: u16,
}

impl Scenario {
    fn split(&self) -> (ScenarioKind, &Common) {
        match self {
            Self::Exact(c) => (ScenarioKind::Exact, c),
            Self::Characteristics(c) => (ScenarioKind::Characteristics, c),
            Self::ShockTwoBumps(c) => (ScenarioKind::ShockTwoBumps, c),
            Self::Spurious(c) => (ScenarioKind::Spurious, c),
            Self::Fd(c) => (ScenarioKind::Fd, c),
            Self::Viscous(c) => (ScenarioKind::Viscous, c),
            Self::Asymptotics(c) => (ScenarioKind::Asymptotics, c),
            Self::ConvergenceStudy(c) => (ScenarioKind::ConvergenceStudy, c),
        }
    }
}

fn run(kind: ScenarioKind, args: &Common) -> Result<ExitCode> {
    let text = match &args.config {
        Some(path) => std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        None => String::new(),
    };
    let config = match parse_config_for(Some(kind), &text) {
        Ok(c) => c,
        Err(errors) => {
            for e in &errors {
                eprintln!("config error: {e}");
            }
            anyhow::bail!("{} configuration error(s)", errors.len());
        }
    };
    let out = args
        .out
        .clone()
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(kind.name()));
    let verdict = run_scenario(&config, &out, args.jobs as usize)?;
    if verdict.passed() {
        println!("{kind}: pass, artifacts in {}", out.display());
        Ok(ExitCode::SUCCESS)
    } else {
        for f in &verdict.failures {
            eprintln!("threshold failed: {f}");
        }
        Ok(ExitCode::from(2))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = cli.scenario.split();
    match run(kind, args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
