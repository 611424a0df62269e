mod config;
mod output;
mod scenarios;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use gatebath::Exec;

use config::Params;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("output error: {0}")]
    Io(String),
    #[error("check failed: {0}")]
    Check(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Check(_) => 4,
        }
    }

    /// Library error with the scenario name attached.
    pub fn lib(scenario: &str, e: gatebath::Error) -> Self {
        match e {
            gatebath::Error::Numerical(m) => CliError::Numerical(format!("{scenario}: {m}")),
            other => CliError::Config(format!("{scenario}: {other}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    Trace,
    BathTable,
    FidelityMap,
    FidelityScan,
    TpThetaSurface,
    RelaxDelay,
    CoherenceCrossover,
    OptimizePulse,
    Fmo,
    Audit,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Trace => "trace",
            Scenario::BathTable => "bath-table",
            Scenario::FidelityMap => "fidelity-map",
            Scenario::FidelityScan => "fidelity-scan",
            Scenario::TpThetaSurface => "tp-theta-surface",
            Scenario::RelaxDelay => "relax-delay",
            Scenario::CoherenceCrossover => "coherence-crossover",
            Scenario::OptimizePulse => "optimize-pulse",
            Scenario::Fmo => "fmo",
            Scenario::Audit => "audit",
        }
    }
}

/// Gate-initialized qubit dynamics in a bosonic bath.
#[derive(Debug, Parser)]
#[command(name = "gatebath", version, allow_negative_numbers = true)]
struct Cli {
    scenario: Scenario,
    /// named parameter set (figN or relax-transition / relax-delay)
    #[arg(long)]
    preset: Option<String>,
    /// TOML file with parameter overrides; the emitted <scenario>.toml reruns a scenario
    #[arg(long)]
    config: Option<PathBuf>,
    /// output directory
    #[arg(long, default_value = "gatebath-out")]
    out: PathBuf,
    /// worker threads (0 = all cores)
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    sequential: bool,
    /// exit with status 4 when the scenario's acceptance check fails
    #[arg(long)]
    check: bool,
    #[command(flatten)]
    params: Params,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut params = match &cli.preset {
        Some(name) => config::preset(name)?,
        None => Params::default(),
    };
    if let Some(path) = &cli.config {
        params = params.merged(&Params::from_file(path)?)?;
    }
    params = params.merged(&cli.params)?;
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    let scenario = cli.scenario;
    let resolved = scenarios::resolve(scenario, &params)?;
    let out = output::OutDir::create(&cli.out)?;
    let report = gatebath::exec::with_threads(cli.threads, || scenarios::run(scenario, &resolved, exec, &out))?;
    out.sidecar(scenario.name(), &resolved)?;
    for line in &report.lines {
        println!("{line}");
    }
    println!("wrote {}", out.path().display());
    match (cli.check, report.check) {
        (true, Some(Err(why))) => Err(CliError::Check(why)),
        _ => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gatebath: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
