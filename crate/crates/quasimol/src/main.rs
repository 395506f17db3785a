use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use quasimol::commands::{self, Command};
use quasimol::{RunConfig, RunError};

#[derive(Parser)]
#[command(name = "quasimol", version, about = "Laser-bound atom pairs in a cubic optical lattice")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML run configuration. `figures` falls back to its built-in preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; all cores when absent.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Pair potential against kr for several angles.
    Potential,
    /// Unperturbed and induced density of states.
    Dos,
    /// Resonances and bound states over the intensity grid.
    ResonanceSweep,
    /// Pair wavefunction and entanglement per intensity.
    Wavefunction,
    /// Absorption and heating against the binding energy.
    Feasibility,
    /// Lattice Green function against the direct zone integral.
    ValidateGreen,
    /// All internal consistency checks.
    ValidateAll,
    /// Potential, sweep, DOS and wavefunction for the reference set-up.
    Figures,
    /// Print the built-in reference configuration as TOML.
    Preset,
}

impl Cmd {
    fn command(self) -> Option<Command> {
        Some(match self {
            Cmd::Potential => Command::Potential,
            Cmd::Dos => Command::Dos,
            Cmd::ResonanceSweep => Command::ResonanceSweep,
            Cmd::Wavefunction => Command::Wavefunction,
            Cmd::Feasibility => Command::Feasibility,
            Cmd::ValidateGreen => Command::ValidateGreen,
            Cmd::ValidateAll => Command::ValidateAll,
            Cmd::Figures => Command::Figures,
            Cmd::Preset => return None,
        })
    }
}

fn run(cli: Cli) -> Result<(), RunError> {
    let Some(command) = cli.command.command() else {
        print!("{}", RunConfig::figures().to_toml_string());
        return Ok(());
    };
    let config = match (&cli.config, command) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Command::Figures) => RunConfig::figures(),
        (None, _) => return Err(RunError::Config(vec!["missing `--config <path>`".into()])),
    };
    let out = cli.out.unwrap_or_else(|| config.output.directory.clone());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| RunError::Failed(format!("thread pool: {e}")))?;
    let manifest = pool.install(|| commands::run(command, &config, &out))?;
    for o in &manifest.outputs {
        println!("{}  {}", o.sha256, out.join(&o.file).display());
    }
    for w in &manifest.warnings {
        eprintln!("warning: {w}");
    }
    for f in &manifest.failures {
        eprintln!("failure: {f}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
