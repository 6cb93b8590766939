use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand as ClapSubcommand};
use moller::harness::commands::{run_subcommand, Subcommand};
use moller::harness::config::{parse_config, ConfigErrors, RunConfig};

#[derive(Parser)]
#[command(name = "moller", version, about = "Wave operators and scattering for damped waves on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Run every invariant suite and report residuals
    Verify(Flags),
    /// Propagate seeded random data over [0, t_end]
    Solve(Flags),
    /// Apply W+ to a seeded random state
    Waveop(Flags),
    /// Apply the scattering operator to a seeded random state
    Scatter(Flags),
    /// Convergence of the finite-time wave operator
    Rate(Flags),
    /// Per-frequency 2x2 wave operators
    Modes(Flags),
}

#[derive(Args)]
struct Flags {
    /// Config file of `key = value` lines; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Grid, e.g. `1d:256` or `2d:64:10`
    #[arg(long)]
    grid: Option<String>,
    /// Coefficient, e.g. `gaussian:mu0=1,sigma=1`
    #[arg(long)]
    profile: Option<String>,
    /// Series truncation tolerance
    #[arg(long)]
    tol: Option<String>,
    /// Horizon tail tolerance
    #[arg(long)]
    horizon_tol: Option<String>,
    /// Time mesh nodes per unit time, or `auto`
    #[arg(long)]
    density: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated sweep times for `rate`
    #[arg(long)]
    times: Option<String>,
    /// Comma-separated frequencies for `modes`
    #[arg(long)]
    omegas: Option<String>,
    /// End time for `solve`
    #[arg(long)]
    t_end: Option<String>,
}

impl Command {
    fn split(self) -> (Subcommand, Flags) {
        match self {
            Command::Verify(f) => (Subcommand::Verify, f),
            Command::Solve(f) => (Subcommand::Solve, f),
            Command::Waveop(f) => (Subcommand::Waveop, f),
            Command::Scatter(f) => (Subcommand::Scatter, f),
            Command::Rate(f) => (Subcommand::Rate, f),
            Command::Modes(f) => (Subcommand::Modes, f),
        }
    }
}

fn load(flags: &Flags) -> Result<RunConfig> {
    let mut config = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_config(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => RunConfig::default(),
    };
    let overrides = [
        ("grid", &flags.grid),
        ("profile", &flags.profile),
        ("series_tol", &flags.tol),
        ("horizon_tol", &flags.horizon_tol),
        ("mesh_density", &flags.density),
        ("seed", &flags.seed),
        ("times", &flags.times),
        ("omegas", &flags.omegas),
        ("t_end", &flags.t_end),
    ];
    let errors: Vec<_> = overrides
        .into_iter()
        .filter_map(|(key, value)| value.as_ref().and_then(|v| config.set(key, v).err()))
        .collect();
    if !errors.is_empty() {
        return Err(ConfigErrors(errors).into());
    }
    if let Some(out) = &flags.out {
        config.output = Some(out.clone());
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<u8> {
    let (cmd, flags) = cli.command.split();
    let config = load(&flags)?;
    let outcome = run_subcommand(cmd, &config)?;
    if let Some(csv) = outcome.emit(&config)? {
        std::io::stdout().write_all(csv.as_bytes())?;
    }
    eprintln!("{}", outcome.summary);
    Ok(outcome.exit_code as u8)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
