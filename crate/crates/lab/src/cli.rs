use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use semiquantum_core::integrator::DirectionFilter;

use crate::commands::{self, OracleMode, Outcome, RunOptions};
use crate::config::RunConfig;
use crate::error::{ExitCode, LabError, Result};
use crate::presets::PresetId;
use crate::sweep::SweepSpec;

#[derive(Debug, Parser)]
#[command(name = "semiquantum", version, about = "Semiquantum boson-field dynamics: trajectories, oracles, sections, Lyapunov exponents and regime maps")]
pub struct Cli {
    /// JSON run configuration (for `sweep`, the sweep spec).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Built-in scenario.
    #[arg(long, global = true, value_name = "ID")]
    pub preset: Option<PresetId>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Also write SVG plots.
    #[arg(long, global = true)]
    pub plot: bool,

    /// Treat divergence as a normal outcome.
    #[arg(long, global = true)]
    pub expect_divergence: bool,

    /// Number of family members at fixed (E_eff, I) for `poincare`.
    #[arg(long, global = true, value_name = "N")]
    pub families: Option<usize>,

    /// Crossing direction through X = 0: +1, -1 or both.
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_direction)]
    pub direction: Option<DirectionFilter>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one trajectory and write it as CSV.
    Simulate,
    /// Compare integration against the closed-form decoupled evolution.
    Oracle {
        #[arg(long, value_enum, default_value = "classify")]
        mode: OracleMode,
    },
    /// Poincare section at X = 0.
    Poincare,
    /// Largest Lyapunov exponent.
    Lyapunov,
    /// Regime map over a parameter grid.
    Sweep {
        /// Sweep spec; `--config` is accepted as well.
        spec: Option<PathBuf>,
        /// Worker threads; overrides the spec. Results do not depend on it.
        #[arg(long, value_name = "N")]
        workers: Option<usize>,
    },
}

fn parse_direction(s: &str) -> std::result::Result<DirectionFilter, String> {
    match s {
        "+1" | "1" | "up" => Ok(DirectionFilter::Up),
        "-1" | "down" => Ok(DirectionFilter::Down),
        "both" => Ok(DirectionFilter::Both),
        _ => Err(format!("expected +1, -1 or both, got `{s}`")),
    }
}

fn load_config(cli: &Cli) -> Result<(RunConfig, String)> {
    match (&cli.config, cli.preset) {
        (Some(_), Some(_)) => Err(LabError::config("give either --config or --preset, not both")),
        (None, None) => Err(LabError::config("one of --config or --preset is required")),
        (None, Some(id)) => Ok((id.expand(), id.name().to_owned())),
        (Some(path), None) => {
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "run".to_owned());
            Ok((RunConfig::load(path)?, stem))
        }
    }
}

fn options(cli: &Cli, cfg: &RunConfig, stem: String) -> RunOptions {
    let out_dir = cli
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    RunOptions {
        out_dir,
        stem,
        plot: cli.plot || cfg.plot,
        expect_divergence: cli.expect_divergence,
        families: cli.families,
        direction: cli.direction,
    }
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    if let Command::Sweep { spec, workers } = &cli.command {
        let path = match (spec, &cli.config) {
            (Some(p), None) | (None, Some(p)) => p,
            (Some(_), Some(_)) => {
                return Err(LabError::config("give the sweep spec either positionally or via --config"))
            }
            (None, None) => return Err(LabError::config("sweep needs a spec file")),
        };
        let mut spec = SweepSpec::load(path)?;
        if workers.is_some() {
            spec.workers = *workers;
        }
        let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
        return commands::sweep_cmd(&spec, &out);
    }
    let (cfg, stem) = load_config(cli)?;
    let opts = options(cli, &cfg, stem);
    if cli.families.is_some() && !matches!(cli.command, Command::Poincare) {
        return Err(LabError::config("--families only applies to poincare"));
    }
    let outcome = match &cli.command {
        Command::Simulate => commands::simulate(&cfg, &opts)?,
        Command::Oracle { mode } => commands::oracle(&cfg, *mode, &opts)?,
        Command::Poincare => commands::poincare_cmd(&cfg, &opts)?,
        Command::Lyapunov => commands::lyapunov_cmd(&cfg, &opts)?,
        Command::Sweep { .. } => unreachable!(),
    };
    outcome.into_result(opts.expect_divergence)
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::Config.code()
            } else {
                ExitCode::Success.code()
            };
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&outcome.summary).expect("json values always serialize")
            );
            ExitCode::Success.code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code().code()
        }
    }
}
