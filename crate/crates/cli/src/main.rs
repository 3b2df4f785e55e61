//! `radlog`: principal eigenvalues, thresholds and positive steady states of
//! `-Δu = λ(V u - f(u))` for radial weights, from a JSON run config.

mod commands;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use commands::Verdict;
use config::LoadedConfig;
use output::{write_manifest, OutputDir, RunRecord};

/// Malformed input: bad config, missing file, invalid override. Exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

const EXIT_MATH: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "radlog", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the hypotheses on V and f.
    Validate(Common),
    /// Principal eigenpair of the weighted problem on one ball.
    Eig(Common),
    /// λ₁(R) over a radius schedule and the extrapolated threshold.
    Curve(Common),
    /// Positive solution on expanding balls for one λ.
    Solve(Common),
    /// Existence/extinction over a λ grid.
    Sweep(Common),
    /// Decay, norm, flux, energy and Newtonian checks on a solved profile.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Profile CSV to verify; defaults to `<out>/profile.csv`.
    #[arg(long, value_name = "PATH")]
    profile: Option<PathBuf>,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.is::<UsageError>()) {
        EXIT_USAGE
    } else {
        EXIT_MATH
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let (name, common, profile) = match cli.command {
        Command::Validate(c) => ("validate", c, None),
        Command::Eig(c) => ("eig", c, None),
        Command::Curve(c) => ("curve", c, None),
        Command::Solve(c) => ("solve", c, None),
        Command::Sweep(c) => ("sweep", c, None),
        Command::Verify(v) => ("verify", v.common, v.profile),
    };
    let mut out = match OutputDir::create(&common.out) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("radlog {name}: {e:#}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let mut extra_inputs = Vec::new();
    let loaded = LoadedConfig::load(&common.config);
    let result = loaded
        .as_ref()
        .map_err(|e| anyhow::anyhow!("{e:#}"))
        .and_then(|cfg| match name {
            "validate" => commands::validate(cfg, &mut out),
            "eig" => commands::eig(cfg, &mut out),
            "curve" => commands::curve(cfg, &mut out),
            "solve" => commands::solve(cfg, &mut out),
            "sweep" => commands::sweep(cfg, &mut out),
            _ => commands::verify(cfg, &mut out, profile, &mut extra_inputs),
        });
    let finished = result.is_ok();
    let (code, error) = match (&loaded, result) {
        (_, Ok(Verdict::Pass)) => (0, None),
        (_, Ok(Verdict::Fail(msg))) => (EXIT_MATH, Some(msg)),
        (Err(e), Err(_)) => (exit_code(e), Some(format!("{e:#}"))),
        (Ok(_), Err(e)) => (exit_code(&e), Some(format!("{e:#}"))),
    };
    if let Some(msg) = &error {
        eprintln!("radlog {name}: {msg}");
    }
    let record = RunRecord {
        command: name,
        started,
        exit_code: code as i32,
        error,
        finished,
    };
    if let Err(e) = write_manifest(&mut out, loaded.as_ref().ok(), &extra_inputs, record) {
        eprintln!("radlog {name}: manifest: {e:#}");
        return ExitCode::from(EXIT_MATH.max(code));
    }
    ExitCode::from(code)
}
