//! Command-line front-end: `manev-kit <command> [--config <path>] [--out <dir>] [--seed <u64>]`.
//!
//! Exit codes: 0 ok, 1 configuration or input error, 2 non-convergence, 3 partial failure.
//! `MANEV_THREADS` caps the worker pool.

mod commands;
mod config;
mod output;
mod verify;

pub use commands::Status;
pub use config::{DynamicsSection, GridSection, ModelSection, OutputSection, RunConfig, SolverSection};
pub use output::{num, OutputDir, Table};
pub use verify::{run_battery, Check, VerifyHooks};

use crate::error::Error;
use clap::{Parser, Subcommand};
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NO_CONVERGENCE: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "manev-kit", version, about = "Ground states, self-similar profiles and mean-field dynamics of the Vlasov-Manev system")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration; defaults apply to every missing key.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `[output] dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed, overriding `[output] seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Negative control: Manev kernel prefactor used by the kernel checks of `verify`.
    #[arg(long, global = true, hide = true)]
    pub corrupt_manev_prefactor: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Solve the constrained ground state.
    GroundState,
    /// Drift ladder of self-similar profiles.
    SelfSimilar,
    /// Self-consistent particle evolution of a perturbed ground state.
    Evolve,
    /// Kinetic-energy rate tables of the explicit blow-up families.
    BlowupFamily,
    /// Invariant battery; fails if any check fails.
    Verify,
    /// Upper estimate of the sharp Manev interpolation constant.
    EstimateKjm,
    /// Print the effective configuration.
    Config,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::GroundState => "ground-state",
            Command::SelfSimilar => "self-similar",
            Command::Evolve => "evolve",
            Command::BlowupFamily => "blowup-family",
            Command::Verify => "verify",
            Command::EstimateKjm => "estimate-kjm",
            Command::Config => "config",
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_) | Error::GridMismatch(_) | Error::Unsupported(_) | Error::Config(_) | Error::Io(_) => EXIT_CONFIG,
        Error::NoConvergence { .. } | Error::Diverged { .. } | Error::Bracket(_) | Error::Unresolvable(_) => EXIT_NO_CONVERGENCE,
    }
}

/// Sizes the global worker pool from `MANEV_THREADS`; unset or unparsable leaves the default.
pub fn init_threads() {
    if let Some(n) = std::env::var("MANEV_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0) {
        // a second initialization in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Effective configuration: file (or defaults) with the command-line overrides applied.
pub fn resolve_config(cli: &Cli) -> crate::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(|e| match e {
            Error::Io(io) => Error::Config(format!("{}: {io}", p.display())),
            other => other,
        })?,
        None => RunConfig::default(),
    };
    if let Some(o) = &cli.out {
        cfg.output.dir = o.display().to_string();
    }
    if let Some(s) = cli.seed {
        cfg.output.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one command and returns the process exit code; diagnostics go to stderr.
pub fn run(cli: &Cli) -> i32 {
    init_threads();
    let cfg = match resolve_config(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if cli.command == Command::Config {
        print!("{}", cfg.emit());
        return EXIT_OK;
    }
    let metadata = vec![format!("command = {}", cli.command.name()), format!("seed = {}", cfg.output.seed)];
    let out = match OutputDir::create(&PathBuf::from(&cfg.output.dir), metadata) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Err(e) = std::fs::write(out.path("config.toml"), cfg.emit()) {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    let result = match cli.command {
        Command::GroundState => commands::cmd_ground_state(&cfg, &out),
        Command::SelfSimilar => commands::cmd_self_similar(&cfg, &out),
        Command::Evolve => commands::cmd_evolve(&cfg, &out),
        Command::BlowupFamily => commands::cmd_blowup_family(&cfg, &out),
        Command::EstimateKjm => commands::cmd_estimate_kjm(&cfg, &out),
        Command::Verify => return verify_command(&cfg, &out, &VerifyHooks { manev_prefactor: cli.corrupt_manev_prefactor }),
        Command::Config => unreachable!(),
    };
    match result {
        Ok(Status::Ok) => EXIT_OK,
        Ok(Status::Partial) => {
            eprintln!("partial failure: see the per-entry status in {}", out.path("").display());
            EXIT_PARTIAL
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn verify_command(cfg: &RunConfig, out: &OutputDir, hooks: &VerifyHooks) -> i32 {
    let checks = run_battery(cfg, hooks);
    let mut t = Table::new(&["name", "value", "tolerance", "pass"]);
    for c in &checks {
        t.push(vec![c.name.clone(), num(c.value), num(c.tolerance), c.pass.to_string()]);
    }
    let written = out.csv("verify.csv", &t).and_then(|_| out.json("verify.json", &checks));
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    let failed: Vec<&Check> = checks.iter().filter(|c| !c.pass).collect();
    for c in &failed {
        match &c.detail {
            Some(d) => eprintln!("FAIL {}: {d}", c.name),
            None => eprintln!("FAIL {} ({:e} > {:e})", c.name, c.value, c.tolerance),
        }
    }
    if failed.is_empty() {
        EXIT_OK
    } else {
        EXIT_PARTIAL
    }
}
