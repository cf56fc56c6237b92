//! Command-line driver for the `hybrid-fv` solver.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::commands::CommandError;
use crate::config::{parse_config, RunConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Parser)]
#[command(
    name = "hybrid-fv",
    version,
    about = "Hybrid finite volume solver for nonlinear convection-diffusion-reaction"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct Common {
    /// TOML configuration file.
    #[arg(long, short)]
    pub config: PathBuf,
    /// Overrides mesh.seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides output.dir.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Validate the configuration and build the mesh, then stop.
    #[arg(long)]
    pub dry_run: bool,
    /// Overrides solver.condense.
    #[arg(long)]
    pub condense: Option<Switch>,
    /// Overrides solver.alpha.
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate and validate a mesh.
    MeshGen(Common),
    /// Run one simulation.
    Run(Common),
    /// Run a refinement study against the exact solution.
    Convergence(Common),
    /// Validate the configuration, the mesh and the problem data.
    Check(Common),
}

impl Common {
    pub fn load(&self) -> Result<RunConfig, CommandError> {
        let mut cfg = parse_config(&self.config)?;
        if let Some(s) = self.seed {
            cfg.mesh.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.output.dir = o.clone();
        }
        if let Some(c) = self.condense {
            cfg.solver.condense = c == Switch::On;
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a.is_finite()) {
                return Err(CommandError::Invalid(format!("--alpha must be positive, got {a}")));
            }
            cfg.solver.alpha = Some(a);
        }
        Ok(cfg)
    }
}

type CommandFn = fn(&RunConfig) -> Result<String, CommandError>;

pub fn execute(cli: &Cli) -> Result<String, CommandError> {
    let (common, f): (&Common, CommandFn) = match &cli.command {
        Command::MeshGen(c) => (c, commands::mesh_gen),
        Command::Run(c) => (c, commands::run),
        Command::Convergence(c) => (c, commands::convergence),
        Command::Check(c) => (c, commands::check),
    };
    let cfg = common.load()?;
    if common.dry_run {
        return commands::dry_run(&cfg);
    }
    f(&cfg)
}
