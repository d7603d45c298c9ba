mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use commands::{ExampleOverrides, Which};
use config::{ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(name = "baxter-lab", version, about = "Experiments on Baxter's difference systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Moment determinants against the recurrence; writes identities.csv.
    OracleCheck(Common),
    /// Interior limits over a disk grid; writes u_grid.csv.
    Interior(Common),
    /// Boundary diagnostics over a theta grid; writes boundary.csv and theta/*.json.
    Boundary(Common),
    /// The two example families with their default parameters.
    Examples {
        which: Which,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    cutoff: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of angles.
    #[arg(long = "grid-theta", value_name = "COUNT")]
    grid_theta: Option<usize>,
    /// Number of radii.
    #[arg(long = "grid-r", value_name = "COUNT")]
    grid_r: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            n: self.n,
            cutoff: self.cutoff,
            tol: self.tol,
            seed: self.seed,
            grid_theta: self.grid_theta,
            grid_r: self.grid_r,
        }
    }

    fn load(&self) -> Result<ExperimentConfig> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| anyhow::anyhow!("--config is required for this command"))?;
        let mut cfg = ExperimentConfig::load(path)?;
        cfg.apply(&self.overrides());
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<report::Report> {
    let (report, out) = match cli.command {
        Command::OracleCheck(c) => {
            let cfg = c.load()?;
            (commands::oracle_check(&cfg)?, cfg.out)
        }
        Command::Interior(c) => {
            let cfg = c.load()?;
            (commands::interior(&cfg)?, cfg.out)
        }
        Command::Boundary(c) => {
            let cfg = c.load()?;
            (commands::boundary(&cfg, "boundary")?, cfg.out)
        }
        Command::Examples { which, epsilon, c, gamma, common } => {
            let ex = ExampleOverrides { epsilon, c, gamma };
            let cfg = match &common.config {
                Some(_) => common.load()?,
                None => commands::example_config(which, &ex, &common.overrides()),
            };
            cfg.validate()?;
            (commands::boundary(&cfg, "examples")?, cfg.out)
        }
    };
    report.write(&out)?;
    Ok(report)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(report) => {
            report.print();
            if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
