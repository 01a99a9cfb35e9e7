//! Command-line front end.
//!
//! Subcommands: `run` (closed-loop simulation with Lyapunov monitoring),
//! `lmi-check`, `construct` (potential from an SSC block system) and
//! `convergence` (refinement study on smooth advection). Exit codes: 0 on
//! success, 1 on other errors, 2 on configuration errors, 3 on blow-up,
//! 4 when no feasible scaling exists.

mod checks;
mod config;
mod run;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::solver::Execution;

pub use checks::{
    cmd_construct, cmd_lmi_check, convergence_study, sine_ramp, ConstructReport, ConvergenceRow,
    LmiConfig, LmiReport, SscFile, CONVERGENCE_CFL, CONVERGENCE_T_END,
};
pub use config::{
    read_field, CustomBoundary, CustomSystem, Experiment, GridConfig, InitialData,
    PotentialConfig, RunConfig, Setup, SystemMatrices, WeightChoice,
};
pub use run::{cmd_run, field_text, timeseries_csv, RunOutcome};

#[derive(Debug, Parser)]
#[command(name = "hypstab", version, about = "Boundary feedback stabilization of 2D linear hyperbolic systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a closed loop and record Lyapunov functions.
    Run {
        /// Overrides the experiment of the config file.
        #[arg(value_enum)]
        experiment: Option<Experiment>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Grid spacing in both directions.
        #[arg(long)]
        dx: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        cfl: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        weight: Option<WeightChoice>,
        /// Run the flux loops on one thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Check feasibility of the stabilization LMI.
    LmiCheck {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Decay rate C.
        #[arg(long)]
        rate: Option<f64>,
        /// Potential slope in x (Saint-Venant).
        #[arg(long, allow_hyphen_values = true)]
        m: Option<f64>,
        #[arg(long)]
        chi: Option<f64>,
    },
    /// Construct a feasible potential for an SSC block system.
    Construct {
        ssc: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        rate: f64,
    },
    /// Refinement study on unit-speed advection of a sine ramp.
    Convergence {
        /// Cell counts, coarse to fine.
        #[arg(long, value_delimiter = ',', default_values_t = [50, 100])]
        cells: Vec<usize>,
    },
}

/// Config for `run` after applying flags.
pub fn resolve_run_config(
    experiment: Option<Experiment>,
    config: Option<&std::path::Path>,
    dx: Option<f64>,
    t_end: Option<f64>,
    cfl: Option<f64>,
    out: Option<PathBuf>,
    weight: Option<WeightChoice>,
) -> Result<RunConfig> {
    let mut cfg = match config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(e) = experiment {
        cfg.experiment = e;
    }
    if let Some(dx) = dx {
        cfg.grid = GridConfig {
            dx: Some(dx),
            dy: None,
            nx: None,
            ny: None,
        };
    }
    cfg.t_end = t_end.unwrap_or(cfg.t_end);
    cfg.cfl = cfl.unwrap_or(cfg.cfl);
    cfg.output = out.unwrap_or(cfg.output);
    cfg.weight = weight.or(cfg.weight);
    Ok(cfg)
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run {
            experiment,
            config,
            dx,
            t_end,
            cfl,
            out,
            weight,
            sequential,
        } => {
            let cfg = resolve_run_config(experiment, config.as_deref(), dx, t_end, cfl, out, weight)?;
            let exec = if sequential {
                Execution::Sequential
            } else {
                Execution::Parallel
            };
            cmd_run(&cfg, exec)?;
            run::print_outcome(&cfg.output)
        }
        Command::LmiCheck { config, rate, m, chi } => {
            let mut cfg = match config {
                Some(p) => LmiConfig::load(&p)?,
                None => LmiConfig::default(),
            };
            cfg.decay_rate = rate.unwrap_or(cfg.decay_rate);
            if let Some(m) = m {
                cfg.m = Some(vec![m]);
            }
            cfg.chi = chi.or(cfg.chi);
            print!("{}", cmd_lmi_check(&cfg)?);
            Ok(())
        }
        Command::Construct { ssc, rate } => {
            print!("{}", cmd_construct(&ssc, rate)?);
            Ok(())
        }
        Command::Convergence { cells } => {
            if cells.is_empty() || cells.contains(&0) {
                return Err(Error::config("cells", "need positive cell counts"));
            }
            println!("cells,dx,l1_error,order");
            for r in convergence_study(&cells, Execution::Parallel)? {
                let order = r.order.map_or("n/a".to_string(), |o| format!("{o:.4}"));
                println!("{},{:.6e},{:.6e},{order}", r.cells, r.dx, r.l1_error);
            }
            Ok(())
        }
    }
}

pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config { .. } => 2,
        Error::BlowUp { .. } => 3,
        Error::NoFeasibleK { .. } => 4,
        _ => 1,
    }
}

/// Parses `args` and runs the command; errors go to stderr.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
