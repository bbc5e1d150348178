use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use ccs_core::WellParams;
use ccs_tunnel::harness::{emit_separatrix, write_grid};
use ccs_tunnel::reference::{tunneling_splitting, Grid, DEFAULT_HALF_EXTENT, DEFAULT_POINTS};
use ccs_tunnel::{run_scenario, Error, ExperimentConfig, Result};
use clap::{Parser, Subcommand};

/// Coupled coherent states tunneling experiments.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its correlation, snapshot and separatrix CSVs.
    Run {
        /// Configuration file.
        config: PathBuf,
    },
    /// Print the ground doublet, the splitting and the tunneling period.
    Splitting {
        /// Barrier height.
        #[arg(short = 'D', long = "D", allow_negative_numbers = true)]
        d: f64,
        /// Half extent of the position box.
        #[arg(long, default_value_t = DEFAULT_HALF_EXTENT)]
        half_extent: f64,
        /// Number of grid points (power of two).
        #[arg(long, default_value_t = DEFAULT_POINTS)]
        points: usize,
    },
    /// Write the classified initial-condition grid of a scenario.
    Grid {
        /// Configuration file.
        config: PathBuf,
    },
    /// Write a separatrix curve to standard output.
    Separatrix {
        /// Barrier height.
        #[arg(short = 'D', long = "D", allow_negative_numbers = true)]
        d: f64,
        /// Use the normal-ordered potential.
        #[arg(long)]
        ordered: bool,
    },
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config } => {
            let config = ExperimentConfig::load(&config)?;
            let (outcome, artifacts) = run_scenario(&config)?;
            let (t_peak, peak) = outcome.peak_ccs(0.0, config.t_final);
            let (t_ref, peak_ref) = outcome.peak_ref(0.0, config.t_final);
            let (lo, hi) = outcome.norm_range();
            println!(
                "scenario {}: M = {}, {} samples",
                config.scenario,
                config.grid.len(),
                outcome.times.len()
            );
            println!("max |c_ccs| = {peak:.6} at t = {t_peak}");
            println!("max |c_ref| = {peak_ref:.6} at t = {t_ref}");
            println!(
                "max ||c_ccs| - |c_ref|| = {:.6}",
                outcome.max_deviation(config.t_final)
            );
            println!("norm range [{lo:.6}, {hi:.6}]");
            println!("wrote {}", artifacts.correlation.display());
            println!("wrote {}", artifacts.snapshots.display());
            println!("wrote {}", artifacts.separatrix.display());
        }
        Command::Splitting {
            d,
            half_extent,
            points,
        } => {
            let params = WellParams::new(d)?;
            let s = tunneling_splitting(params, Grid::new(half_extent, points)?)?;
            println!("E1 = {:.12}", s.e1);
            println!("E2 = {:.12}", s.e2);
            println!("Delta = {:.12e}", s.delta);
            println!("T_t = {:.6}", s.period());
        }
        Command::Grid { config } => {
            let config = ExperimentConfig::load(&config)?;
            let report = write_grid(&config)?;
            println!("{} labels, {} below", report.labels.len(), report.below());
            println!("wrote {}", report.path.display());
        }
        Command::Separatrix { d, ordered } => {
            let params = WellParams::new(d)?;
            let stdout = std::io::stdout().lock();
            let mut out =
                emit_separatrix(stdout, &params, ordered).map_err(|e| Error::io("<stdout>", e))?;
            out.flush().map_err(|e| Error::io("<stdout>", e))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version go to stdout with status 0, usage errors exit 1
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
