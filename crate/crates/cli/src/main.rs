use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mimosar_cli::commands;
use mimosar_cli::config::RunConfig;
use mimosar_cli::pipeline::Mode;
use mimosar_cli::report::TableFormat;
use mimosar_cli::CliError;

/// Automotive MIMO SAR simulation, back-projection focusing and
/// GCP-based velocity autofocus.
#[derive(Parser)]
#[command(name = "mimosar", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
#[group(multiple = false)]
struct ModeFlags {
    /// Focus along the erroneous navigation without compensation.
    #[arg(long)]
    no_moco: bool,
    /// Estimate and compensate the residual velocity (default).
    #[arg(long)]
    moco: bool,
    /// Compensate with the true injected velocity error.
    #[arg(long)]
    oracle_moco: bool,
}

impl ModeFlags {
    fn mode(&self) -> Mode {
        if self.no_moco {
            Mode::NoMoco
        } else if self.oracle_moco {
            Mode::OracleMoco
        } else {
            Mode::Moco
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a range-compressed data cube.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the noise seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Focus a data cube into an image, report and quick-look.
    Focus {
        #[arg(long)]
        cube: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        mode: ModeFlags,
        #[arg(long)]
        dynamic_range_db: Option<f64>,
    },
    /// Simulate and focus in one go.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        mode: ModeFlags,
        #[arg(long)]
        dynamic_range_db: Option<f64>,
    },
    /// Compare run reports side by side.
    Report {
        reports: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "markdown")]
        format: TableFormat,
        /// Write the table to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the default configuration.
    DefaultConfig,
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Simulate { config, out, seed } => {
            let cfg = commands::load_config(&config, seed)?;
            commands::simulate(&cfg, &out)
        }
        Command::Focus {
            cube,
            config,
            out,
            mode,
            dynamic_range_db,
        } => {
            let cfg = commands::load_config(&config, None)?;
            let rep = commands::focus(&cfg, &cube, &out, mode.mode(), dynamic_range_db)?;
            print_summary(&rep);
            Ok(())
        }
        Command::Run {
            config,
            out,
            seed,
            mode,
            dynamic_range_db,
        } => {
            let cfg = commands::load_config(&config, seed)?;
            let rep = commands::run(&cfg, &out, mode.mode(), dynamic_range_db)?;
            print_summary(&rep);
            Ok(())
        }
        Command::Report { reports, format, out } => {
            let table = commands::report(&reports, format)?;
            match out {
                Some(path) => std::fs::write(path, table)?,
                None => print!("{table}"),
            }
            Ok(())
        }
        Command::DefaultConfig => {
            println!("{}", RunConfig::default().to_json());
            Ok(())
        }
    }
}

fn print_summary(rep: &mimosar_cli::pipeline::RunReport) {
    if let Some(dv) = rep.applied_dv {
        println!("compensated dv = ({:+.5}, {:+.5}, {:+.5}) m/s", dv.x, dv.y, dv.z);
    }
    println!(
        "peak {:.4e}  entropy {:.4}  contrast {:.4}  targets {}/{}",
        rep.metrics.peak_magnitude, rep.metrics.entropy, rep.metrics.contrast, rep.targets_found, rep.targets
    );
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
