//! `doa`: simulate array data, run DOA estimators, dump spectra and run
//! Monte Carlo benchmark campaigns.

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

use doa_core::cli;

#[derive(Parser)]
#[command(
    name = "doa",
    version,
    about = "Direction-of-arrival estimation toolkit for uniform linear arrays"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Timing {
    /// Measure per-trial wall time.
    Measure,
    /// Write zero wall times; output is byte-reproducible.
    None,
}

#[derive(Subcommand)]
enum Command {
    /// Generate snapshots from a scenario config and write them as a binary
    /// file.
    Simulate {
        /// Scenario JSON config.
        #[arg(long)]
        config: PathBuf,
        /// Output snapshot file (format: magic "DOAS", version, M, N,
        /// row-major f64 re/im pairs, little endian).
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one estimator and print the DOA estimate as JSON on stdout.
    Estimate {
        /// Estimator name (das, capon, lp, music, root-music, esprit,
        /// unitary-esprit, dml, sml, wsf, l1-svd, sbl, spice).
        #[arg(long)]
        method: String,
        /// Scenario JSON config.
        #[arg(long)]
        config: PathBuf,
        /// Optional snapshot file; when absent the scenario is simulated.
        #[arg(long = "in", value_name = "FILE")]
        input: Option<PathBuf>,
    },
    /// Write the spatial spectrum of a method as angle,value CSV rows.
    Spectrum {
        /// Spectral method (das, capon, music, sbl, spice).
        #[arg(long)]
        method: String,
        /// Scenario JSON config.
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a Monte Carlo benchmark campaign and write trial records plus an
    /// aggregate summary CSV.
    Benchmark {
        /// Campaign JSON config.
        #[arg(long)]
        campaign: PathBuf,
        /// Output records CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Summary CSV path (default: `<out>.summary.csv`).
        #[arg(long)]
        summary_out: Option<PathBuf>,
        /// Worker thread count; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Wall-time accounting.
        #[arg(long, value_enum, default_value_t = Timing::Measure)]
        timing: Timing,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) if e.use_stderr() => {
            // usage problems follow the config-error contract: single-line
            // JSON on stderr, exit 1
            let first_line = e.to_string().lines().next().unwrap_or_default().to_string();
            eprintln!("{}", serde_json::json!({ "error": first_line, "kind": "config" }));
            return ExitCode::from(cli::EXIT_CONFIG as u8);
        }
        Err(e) => {
            // --help / --version
            print!("{e}");
            return ExitCode::from(cli::EXIT_OK as u8);
        }
    };
    let outcome = match args.command {
        Command::Simulate { config, out } => cli::cmd_simulate(&config, &out),
        Command::Estimate {
            method,
            config,
            input,
        } => match cli::cmd_estimate(&method, &config, input.as_deref()) {
            Ok(json) => {
                println!("{json}");
                Ok(())
            }
            Err(e) => Err(e),
        },
        Command::Spectrum {
            method,
            config,
            out,
        } => cli::cmd_spectrum(&method, &config, &out),
        Command::Benchmark {
            campaign,
            out,
            summary_out,
            workers,
            timing,
        } => cli::cmd_benchmark(
            &campaign,
            &out,
            summary_out.as_deref(),
            workers,
            matches!(timing, Timing::Measure),
        ),
    };
    match outcome {
        Ok(()) => ExitCode::from(cli::EXIT_OK as u8),
        Err(e) => {
            eprintln!("{}", cli::error_json(&e));
            ExitCode::from(cli::exit_code_for(&e) as u8)
        }
    }
}
