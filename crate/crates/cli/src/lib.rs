//! Command-line front end for the downlink reliability toolkit.
//!
//! Every subcommand accepts the same parameter flags plus an optional flat
//! JSON config file; flags override file keys, and missing values fall back
//! to the reference defaults. Tables go to stdout (or `--out FILE`) as CSV,
//! notes go to stderr. Exit codes: 0 success, 1 a validation check failed,
//! 2 bad configuration or a computation error.

pub mod config;
pub mod runner;

pub use config::{
    emit_config, parse_config, parse_config_text, CommandKind, ConfigError, RawInputs, RunSpec,
    Sweep, SweepVar,
};
pub use runner::{csv_columns, execute, format_value, CliError, RunOutcome};

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "noma-meta", version, about = "Reliability statistics for two-user downlink power-domain multiplexing", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Success-probability moments for both user classes and schemes
    Moments(CommonArgs),
    /// Reliability CCDF curves from every registered estimator
    Meta(CommonArgs),
    /// Mean local delay for both user classes and schemes
    Delay(CommonArgs),
    /// Cell throughput under superposed and orthogonal access
    Throughput(CommonArgs),
    /// Monte Carlo reliability curves only
    Simulate(CommonArgs),
    /// Score analytic moments against a fresh experiment
    Validate(CommonArgs),
}

impl Command {
    fn split(&self) -> (CommandKind, &CommonArgs) {
        match self {
            Command::Moments(args) => (CommandKind::Moments, args),
            Command::Meta(args) => (CommandKind::Meta, args),
            Command::Delay(args) => (CommandKind::Delay, args),
            Command::Throughput(args) => (CommandKind::Throughput, args),
            Command::Simulate(args) => (CommandKind::Simulate, args),
            Command::Validate(args) => (CommandKind::Validate, args),
        }
    }
}

/// Flags shared by every subcommand; all optional so a config file or the
/// defaults can fill them in.
#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// Flat JSON config file; explicit flags override its keys
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Power fraction assigned to the center user's message, in (0, 1)
    #[arg(long, value_name = "V")]
    theta: Option<f64>,
    /// Distance-ratio classification threshold, in (0, 1)
    #[arg(long, value_name = "V")]
    tau: Option<f64>,
    /// Path-loss exponent, must exceed 2
    #[arg(long, value_name = "V")]
    alpha: Option<f64>,
    /// Station density per unit area
    #[arg(long, value_name = "V")]
    lambda_b: Option<f64>,
    /// Center-user decoding threshold in decibels
    #[arg(long, value_name = "DB", allow_negative_numbers = true)]
    beta_c_db: Option<f64>,
    /// Edge-user decoding threshold in decibels
    #[arg(long, value_name = "DB", allow_negative_numbers = true)]
    beta_e_db: Option<f64>,
    /// Center-user decoding threshold on the linear scale
    #[arg(long, value_name = "V")]
    beta_c: Option<f64>,
    /// Edge-user decoding threshold on the linear scale
    #[arg(long, value_name = "V")]
    beta_e: Option<f64>,
    /// Orthogonal-access time share for the center user, in [0, 1]
    #[arg(long, value_name = "V")]
    rho: Option<f64>,
    /// Access scheme: noma or oma
    #[arg(long, value_name = "NAME")]
    scheme: Option<String>,
    /// Sweep one variable: VAR:START:STOP:STEPS
    #[arg(long, value_name = "SPEC")]
    sweep: Option<String>,
    /// Monte Carlo realization count
    #[arg(long, value_name = "N")]
    n_realizations: Option<usize>,
    /// Monte Carlo seed
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Sampling window radius override
    #[arg(long, value_name = "R")]
    window_radius: Option<f64>,
    /// Write the CSV table here instead of stdout
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Report how far the alternative delay exponent strays from the primary form
    #[arg(long)]
    compare_printed: bool,
}

impl CommonArgs {
    fn raw(&self) -> RawInputs {
        RawInputs {
            theta: self.theta,
            tau: self.tau,
            alpha: self.alpha,
            lambda_b: self.lambda_b,
            beta_c_db: self.beta_c_db,
            beta_e_db: self.beta_e_db,
            beta_c: self.beta_c,
            beta_e: self.beta_e,
            rho: self.rho,
            scheme: self.scheme.clone(),
            sweep: self.sweep.clone(),
            n_realizations: self.n_realizations,
            seed: self.seed,
            window_radius: self.window_radius,
            out: self.out.clone(),
            compare_printed: self.compare_printed,
        }
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let (kind, args) = cli.command.split();
    let spec = parse_config(kind, args.config.as_deref(), &args.raw())?;
    let outcome = execute(&spec)?;
    for line in &outcome.summary {
        eprintln!("{line}");
    }
    match &spec.out {
        Some(path) => std::fs::write(path, &outcome.csv).map_err(CliError::Io)?,
        None => print!("{}", outcome.csv),
    }
    Ok(outcome.failed)
}

/// Parse the command line, run it, and translate the result into an exit
/// code.
pub fn cli_main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_names_parse_into_raw_inputs() {
        let cli = Cli::try_parse_from([
            "noma-meta",
            "throughput",
            "--theta",
            "0.25",
            "--sweep",
            "tau:0.4:0.9:11",
            "--beta-c-db",
            "3",
            "--beta-e-db",
            "-3",
            "--seed",
            "7",
            "--compare-printed",
        ])
        .unwrap();
        let (kind, args) = cli.command.split();
        assert_eq!(kind, CommandKind::Throughput);
        let raw = args.raw();
        assert_eq!(raw.theta, Some(0.25));
        assert_eq!(raw.sweep.as_deref(), Some("tau:0.4:0.9:11"));
        assert_eq!(raw.beta_c_db, Some(3.0));
        assert_eq!(raw.seed, Some(7));
        assert!(raw.compare_printed);
    }

    #[test]
    fn unknown_flags_are_rejected() {
        assert!(Cli::try_parse_from(["noma-meta", "moments", "--thetaa", "0.2"]).is_err());
        assert!(Cli::try_parse_from(["noma-meta", "mystery"]).is_err());
    }
}
