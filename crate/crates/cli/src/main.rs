//! Experiment runner for mixed-ADC massive MIMO uplinks. Each subcommand
//! writes one CSV table; rates are in bits/s/Hz.

mod commands;
mod config;
mod grid;

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::grid::{KList, SnrGrid};

#[derive(Parser, Debug)]
#[command(
    name = "mixadc",
    version,
    about = "Achievable rates of mixed-ADC massive MIMO uplinks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rate versus SNR for a channel loaded from a file (one "re im" line per antenna),
    /// for the mixed-ADC, conventional and antenna-selection receivers.
    Fixed(FixedArgs),
    /// Outage rates of i.i.d. Rayleigh channels at a fixed outage probability versus SNR,
    /// mixed-ADC against the conventional and antenna-selection receivers.
    Outage(OutageArgs),
    /// Lower and upper bounds on the ergodic rate versus SNR under i.i.d. Rayleigh fading.
    /// Trials default to 1000.
    Ergodic(ErgodicArgs),
    /// Ergodic bounds with channel estimation error and training overhead versus SNR,
    /// with perfect-CSI mixed-ADC and conventional baselines. Trials default to 100.
    Imperfect(ImperfectArgs),
    /// Ergodic lower bound with and without Gaussian dithering of strong one-bit antennas.
    /// The threshold is tuned at K = 0 for each SNR unless given. Trials default to 1000.
    Dither(DitherArgs),
    /// Per-user ergodic bounds and sum rate for several users with norm-based or random
    /// ADC switching, antenna selection and the conventional receiver. Trials default to 200.
    Multiuser(MultiuserArgs),
    /// Normalized spectral efficiency against normalized circuit power for the mixed-ADC
    /// and antenna-selection receivers over a grid of K. Trials default to 200.
    Energy(EnergyArgs),
    /// Closed-form moments and rates checked against brute-force Monte Carlo; prints a
    /// PASS/FAIL table and exits with 1 if any check fails.
    Validate(ValidateArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Seed of all random streams.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Channel draws per point.
    #[arg(long, value_parser = grid::parse_positive)]
    trials: Option<usize>,
    /// SNR in dB: a value, `start:end:step`, or a comma list of either.
    #[arg(long = "snr-db", default_value = "0", value_parser = grid::parse_snr_grid, allow_hyphen_values = true)]
    snr_db: SnrGrid,
    /// Number of receive antennas [default: 100].
    #[arg(long)]
    n: Option<usize>,
    /// High-resolution ADC pairs: a value, `start:end:step`, or a comma list of either.
    #[arg(long, value_parser = grid::parse_k_list)]
    k: Option<KList>,
    /// Configuration file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, default_value_t = 1, value_parser = grid::parse_positive)]
    workers: usize,
    /// Output file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FixedArgs {
    #[command(flatten)]
    common: Common,
    /// Channel file, one "re im" line per antenna. K defaults to every value 0..=N.
    #[arg(long)]
    channel: PathBuf,
}

#[derive(Args, Debug)]
struct OutageArgs {
    #[command(flatten)]
    common: Common,
    /// Outage probability. K defaults to 10,20; trials default to 1000.
    #[arg(long = "p-out", default_value_t = 0.05)]
    p_out: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PolicyArg {
    /// Strongest K antennas by channel gain.
    Strongest,
    /// K antennas drawn uniformly at random.
    Random,
}

#[derive(Args, Debug)]
struct ErgodicArgs {
    #[command(flatten)]
    common: Common,
    /// Placement of the high-resolution ADCs. K defaults to 20.
    #[arg(long, value_enum, default_value_t = PolicyArg::Strongest)]
    policy: PolicyArg,
}

#[derive(Args, Debug)]
struct ImperfectArgs {
    #[command(flatten)]
    common: Common,
    /// Channel estimation MSE in dB. K defaults to 20.
    #[arg(long = "mse-db", default_value_t = -10.0, allow_hyphen_values = true)]
    mse_db: f64,
    /// Coherence interval in symbols; overrides the config file [default: 196].
    #[arg(long = "coherence-len")]
    coherence_len: Option<usize>,
    /// Estimation-error draws per channel; overrides the config file [default: 10000].
    #[arg(long = "err-samples", value_parser = grid::parse_positive)]
    err_samples: Option<usize>,
}

#[derive(Args, Debug)]
struct DitherArgs {
    #[command(flatten)]
    common: Common,
    /// Fixed dither threshold in dB; tuned per SNR when absent. K defaults to 0.
    #[arg(long = "threshold-db", allow_hyphen_values = true)]
    threshold_db: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    /// Mixed ADCs on the antennas with the largest channel column norm.
    Norm,
    /// Mixed ADCs on uniformly random antennas.
    Random,
    /// Antenna selection by column norm, other antennas off.
    Selection,
    /// All antennas with high-resolution ADCs.
    Conventional,
}

#[derive(Args, Debug)]
struct MultiuserArgs {
    #[command(flatten)]
    common: Common,
    /// Number of users. SNR is the total over users; K defaults to 10,20.
    #[arg(long, default_value_t = 10, value_parser = grid::parse_positive)]
    m: usize,
    /// Receivers to evaluate.
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "norm,random,selection,conventional"
    )]
    scheme: Vec<SchemeArg>,
}

#[derive(Args, Debug)]
struct EnergyArgs {
    #[command(flatten)]
    common: Common,
    /// Number of users; takes a single SNR. K defaults to 0:N:10.
    #[arg(long, default_value_t = 1, value_parser = grid::parse_positive)]
    m: usize,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// Seed of all random streams.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Monte Carlo samples per check.
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    /// Worker threads; results do not depend on this.
    #[arg(long, default_value_t = 1, value_parser = grid::parse_positive)]
    workers: usize,
    /// Output file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Bad arguments detected after parsing; exits with 2 like clap's own errors.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let (table, out) = match cli.command {
        Command::Fixed(a) => (commands::fixed(&a)?, a.common.out),
        Command::Outage(a) => (commands::outage(&a)?, a.common.out),
        Command::Ergodic(a) => (commands::ergodic(&a)?, a.common.out),
        Command::Imperfect(a) => (commands::imperfect(&a)?, a.common.out),
        Command::Dither(a) => (commands::dither(&a)?, a.common.out),
        Command::Multiuser(a) => (commands::multiuser(&a)?, a.common.out),
        Command::Energy(a) => (commands::energy(&a)?, a.common.out),
        Command::Validate(a) => (commands::validate(&a)?, a.out),
    };
    let sink: Box<dyn Write> = match &out {
        Some(path) => Box::new(
            File::create(path)
                .map_err(|e| usage(format!("cannot create {}: {e}", path.display())))?,
        ),
        None => Box::new(io::stdout().lock()),
    };
    let mut sink = BufWriter::new(sink);
    table.write(&mut sink)?;
    sink.flush()?;
    Ok(if table.failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}
