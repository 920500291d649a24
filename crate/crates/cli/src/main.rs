//! `nterm`: widths, rearrangements, constants and verification from the
//! command line. Output is a JSON envelope `{tool_version, config_echo,
//! records, errors}` or CSV rows.

mod commands;
mod output;

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use nterm::Exponent;

use output::Format;

#[derive(Debug, Parser)]
#[command(name = "nterm", version, about = "Best n-term widths of diagonal operators and mixed-smoothness embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "lowercase")]
enum Command {
    /// Width sigma_n for each requested n.
    Width(WidthArgs),
    /// A named asymptotic or reference constant.
    Constant(ConstantArgs),
    /// Check the finite formula against extremal vectors, the optimizer and ball samples.
    Verify(VerifyArgs),
    /// Observed ratios against the predicted limit on an n-grid.
    Diagnose(DiagnoseArgs),
    /// Lattice points in non-decreasing weight order.
    Stream(StreamArgs),
}

#[derive(Debug, Args, Serialize)]
#[group(required = true, multiple = false)]
struct SourceArgs {
    /// Sequence descriptor, e.g. `geometric:0.5`, `powerlog:s=1,b=0`, `finite:values=3/2/1,tail=0.5`.
    #[arg(long)]
    seq: Option<String>,
    /// Weight family whose rearrangement is used, e.g. `mixed:s=1,r=inf,d=2`, `energy:s=2,d=2`.
    #[arg(long)]
    family: Option<String>,
}

#[derive(Debug, Args, Serialize)]
struct WidthArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Source exponent p (decimal or `inf`).
    #[arg(long)]
    p: Exponent,
    /// Target exponent q (decimal or `inf`).
    #[arg(long)]
    q: Exponent,
    /// Values of n, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<u64>,
    /// Relative width of the enclosures.
    #[arg(long, default_value_t = nterm::sequence::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Args, Serialize)]
struct ConstantArgs {
    /// One of H_L2, H_A, A_L2, A_A, H_H1, A_H1, mixref, energy_S, energy.
    #[arg(long)]
    tag: String,
    #[arg(long)]
    s: f64,
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Args, Serialize)]
struct VerifyArgs {
    /// Source exponent; all of 0.5, 1, 2, 3 when omitted.
    #[arg(long)]
    p: Option<Exponent>,
    /// Target exponent; all of 0.5, 1, 2, 3 when omitted.
    #[arg(long)]
    q: Option<Exponent>,
    /// Truncation length (at most 16).
    #[arg(long = "M", default_value_t = 8)]
    m: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Random prefixes checked besides the geometric prefix 2^-k.
    #[arg(long, default_value_t = 2)]
    prefixes: usize,
    /// Ball samples per configuration.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Optimizer restarts for q < p.
    #[arg(long, default_value_t = 64)]
    restarts: usize,
    /// Test mode: multiply the formula by this factor before comparing.
    #[arg(long, default_value_t = 1.0)]
    perturb: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Args, Serialize)]
struct DiagnoseArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Source exponent p; ignored with --terms.
    #[arg(long, default_value = "2")]
    p: Exponent,
    /// Target exponent q; ignored with --terms.
    #[arg(long, default_value = "2")]
    q: Exponent,
    /// Decay exponent s of the profile C n^-s (offset + ln n)^beta.
    #[arg(long)]
    s: f64,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Offset inside the logarithm of the profile.
    #[arg(long, default_value_t = 0.0)]
    log_offset: f64,
    /// Grid of n, comma separated; 10^2, 10^3, ..., 10^6 when omitted.
    #[arg(long, value_delimiter = ',')]
    grid: Vec<u64>,
    /// Compare the terms lambda_n with the profile instead of the widths.
    #[arg(long)]
    terms: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Args, Serialize)]
struct StreamArgs {
    /// Weight family, e.g. `mixed:s=1,r=inf,d=2`.
    #[arg(long)]
    family: String,
    /// Number of points.
    #[arg(long, default_value_t = 20)]
    count: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

fn main() -> ExitCode {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{err}");
                return ExitCode::SUCCESS;
            }
            let message = err.render().to_string();
            let _ = output::emit_config_error(message.trim(), &mut out);
            return ExitCode::from(output::EXIT_CONFIG as u8);
        }
    };
    let code = match commands::run(&cli.command, &mut out) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("nterm: cannot write output: {err}");
            1
        }
    };
    ExitCode::from(code as u8)
}
