//! `advloss` command-line front end.

mod commands;
mod fail;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use advloss::BasisKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "advloss", version, about = "Density estimation under adversarial losses")]
struct Cli {
    /// Worker threads for Monte Carlo replications (default: all cores)
    #[arg(long, global = true, env = "ADVLOSS_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a truncated series estimate to a CSV sample
    Estimate(EstimateArgs),
    /// Adversarial loss between two series densities
    Loss(LossCmdArgs),
    /// Upper and lower minimax bounds for Sobolev classes
    Bounds(BoundsArgs),
    /// Leave-one-out cross-validation profile
    Cv(CvArgs),
    /// Draw a sample from a series density by rejection sampling
    Sample(SampleArgs),
    /// Build the lower-bound packing family and report its diagnostics
    Pack(PackArgs),
    /// Monte Carlo risk curve from an experiment config
    RiskCurve(RiskCurveArgs),
    /// Density estimation versus sampling experiment
    Equivalence(EquivalenceArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Md,
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Convention {
    /// |Z|^{1/2}
    Half,
    /// |Z|^{1/q}
    Exponent,
}

fn parse_basis(s: &str) -> Result<BasisKind, String> {
    s.parse().map_err(|e: advloss::Error| e.to_string())
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("cutoff").required(true).args(["zeta", "adaptive"]))]
struct EstimateArgs {
    /// CSV sample with header x1,...,xd and points in [0,1]^d
    #[arg(long)]
    data: PathBuf,
    /// Basis family: fourier or haar
    #[arg(long, default_value = "fourier", value_parser = parse_basis)]
    basis: BasisKind,
    /// Fixed truncation level
    #[arg(long)]
    zeta: Option<u32>,
    /// Choose the truncation level by leave-one-out cross-validation
    #[arg(long)]
    adaptive: bool,
    /// Output density JSON
    #[arg(long)]
    out: PathBuf,
}

/// Discriminator class shared by `loss` and `equivalence`.
#[derive(Args, Debug)]
struct ClassArgs {
    /// Sobolev order s of the weights (1+|z|^2)^{s/2}
    #[arg(long, default_value_t = 0.0)]
    s: f64,
    /// Ellipse exponent p
    #[arg(long, default_value_t = 2.0)]
    exponent: f64,
    /// Discriminator radius L_D
    #[arg(long = "LD", default_value_t = 1.0)]
    l_d: f64,
    /// Use an RKHS ball with kernel spectrum ratio^|z| instead of Sobolev weights
    #[arg(long)]
    kernel_ratio: Option<f64>,
    /// Largest |z| in the kernel spectrum
    #[arg(long, default_value_t = 16)]
    kernel_cap: u32,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct LossCmdArgs {
    /// First density JSON
    #[arg(long)]
    p: PathBuf,
    /// Second density JSON
    #[arg(long)]
    q: PathBuf,
    #[command(flatten)]
    class: ClassArgs,
    /// Output format
    #[arg(long, value_enum, default_value = "md")]
    format: Format,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct BoundsArgs {
    /// Discriminator smoothness s
    #[arg(long)]
    s: f64,
    /// Generator smoothness t
    #[arg(long)]
    t: f64,
    /// Dimension d
    #[arg(long)]
    d: usize,
    /// Sample size n
    #[arg(long, default_value_t = 10_000)]
    n: u64,
    /// Discriminator radius L_D
    #[arg(long = "LD", default_value_t = 1.0)]
    l_d: f64,
    /// Generator radius L_G
    #[arg(long = "LG", default_value_t = 1.0)]
    l_g: f64,
    /// Truncation level for the lower bound (default: the packing cutoff)
    #[arg(long)]
    lower_zeta: Option<u32>,
    /// Output format
    #[arg(long, value_enum, default_value = "md")]
    format: Format,
}

#[derive(Args, Debug)]
struct CvArgs {
    /// CSV sample with header x1,...,xd
    #[arg(long)]
    data: PathBuf,
    /// Basis family: fourier or haar
    #[arg(long, default_value = "fourier", value_parser = parse_basis)]
    basis: BasisKind,
    /// Truncation levels to score (default: 0..=ceil(n^{1/d}))
    #[arg(long, value_delimiter = ',')]
    zeta: Vec<u32>,
    /// Output format
    #[arg(long, value_enum, default_value = "md")]
    format: Format,
}

#[derive(Args, Debug)]
struct SampleArgs {
    /// Density JSON to sample from
    #[arg(long)]
    density: PathBuf,
    /// Number of points
    #[arg(long)]
    m: usize,
    /// RNG seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sample max(p,0) renormalized when p is not certified non-negative
    #[arg(long)]
    positive_part: bool,
    /// Output CSV
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PackArgs {
    /// Fourier truncation level of the packing index set
    #[arg(long)]
    zeta: u32,
    /// Dimension d
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Generator smoothness t
    #[arg(long)]
    t: f64,
    /// Generator radius L_G
    #[arg(long = "LG", default_value_t = 1.0)]
    l_g: f64,
    /// Generator ellipse exponent q
    #[arg(long, default_value_t = 2.0)]
    exponent: f64,
    /// Scaling of A_Z and B_Z with |Z|
    #[arg(long, value_enum, default_value = "half")]
    convention: Convention,
    /// RNG seed for the sign patterns
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output JSON with the family
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RiskCurveArgs {
    /// Experiment config JSON
    #[arg(long)]
    config: PathBuf,
    /// Prefix for the .csv, .summary.json and .svg outputs
    #[arg(long)]
    out_prefix: PathBuf,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct EquivalenceArgs {
    /// True density JSON (default: a random six-mode truth drawn from --seed)
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Number of real points
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Numbers of resampled points
    #[arg(long, value_delimiter = ',', default_values_t = [100usize, 1000, 10_000])]
    m: Vec<usize>,
    /// Truncation level of both fits
    #[arg(long, default_value_t = 4)]
    zeta: u32,
    /// Replications
    #[arg(long, default_value_t = 50)]
    replications: usize,
    /// Master seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    class: ClassArgs,
    /// Output format
    #[arg(long, value_enum, default_value = "md")]
    format: Format,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Estimate(a) => commands::estimate(a),
        Command::Loss(a) => commands::loss(a),
        Command::Bounds(a) => commands::bounds(a),
        Command::Cv(a) => commands::cv(a),
        Command::Sample(a) => commands::sample(a),
        Command::Pack(a) => commands::pack(a),
        Command::RiskCurve(a) => commands::risk_curve(a, cli.workers),
        Command::Equivalence(a) => commands::equivalence(a, cli.workers),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
