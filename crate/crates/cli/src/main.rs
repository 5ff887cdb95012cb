//! `lozenge`: exact kernels, sampling, limit shapes and height fluctuations
//! of lozenge tilings from the command line.
//!
//! Exit status is 0 on success, 1 when a validation or verification fails
//! (or a computation errors), and 2 on usage errors, including unreadable
//! or malformed config files.

mod commands;
mod config;
mod output;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::UsageError;

#[derive(Parser, Debug)]
#[command(name = "lozenge", version, about = "Uniformly random lozenge tilings of 3k-sided polygons")]
struct Cli {
    /// Worker threads for parallel sweeps; the LOZENGE_WORKERS variable takes precedence.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a polygon config and report its top row and tiling count.
    Validate(ValidateArgs),
    /// Exact correlation kernel values.
    Kernel(KernelArgs),
    /// Exact uniform samples as JSON lines, optionally as SVG pictures.
    Sample(SampleArgs),
    /// Height-fluctuation moments against the Gaussian free field prediction.
    Moments(MomentsArgs),
    /// Complex slope and action derivatives at a point, frozen boundary samples.
    LimitShape(LimitShapeArgs),
    /// Frozen-boundary samples as CSV and SVG.
    FrozenBoundary(FrozenBoundaryArgs),
    /// SVG of a sampled tiling or of a frozen boundary.
    Render(RenderArgs),
    /// Run the exact oracle suite on a small polygon.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// For a limit polygon, also check the lattice polygon at this strip height.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Theta {
    V,
    S,
    L,
}

#[derive(Args, Debug)]
pub struct KernelArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub x1: Option<i64>,
    #[arg(long)]
    pub n1: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x2: Option<i64>,
    #[arg(long)]
    pub n2: Option<i64>,
    /// Evaluate the extended kernel for a lozenge of this type at the second point.
    #[arg(long, value_enum)]
    pub theta: Option<Theta>,
    /// CSV of `x1,n1,x2,n2` rows (a header line is allowed).
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// Output CSV for batch mode; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Number of samples.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Random seed; a fresh one is drawn and recorded if omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON lines output; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for one SVG per sample.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Draw the frozen boundary of the limit polygon over each SVG.
    #[arg(long)]
    pub overlay: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Mode {
    Exact,
    Mc,
}

#[derive(Args, Debug)]
pub struct MomentsArgs {
    /// A lattice polygon (moments at its own N) or a limit polygon (with --N-list).
    #[arg(long, conflicts_with = "limit_config")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub limit_config: Option<PathBuf>,
    /// Scaled points `chi1,eta1;chi2,eta2;...`.
    #[arg(long, allow_hyphen_values = true)]
    pub points: String,
    /// Strip heights, e.g. `8,16,24,32`.
    #[arg(long = "N-list")]
    pub n_list: Option<String>,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,
    /// Monte Carlo sample count.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct LimitShapeArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Scaled point `chi,eta`: prints w, S'' and Xi.
    #[arg(long, allow_hyphen_values = true)]
    pub point: Option<String>,
    /// With --point, residuals of the complex Burgers equation there.
    #[arg(long)]
    pub check_burgers: bool,
    /// Write frozen-boundary samples (columns w,chi,eta).
    #[arg(long)]
    pub frozen_boundary: bool,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FrozenBoundaryArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// CSV with columns w,chi,eta; stdout if neither --out nor --svg is given.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Seed for the sampled tiling of a lattice polygon.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Render line `--index` of a JSON lines file from `sample` instead of sampling.
    #[arg(long)]
    pub from: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    /// Frozen-boundary samples (limit polygons, or the overlay).
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long)]
    pub overlay: bool,
    /// SVG output; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// JSON report; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Enumeration cap.
    #[arg(long, default_value_t = 5000)]
    pub cap: u64,
    /// Largest point set for correlation checks.
    #[arg(long, default_value_t = 2)]
    pub max_points: usize,
    /// Largest number of heights in moment checks.
    #[arg(long, default_value_t = 2)]
    pub max_moment: usize,
    /// Also compare the bulk asymptotic kernel with the exact one at N = 16, 32, 64
    /// (a soft check that does not affect the exit status).
    #[arg(long)]
    pub bulk: bool,
}

fn configure_workers(flag: Option<usize>) -> anyhow::Result<()> {
    let from_env = match std::env::var("LOZENGE_WORKERS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) => Some(n),
            Err(_) => return config::usage(format!("LOZENGE_WORKERS must be a positive integer, got {v:?}")),
        },
        Err(_) => None,
    };
    if let Some(n) = from_env.or(flag) {
        if n == 0 {
            return config::usage("worker count must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    configure_workers(cli.workers)?;
    match cli.command {
        Command::Validate(a) => commands::validate(&a),
        Command::Kernel(a) => commands::kernel(&a),
        Command::Sample(a) => commands::sample(&a),
        Command::Moments(a) => commands::moments(&a),
        Command::LimitShape(a) => commands::limit_shape(&a),
        Command::FrozenBoundary(a) => commands::frozen_boundary(&a),
        Command::Render(a) => commands::render(&a),
        Command::Verify(a) => commands::verify(&a),
    }
}

/// Output cut short by a closed reader, as in `lozenge ... | head`.
fn broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        let io = c.downcast_ref::<std::io::Error>().or_else(|| match c.downcast_ref::<csv::Error>()?.kind() {
            csv::ErrorKind::Io(io) => Some(io),
            _ => None,
        });
        io.is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
