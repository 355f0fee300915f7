//! `coboson`: spectra, normalization tables, observables and figure data
//! for coboson Fock states.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coboson::splitting::Precision;

mod commands;
mod error;
mod figures;
mod output;
mod svg;

#[derive(Debug, Parser)]
#[command(name = "coboson", version, about = "Entanglement and counting statistics of coboson Fock states")]
pub struct Cli {
    /// Worker threads for sweeps; 0 uses every core.
    #[arg(long, global = true, env = "COBOSON_THREADS", default_value_t = 0)]
    pub threads: usize,

    /// Evaluation mode of the purity coefficients.
    #[arg(long, global = true, env = "COBOSON_PRECISION", default_value = "extended-fallback", value_parser = parse_precision)]
    pub precision: Precision,

    /// Replace existing output files.
    #[arg(long, global = true)]
    pub force: bool,

    #[command(subcommand)]
    pub command: Command,
}

fn parse_precision(s: &str) -> Result<Precision, String> {
    s.parse::<Precision>().map_err(|e| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Produce, synthesize or summarize Schmidt spectra.
    #[command(subcommand)]
    Spectrum(SpectrumCommand),
    /// Table of ln ê_k.
    Chi(ChiArgs),
    /// Spectral density D_j[N].
    Density(DensityArgs),
    /// Counting statistics of the lowest t states.
    Counts(CountsArgs),
    /// Purity of one mode after splitting.
    Purity(PurityArgs),
    /// CHSH correlators of the two-mode state.
    Bell(BellArgs),
    /// Data files for the figure set.
    Figures(FiguresArgs),
    /// Run the exhaustive-oracle equivalence suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct OutputArg {
    /// Output file; standard output when absent or `-`.
    #[arg(short = 'o', long = "output")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct SpectrumInput {
    /// Spectrum file in any supported format.
    #[arg(long)]
    pub spectrum: Option<PathBuf>,
    /// Shipped solver spectrum: 0.5, 1 or 2.
    #[arg(long)]
    pub preset: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SpectrumFormat {
    Structured,
    Plain,
    Shells,
}

#[derive(Debug, Subcommand)]
pub enum SpectrumCommand {
    /// Run the two-body solver.
    Solve(SolveArgs),
    /// Build a flat, geometric or custom spectrum.
    Synth(SynthArgs),
    /// Summarize a spectrum.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Preset whose configuration is rerun.
    #[arg(long, conflicts_with = "inv_kfa", required_unless_present = "inv_kfa")]
    pub preset: Option<String>,
    /// Interaction strength (k_F a)^-1.
    #[arg(long)]
    pub inv_kfa: Option<f64>,
    /// Pair number fixing k_F.
    #[arg(long, default_value_t = coboson::spectrum::PRESET_REFERENCE_PAIRS, conflicts_with = "preset")]
    pub pairs: f64,
    #[arg(long, value_enum, default_value = "structured")]
    pub format: SpectrumFormat,
    #[command(flatten)]
    pub out: OutputArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SynthKindArg {
    Flat,
    Geometric,
    Custom,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: SynthKindArg,
    /// Number of coefficients (flat, geometric).
    #[arg(long)]
    pub size: Option<usize>,
    /// Ratio q of successive coefficients (geometric).
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Comma-separated weights (custom), rescaled to unit sum.
    #[arg(long, value_delimiter = ',')]
    pub weights: Vec<f64>,
    #[arg(long, value_enum, default_value = "structured")]
    pub format: SpectrumFormat,
    #[command(flatten)]
    pub out: OutputArg,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[command(flatten)]
    pub input: SpectrumInput,
    /// Leading coefficients to list.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    #[command(flatten)]
    pub out: OutputArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Dp,
    Newton,
}

#[derive(Debug, Args)]
pub struct ChiArgs {
    #[command(flatten)]
    pub input: SpectrumInput,
    /// Highest order K.
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "dp")]
    pub method: MethodArg,
    /// Condition estimate at which the Newton route hands over to dp.
    #[arg(long, default_value_t = 1e6)]
    pub condition_limit: f64,
    #[command(flatten)]
    pub out: OutputArg,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub input: SpectrumInput,
    /// Pair number N.
    #[arg(long)]
    pub n: usize,
    /// One row per shell with n_spect = g N D_j.
    #[arg(long)]
    pub shells: bool,
    #[command(flatten)]
    pub out: OutputArg,
}

#[derive(Debug, Args)]
pub struct CountsArgs {
    #[command(flatten)]
    pub input: SpectrumInput,
    /// Pair number N.
    #[arg(long)]
    pub n: usize,
    /// Window size: the t lowest states.
    #[arg(long, default_value_t = 56)]
    pub t: usize,
    /// Marginal count of mode 1 after splitting off M pairs.
    #[arg(long, value_name = "M", conflicts_with_all = ["joint", "report"])]
    pub split: Option<usize>,
    /// Joint count of both modes after splitting off M pairs.
    #[arg(long, value_name = "M", conflicts_with = "report")]
    pub joint: Option<usize>,
    /// Mean and variance with Poisson and binomial references.
    #[arg(long)]
    pub report: bool,
    #[command(flatten)]
    pub out: OutputArg,
}

#[derive(Debug, Args)]
pub struct PurityArgs {
    #[command(flatten)]
    pub input: SpectrumInput,
    /// Pair number N.
    #[arg(long)]
    pub n: usize,
    /// Pairs in mode 1.
    #[arg(long, conflicts_with = "sweep_m", required_unless_present = "sweep_m")]
    pub m: Option<usize>,
    /// Every M from 0 to N.
    #[arg(long)]
    pub sweep_m: bool,
    /// Beam-splitter reflectivity R, for the probability of each M.
    #[arg(long, default_value_t = 0.5)]
    pub reflectivity: f64,
    /// Compare against exhaustive enumeration (small S and N only).
    #[arg(long)]
    pub check_oracle: bool,
    #[command(flatten)]
    pub out: OutputArg,
}

#[derive(Debug, Args)]
pub struct BellArgs {
    #[command(flatten)]
    pub input: SpectrumInput,
    /// One-based state index.
    #[arg(long, default_value_t = 1)]
    pub j: usize,
    /// Pair number N for a single point.
    #[arg(long, conflicts_with_all = ["n_from", "n_to"], required_unless_present_all = ["n_from", "n_to"])]
    pub n: Option<usize>,
    /// Pairs in mode 1 for a single point; N/2 when absent.
    #[arg(long, requires = "n")]
    pub m: Option<usize>,
    /// Smallest N of a sweep.
    #[arg(long, requires = "n_to")]
    pub n_from: Option<usize>,
    /// Largest N of a sweep.
    #[arg(long, requires = "n_from")]
    pub n_to: Option<usize>,
    /// Logarithmically spaced points of a sweep.
    #[arg(long, default_value_t = 60)]
    pub log_steps: usize,
    /// Fraction of the pairs sent to mode 1 in a sweep.
    #[arg(long, default_value_t = 0.5)]
    pub m_fraction: f64,
    /// Use D_j ≈ λ_j/(1+λ_j(N−1)) instead of the exact occupation.
    #[arg(long)]
    pub approx: bool,
    /// Append classical and Tsirelson reference rows.
    #[arg(long)]
    pub bounds: bool,
    /// Uncertainty of the mode-1 pair number.
    #[arg(long, default_value_t = 0.0)]
    pub dn1: f64,
    /// Uncertainty of the mode-2 pair number.
    #[arg(long, default_value_t = 0.0)]
    pub dn2: f64,
    /// Relative uncertainty of D_j.
    #[arg(long, default_value_t = 0.0)]
    pub dd_rel: f64,
    #[command(flatten)]
    pub out: OutputArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureName {
    Fig1a,
    Fig1b,
    Fig1c,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    All,
}

#[derive(Debug, Args)]
pub struct FiguresArgs {
    #[arg(value_enum)]
    pub figure: FigureName,
    /// Directory receiving the data files.
    #[arg(long, default_value = "figures")]
    pub out_dir: PathBuf,
    /// Also render each dataset as SVG.
    #[arg(long)]
    pub svg: bool,
    /// Largest pair number of the fig4 and fig5 sweeps.
    #[arg(long, default_value_t = 20_000)]
    pub n_max: usize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = coboson::verify::DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutputArg,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        log::warn!("thread pool setup failed: {e}");
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit()
        }
    }
}
