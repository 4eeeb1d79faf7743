use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod commands;

/// Attenuated coherent-state teleportation with two-mode Gaussian resources.
#[derive(Debug, Parser, Serialize)]
#[command(name = "teleport", version)]
pub struct Cli {
    /// Worker threads for scans and sampling (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Fidelity, witnesses, region label and optimal gain for one state.
    Analyze(AnalyzeArgs),
    /// Grid scans written as CSV plus a JSON sidecar.
    #[command(subcommand)]
    Scan(ScanCommand),
    /// Compare the analytic fidelity with the Monte-Carlo and grid oracles.
    Validate(ValidateArgs),
    /// Gain minimizing W_sum, and the gain maximizing F/F_CFT.
    OptimalGain(OptimalGainArgs),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanCommand {
    /// Region labels over the symmetric family (K_Q/Q, K_P/P) ∈ [-1, 1]².
    Region(RegionArgs),
    /// Fidelity over (t_A, t_B) ∈ (0, 1]² at fixed gain.
    Surface(SurfaceArgs),
    /// Best-gain quantum flag over (t_A, t_B) ∈ (0, 1]².
    Robustness(RobustnessArgs),
    /// Fidelity, threshold and W_sum against the gain.
    Gain(GainArgs),
}

#[derive(Debug, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct StateSource {
    /// JSON state file ({"V": ...}, {"A","B","C"} or {"tmss": {"r": ...}}).
    #[arg(long)]
    pub state: Option<PathBuf>,
    /// Two-mode squeezed vacuum with squeezing r.
    #[arg(long)]
    pub tmss: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct ChannelArgs {
    /// Alice's transmissibility.
    #[arg(long, default_value_t = 1.0)]
    pub ta: f64,
    /// Bob's transmissibility.
    #[arg(long, default_value_t = 1.0)]
    pub tb: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct OutputArgs {
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args, Serialize)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub source: StateSource,
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long, default_value_t = 1.0)]
    pub g: f64,
    /// Also write the parsed state to this file in {"V": ...} form.
    #[arg(long)]
    pub emit_state: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ScanOutput {
    /// CSV path; the sidecar goes next to it with a .json extension.
    /// Without it the CSV goes to stdout and the sidecar to stderr.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct RegionArgs {
    /// q variance of both local blocks, A = B = diag(Q, P).
    #[arg(long = "Q")]
    pub q: f64,
    /// p variance of both local blocks.
    #[arg(long = "P")]
    pub p: f64,
    /// g t_A / t_B; sets t_A = ratio · t_B / g.
    #[arg(long, conflicts_with = "ta")]
    pub ratio: Option<f64>,
    /// Alice's transmissibility (default: from --ratio, else 1).
    #[arg(long)]
    pub ta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub tb: f64,
    #[arg(long, default_value_t = 1.0)]
    pub g: f64,
    /// Grid points per axis.
    #[arg(long, default_value_t = 400)]
    pub steps: usize,
    #[command(flatten)]
    pub output: ScanOutput,
}

#[derive(Debug, Args, Serialize)]
pub struct SurfaceArgs {
    #[command(flatten)]
    pub source: StateSource,
    #[arg(long, default_value_t = 1.0)]
    pub g: f64,
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    #[command(flatten)]
    pub output: ScanOutput,
}

#[derive(Debug, Args, Serialize)]
pub struct RobustnessArgs {
    #[command(flatten)]
    pub source: StateSource,
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    #[command(flatten)]
    pub output: ScanOutput,
}

#[derive(Debug, Args, Serialize)]
pub struct GainArgs {
    #[command(flatten)]
    pub source: StateSource,
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Upper end of the gain axis [0, g_max].
    #[arg(long, default_value_t = 3.0)]
    pub g_max: f64,
    #[arg(long, default_value_t = 301)]
    pub steps: usize,
    #[command(flatten)]
    pub output: ScanOutput,
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub source: StateSource,
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long, default_value_t = 1.0)]
    pub g: f64,
    /// Real part of the coherent input amplitude.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub alpha_re: f64,
    /// Imaginary part of the coherent input amplitude.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub alpha_im: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Grid points per axis for the overlap integral (odd).
    #[arg(long, default_value_t = 801)]
    pub grid_points: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct OptimalGainArgs {
    #[command(flatten)]
    pub source: StateSource,
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
