use std::fs::File;
use std::io::{self, Write};
use std::path::Path;
use std::process::ExitCode;

use serde::Serialize;
use serde_json::Value;
use teleport_core::fidelity::{cft, CoherentAmplitude, Gain};
use teleport_core::gaussian::{
    is_physical, ppt_entangled, symplectic_invariants, ChannelParams, SymplecticInvariants, TwoModeState,
};
use teleport_core::oracle::{grid_overlap_fidelity, mc_fidelity, GridSpec, McEstimate};
use teleport_core::scan::{
    channel_for_ratio, fidelity_surface, gain_sweep, region_scan, robustness_sweep, sidecar_path, write_gain_csv,
    write_region_csv, write_robustness_csv, write_surface_csv, Axis, ScanMetadata, SymmetricFamilyParams,
};
use teleport_core::statefile::{read_state, write_state};
use teleport_core::witness::{
    classify, duan_check, eta, max_fidelity_ratio, optimal_gain, robust_capable, w_sum, witness_report, DuanCheck,
    GainSearch, OptimalGain, RegionLabel, WitnessReport,
};
use teleport_core::{Error, TOOLKIT_VERSION};

use crate::{
    AnalyzeArgs, ChannelArgs, Cli, Command, Format, OptimalGainArgs, OutputArgs, ScanCommand, ScanOutput, StateSource,
    ValidateArgs,
};

/// Maximum |MC − analytic| in standard errors for `validate` to pass.
const MC_SIGMAS: f64 = 4.0;
/// Maximum |grid − analytic| for `validate` to pass.
const GRID_TOL: f64 = 1e-4;

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Input(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_precondition() => 3,
            _ => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Input(s) => f.write_str(s),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

pub fn run(cli: &Cli) -> CliResult<ExitCode> {
    match &cli.command {
        Command::Analyze(args) => analyze(cli, args),
        Command::Scan(scan) => run_scan(cli, scan),
        Command::Validate(args) => validate(cli, args),
        Command::OptimalGain(args) => cmd_optimal_gain(cli, args),
    }
}

fn load_state(source: &StateSource) -> CliResult<TwoModeState> {
    match (&source.state, source.tmss) {
        (Some(path), None) => Ok(read_state(path)?),
        (None, Some(r)) if r.is_finite() && r >= 0.0 => Ok(TwoModeState::tmss(r)),
        (None, Some(r)) => Err(CliError::Input(format!(
            "--tmss must be finite and non-negative, got {r}"
        ))),
        _ => Err(CliError::Input("exactly one of --state or --tmss is required".into())),
    }
}

fn channel(args: &ChannelArgs) -> CliResult<ChannelParams> {
    Ok(ChannelParams::new(args.ta, args.tb)?)
}

fn config_echo(cli: &Cli) -> Value {
    serde_json::to_value(cli).unwrap_or(Value::Null)
}

fn open_output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

/// Flattens nested objects into `a.b` keys; arrays stay JSON-encoded.
fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Null => out.push((prefix.to_string(), String::new())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn emit<T: Serialize>(report: &T, output: &OutputArgs) -> CliResult<()> {
    let mut out = open_output(output.out.as_deref())?;
    match output.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, report).map_err(Error::Json)?;
            writeln!(out)?;
        }
        Format::Csv => {
            let value = serde_json::to_value(report).map_err(Error::Json)?;
            let mut pairs = Vec::new();
            flatten("", &value, &mut pairs);
            let mut w = csv::Writer::from_writer(out);
            w.write_record(pairs.iter().map(|(k, _)| k.as_str()))
                .map_err(Error::Csv)?;
            w.write_record(pairs.iter().map(|(_, v)| v.as_str()))
                .map_err(Error::Csv)?;
            w.flush()?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct AnalyzeReport {
    toolkit_version: &'static str,
    config: Value,
    #[serde(rename = "V")]
    v: [[f64; 4]; 4],
    physical: bool,
    symplectic: SymplecticInvariants,
    /// `None` for unphysical states.
    ppt_entangled: Option<bool>,
    region: RegionLabel,
    quantum: bool,
    #[serde(flatten)]
    witnesses: WitnessReport,
    robust_capable: bool,
    duan: Option<DuanCheck>,
    /// `None` when `t_A = 0` or `tr A = 2`.
    optimal_gain: Option<OptimalGain>,
    best_gain: GainSearch,
}

fn analyze(cli: &Cli, args: &AnalyzeArgs) -> CliResult<ExitCode> {
    let state = load_state(&args.source)?;
    let ch = channel(&args.channel)?;
    let g = Gain::new(args.g)?;
    if let Some(path) = &args.emit_state {
        write_state(path, &state)?;
    }
    let physical = is_physical(&state)?;
    let witnesses = witness_report(&state, &ch, g)?;
    let report = AnalyzeReport {
        toolkit_version: TOOLKIT_VERSION,
        config: config_echo(cli),
        v: state.to_rows(),
        physical,
        symplectic: symplectic_invariants(&state)?,
        ppt_entangled: if physical { Some(ppt_entangled(&state)?) } else { None },
        region: classify(&state, &ch, g)?,
        quantum: witnesses.fidelity > witnesses.cft + teleport_core::EPS_W,
        witnesses,
        robust_capable: robust_capable(&state),
        duan: eta(&ch, g)
            .filter(|&e| e > 0.0)
            .map(|e| duan_check(&state, e))
            .transpose()?,
        optimal_gain: optimal_gain(&state, &ch).ok(),
        best_gain: max_fidelity_ratio(&state, &ch),
    };
    emit(&report, &args.output)?;
    Ok(ExitCode::SUCCESS)
}

fn write_scan(
    output: &ScanOutput,
    mut meta: ScanMetadata,
    cli: &Cli,
    write_csv: impl FnOnce(Box<dyn Write>) -> teleport_core::Result<()>,
) -> CliResult<ExitCode> {
    meta.config = config_echo(cli);
    match &output.out {
        Some(path) => {
            write_csv(Box::new(io::BufWriter::new(File::create(path)?)))?;
            let sidecar = sidecar_path(path);
            meta.write(&sidecar)?;
            let summary = serde_json::json!({
                "toolkit_version": TOOLKIT_VERSION,
                "csv": path,
                "sidecar": sidecar,
                "rows": meta.rows,
            });
            println!("{}", serde_json::to_string_pretty(&summary).map_err(Error::Json)?);
        }
        None => {
            write_csv(Box::new(io::BufWriter::new(io::stdout().lock())))?;
            eprintln!("{}", serde_json::to_string_pretty(&meta).map_err(Error::Json)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run_scan(cli: &Cli, scan: &ScanCommand) -> CliResult<ExitCode> {
    match scan {
        ScanCommand::Region(args) => {
            let fam = SymmetricFamilyParams::new(args.q, args.p)?;
            let g = Gain::new(args.g)?;
            let ch = match (args.ratio, args.ta) {
                (Some(ratio), None) => channel_for_ratio(ratio, g, args.tb)?,
                (None, ta) => ChannelParams::new(ta.unwrap_or(1.0), args.tb)?,
                (Some(_), Some(_)) => return Err(CliError::Input("--ratio and --ta are exclusive".into())),
            };
            let grid = region_scan(&fam, &ch, g, args.steps)?;
            let meta = ScanMetadata::for_region(&grid);
            write_scan(&args.output, meta, cli, |w| write_region_csv(&grid, w))
        }
        ScanCommand::Surface(args) => {
            let state = load_state(&args.source)?;
            let grid = fidelity_surface(&state, Gain::new(args.g)?, args.steps)?;
            let meta = ScanMetadata::for_surface(&state, &grid);
            write_scan(&args.output, meta, cli, |w| write_surface_csv(&grid, w))
        }
        ScanCommand::Robustness(args) => {
            let state = load_state(&args.source)?;
            let grid = robustness_sweep(&state, args.steps)?;
            let meta = ScanMetadata::for_robustness(&state, &grid);
            write_scan(&args.output, meta, cli, |w| write_robustness_csv(&grid, w))
        }
        ScanCommand::Gain(args) => {
            let state = load_state(&args.source)?;
            let ch = channel(&args.channel)?;
            let axis = Axis::new(0.0, args.g_max, args.steps)?;
            let points = gain_sweep(&state, &ch, args.g_max, args.steps)?;
            let meta = ScanMetadata::for_gain(&state, &ch, axis, &points);
            write_scan(&args.output, meta, cli, |w| write_gain_csv(&points, w))
        }
    }
}

#[derive(Serialize)]
struct ValidateReport {
    toolkit_version: &'static str,
    config: Value,
    analytic: f64,
    cft: f64,
    monte_carlo: McEstimate,
    mc_deviation_sigmas: f64,
    mc_pass: bool,
    grid: f64,
    grid_spec: GridSpec,
    grid_deviation: f64,
    grid_pass: bool,
    pass: bool,
}

fn validate(cli: &Cli, args: &ValidateArgs) -> CliResult<ExitCode> {
    let state = load_state(&args.source)?;
    let ch = channel(&args.channel)?;
    let g = Gain::new(args.g)?;
    let alpha = CoherentAmplitude::new(args.alpha_re, args.alpha_im);
    let grid_spec = GridSpec::new(GridSpec::default().half_width_sigmas, args.grid_points)?;

    let mc = mc_fidelity(&state, &ch, g, &alpha, args.samples, args.seed)?;
    let analytic = teleport_core::fidelity::mean_fidelity(&state, &ch, g)?;
    let grid = grid_overlap_fidelity(&state, &ch, g, &alpha, &grid_spec)?;

    let mc_dev = (mc.fidelity_hat - analytic).abs() / mc.std_error;
    let grid_dev = (grid - analytic).abs();
    let mc_pass = mc_dev <= MC_SIGMAS;
    let grid_pass = grid_dev <= GRID_TOL;
    let report = ValidateReport {
        toolkit_version: TOOLKIT_VERSION,
        config: config_echo(cli),
        analytic,
        cft: cft(g),
        monte_carlo: mc,
        mc_deviation_sigmas: mc_dev,
        mc_pass,
        grid,
        grid_spec,
        grid_deviation: grid_dev,
        grid_pass,
        pass: mc_pass && grid_pass,
    };
    emit(&report, &args.output)?;
    Ok(if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

#[derive(Serialize)]
struct OptimalGainReport {
    toolkit_version: &'static str,
    config: Value,
    g_min: f64,
    out_of_domain: bool,
    /// `W_sum` at `g_min`, when `g_min ≥ 0`.
    w_sum_at_g_min: Option<f64>,
    robust_capable: bool,
    best_gain: GainSearch,
}

fn cmd_optimal_gain(cli: &Cli, args: &OptimalGainArgs) -> CliResult<ExitCode> {
    let state = load_state(&args.source)?;
    let ch = channel(&args.channel)?;
    let opt = optimal_gain(&state, &ch)?;
    let report = OptimalGainReport {
        toolkit_version: TOOLKIT_VERSION,
        config: config_echo(cli),
        g_min: opt.g_min,
        out_of_domain: opt.out_of_domain,
        w_sum_at_g_min: Gain::new(opt.g_min).ok().map(|g| w_sum(&state, &ch, g)),
        robust_capable: robust_capable(&state),
        best_gain: max_fidelity_ratio(&state, &ch),
    };
    emit(&report, &args.output)?;
    Ok(ExitCode::SUCCESS)
}
