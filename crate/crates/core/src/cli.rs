//! Batch front end: JSON configs, the built-in three-area preset, and the
//! `run` / `compare` / `validate` subcommands.
//!
//! Exit codes: 0 success, 1 I/O failure (or `validate` found errors),
//! 2 unparseable or invalid configuration, 3 synthesis failure,
//! 4 simulation divergence.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{self, AnalysisError, StabilityPair, StabilityReport, TransientMetrics};
use crate::model::{
    augment_integrators, build_plant, validate_params, AreaKind, AreaParams, Diagnostic, ModelError,
    PlantModel, TieLine, DEFAULT_TIE_T0,
};
use crate::numerics::Matrix;
use crate::simulation::{
    simulate, DisturbanceSpec, Primitive, Scenario, SimTrace, SimulationError, TraceMetadata,
};
use crate::synthesis::{
    assemble_closed_loop, design_lqg, make_droop_baseline, ClosedLoopSystem, LqrWeights, NoiseModel,
    SynthesisError,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const PRESET_THREE_AREA: &str = "paper-three-area";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ControllerChoice {
    Droop,
    #[default]
    Lqg,
}

/// Matrix override: `{"diag": [..]}` or `{"full": [[..], ..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixSpec {
    Diag(Vec<f64>),
    Full(Vec<Vec<f64>>),
}

impl MatrixSpec {
    pub fn to_matrix(&self, n: usize, what: &str) -> Result<Matrix, String> {
        match self {
            MatrixSpec::Diag(d) if d.len() == n => {
                Ok(Matrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)))
            }
            MatrixSpec::Diag(d) => Err(format!("controller.{what}: expected {n} diagonal entries, got {}", d.len())),
            MatrixSpec::Full(rows) if rows.len() == n && rows.iter().all(|r| r.len() == n) => {
                Ok(Matrix::from_fn(n, n, |i, j| rows[i][j]))
            }
            MatrixSpec::Full(_) => Err(format!("controller.{what}: expected a {n}x{n} matrix")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    #[serde(default)]
    pub kind: ControllerChoice,
    /// State weight over plant states then integrators.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<MatrixSpec>,
    /// Process noise over disturbance channels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<MatrixSpec>,
    /// Measurement noise over outputs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<MatrixSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Output directory; `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_trace")]
    pub trace: String,
    #[serde(default = "default_report")]
    pub report: String,
    /// Signals summarized in the report; every recorded frequency and tie
    /// state when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub signals: Vec<String>,
}

fn default_trace() -> String {
    "trace.csv".into()
}

fn default_report() -> String {
    "report.json".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            trace: default_trace(),
            report: default_report(),
            signals: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    /// System base for per-unit quantities, MVA.
    #[serde(default = "default_base")]
    pub base_mva: f64,
    pub areas: Vec<AreaParams>,
    #[serde(default)]
    pub ties: Vec<TieLine>,
    #[serde(default)]
    pub controller: ControllerConfig,
    pub scenario: Scenario,
    #[serde(default)]
    pub outputs: OutputConfig,
}

fn default_base() -> f64 {
    1000.0
}

/// Named built-in configurations.
pub fn preset(name: &str) -> Option<ConfigFile> {
    (name == PRESET_THREE_AREA).then(three_area_preset)
}

fn three_area_preset() -> ConfigFile {
    let base_mva = 1000.0;
    let areas = vec![
        AreaParams::with_defaults("wind", AreaKind::WindInverter, 600.0),
        AreaParams::with_defaults("solar", AreaKind::SolarInverter, 400.0),
        AreaParams::with_defaults("turbine", AreaKind::CombustionTurbine, 800.0),
    ];
    let ties = [(0, 1), (0, 2), (1, 2)].map(|(i, j)| TieLine::new(i, j, DEFAULT_TIE_T0)).to_vec();
    // Losing half the solar output is a load increase in that area.
    let loss = 0.5 * areas[1].rating_mw / base_mva;
    let mut scenario = Scenario::new(30.0, 0.01, DisturbanceSpec::step(3, 1, 1.0, loss));
    scenario.seed = Some(42);
    ConfigFile {
        schema: SCHEMA_VERSION,
        description: "Three areas: 600 MW wind and 400 MW solar behind inverters, 800 MW combustion \
                      turbine, all pairs tied. Ratings as published; time constants, gains, droop and \
                      tie coefficients are reconstructed typical values. Disturbance: half the solar \
                      output (200 MW, 0.2 pu on 1000 MVA) lost at t = 1 s."
            .into(),
        base_mva,
        areas,
        ties,
        controller: ControllerConfig::default(),
        scenario,
        outputs: OutputConfig::default(),
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Config(String),
    #[error("invalid configuration:\n{}", render(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("synthesis failed: {0}")]
    Synthesis(#[from] SynthesisError),
    #[error("simulation failed: {0}")]
    Simulation(#[from] SimulationError),
    #[error("analysis failed: {0}")]
    Analysis(#[from] AnalysisError),
}

fn render(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n")
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) | CliError::Invalid(_) | CliError::Analysis(_) => 2,
            CliError::Synthesis(_) => 3,
            CliError::Simulation(SimulationError::Diverged { .. }) => 4,
            CliError::Simulation(_) => 2,
        }
    }
}

/// Parse a config, reporting the JSON path of the first offending key.
pub fn parse_config(text: &str) -> Result<ConfigFile, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: ConfigFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        CliError::Config(format!("config error at `{path}`: {inner}"))
    })?;
    if config.schema != SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "config error at `schema`: unsupported version {} (expected {SCHEMA_VERSION})",
            config.schema
        )));
    }
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ConfigFile, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[derive(Debug, Parser)]
#[command(name = "lfc", version, about = "Multi-area load-frequency control simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one controller; write a trace CSV and a report JSON.
    Run(RunArgs),
    /// Simulate droop and LQG on the same disturbances and compare them.
    Compare(CommonArgs),
    /// Check a configuration without simulating.
    Validate(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Config JSON file.
    #[arg(required_unless_present = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in configuration instead of a file.
    #[arg(long, conflicts_with = "config")]
    pub preset: Option<String>,
    /// Replaces the scenario seed and every per-primitive seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Horizon override, s.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Step override, s.
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub controller: Option<ControllerChoice>,
}

/// Parse `args` (including the program name) and execute; returns the exit
/// code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args).map(|_| 0),
        Command::Compare(args) => cmd_compare(args).map(|_| 0),
        Command::Validate(args) => cmd_validate(args),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    })
}

/// Config with overrides applied, validated plant, and warnings.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ConfigFile,
    pub plant: PlantModel,
    pub warnings: Vec<Diagnostic>,
}

fn source_config(args: &CommonArgs) -> Result<ConfigFile, CliError> {
    let mut config = match (&args.config, &args.preset) {
        (_, Some(name)) => preset(name)
            .ok_or_else(|| CliError::Config(format!("unknown preset `{name}` (available: {PRESET_THREE_AREA})")))?,
        (Some(path), None) => load_config(path)?,
        (None, None) => return Err(CliError::Config("a config path or --preset is required".into())),
    };
    if let Some(h) = args.horizon {
        config.scenario.horizon = h;
    }
    if let Some(dt) = args.dt {
        config.scenario.dt = dt;
    }
    if let Some(seed) = args.seed {
        config.scenario.seed = Some(seed);
        for prim in config.scenario.disturbances.channels.iter_mut().flatten() {
            if let Primitive::Gauss { seed, .. } = prim {
                *seed = None;
            }
        }
    }
    Ok(config)
}

/// Every check that needs no synthesis: parameters, ties, scenario.
pub fn diagnostics(config: &ConfigFile) -> Vec<Diagnostic> {
    let mut out = validate_params(&config.areas, &config.ties);
    if !(config.base_mva.is_finite() && config.base_mva > 0.0) {
        out.push(Diagnostic::error("base_mva", "must be finite and > 0"));
    }
    let min_tau = config
        .areas
        .iter()
        .flat_map(|a| [a.t_p, a.t_s, a.t_tg])
        .filter(|t| *t > 0.0)
        .fold(f64::INFINITY, f64::min);
    out.extend(config.scenario.validate(min_tau.is_finite().then_some(min_tau)));
    let n = config.areas.len();
    if config.scenario.disturbances.channels.len() != n {
        out.push(Diagnostic::error(
            "scenario.disturbances.channels",
            format!("expected one channel per area ({n}), got {}", config.scenario.disturbances.channels.len()),
        ));
    }
    out
}

pub fn prepare(args: &CommonArgs) -> Result<Prepared, CliError> {
    let config = source_config(args)?;
    let diags = diagnostics(&config);
    if diags.iter().any(Diagnostic::is_error) {
        return Err(CliError::Invalid(diags));
    }
    let plant = build_plant(&config.areas, &config.ties)?;
    Ok(Prepared {
        config,
        plant,
        warnings: diags,
    })
}

fn weights(config: &ControllerConfig, plant: &PlantModel) -> Result<(LqrWeights, NoiseModel), CliError> {
    let aug = augment_integrators(plant)?;
    let mut w = LqrWeights::defaults(&aug);
    let mut noise = NoiseModel::defaults(plant);
    let to = |spec: &MatrixSpec, n, what| spec.to_matrix(n, what).map_err(CliError::Config);
    if let Some(q) = &config.q {
        w.q = to(q, aug.n_states(), "q")?;
    }
    if let Some(r) = &config.r {
        w.r_u = to(r, aug.n_inputs(), "r")?;
    }
    if let Some(m) = &config.w {
        noise.w = to(m, plant.n_disturbances(), "w")?;
    }
    if let Some(v) = &config.v {
        noise.v = to(v, plant.n_outputs(), "v")?;
    }
    Ok((w, noise))
}

/// Closed loop for the requested controller.
pub fn build_system(prepared: &Prepared, choice: ControllerChoice) -> Result<ClosedLoopSystem, CliError> {
    let plant = &prepared.plant;
    match choice {
        ControllerChoice::Droop => Ok(make_droop_baseline(plant)?),
        ControllerChoice::Lqg => {
            let (w, noise) = weights(&prepared.config.controller, plant)?;
            let ctrl = design_lqg(plant, Some(&w), Some(&noise))?;
            Ok(assemble_closed_loop(plant, &ctrl)?)
        }
    }
}

fn out_dir(args: &CommonArgs, config: &ConfigFile) -> Result<PathBuf, CliError> {
    let dir = args
        .out
        .clone()
        .or_else(|| config.outputs.dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

/// Header `t,<names>`, one row per sample, shortest round-trip decimals.
pub fn write_trace_csv(path: &Path, trace: &SimTrace) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path).map_err(io)?;
    let mut header = vec!["t"];
    header.extend(trace.names());
    w.write_record(&header).map_err(io)?;
    let mut row = Vec::with_capacity(header.len());
    for (k, t) in trace.times.iter().enumerate() {
        row.clear();
        row.push(t.to_string());
        row.extend(trace.columns.iter().map(|c| c.values[k].to_string()));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Inverse of [`write_trace_csv`]: header names and one vector per column
/// (time first).
pub fn read_trace_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(io)?;
    let names: Vec<String> = r.headers().map_err(io)?.iter().map(String::from).collect();
    let mut cols = vec![Vec::new(); names.len()];
    for rec in r.records() {
        let rec = rec.map_err(io)?;
        for (col, field) in cols.iter_mut().zip(rec.iter()) {
            col.push(
                field
                    .parse::<f64>()
                    .map_err(|e| CliError::Io(format!("{}: bad value `{field}`: {e}", path.display())))?,
            );
        }
    }
    Ok((names, cols))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn report_signals(config: &ConfigFile, trace: &SimTrace) -> Vec<String> {
    if !config.outputs.signals.is_empty() {
        return config.outputs.signals.clone();
    }
    trace
        .names()
        .filter(|n| {
            n.strip_prefix("dptie")
                .or_else(|| n.strip_prefix("df"))
                .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
        })
        .map(String::from)
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SignalMetrics {
    pub signal: String,
    pub band: f64,
    pub metrics: TransientMetrics,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema: u32,
    pub controller: ControllerChoice,
    pub metadata: TraceMetadata,
    pub trace: String,
    pub warnings: Vec<String>,
    pub stability: StabilityReport,
    pub metrics: Vec<SignalMetrics>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunOutcome {
    pub trace: PathBuf,
    pub report: PathBuf,
}

fn print_warnings(warnings: &[Diagnostic]) {
    for w in warnings {
        eprintln!("{w}");
    }
}

pub fn cmd_run(args: &RunArgs) -> Result<RunOutcome, CliError> {
    let prepared = prepare(&args.common)?;
    print_warnings(&prepared.warnings);
    let choice = args.controller.unwrap_or(prepared.config.controller.kind);
    let system = build_system(&prepared, choice)?;
    let stability = analysis::stability_report(&system)?;
    let trace = simulate(&system, &prepared.config.scenario)?;
    let signals = report_signals(&prepared.config, &trace);
    let metrics = signals
        .iter()
        .map(|s| {
            let band = analysis::default_band(s);
            Ok(SignalMetrics {
                signal: s.clone(),
                band,
                metrics: analysis::metrics(&trace, s, band)?,
            })
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;

    let dir = out_dir(&args.common, &prepared.config)?;
    let trace_path = dir.join(&prepared.config.outputs.trace);
    let report_path = dir.join(&prepared.config.outputs.report);
    write_trace_csv(&trace_path, &trace)?;
    write_json(
        &report_path,
        &RunReport {
            schema: SCHEMA_VERSION,
            controller: choice,
            metadata: trace.metadata.clone(),
            trace: prepared.config.outputs.trace.clone(),
            warnings: prepared.warnings.iter().map(|d| d.to_string()).collect(),
            stability,
            metrics,
        },
    )?;
    Ok(RunOutcome {
        trace: trace_path,
        report: report_path,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub schema: u32,
    pub baseline_trace: String,
    pub lqg_trace: String,
    pub metadata: TraceMetadata,
    pub warnings: Vec<String>,
    #[serde(flatten)]
    pub comparison: analysis::ComparisonReport,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompareOutcome {
    pub baseline_trace: PathBuf,
    pub lqg_trace: PathBuf,
    pub report: PathBuf,
}

/// `trace.csv` → `trace-<tag>.csv`.
fn tagged(name: &str, tag: &str) -> String {
    match name.rsplit_once('.') {
        Some((stem, ext)) => format!("{stem}-{tag}.{ext}"),
        None => format!("{name}-{tag}"),
    }
}

pub fn cmd_compare(args: &CommonArgs) -> Result<CompareOutcome, CliError> {
    let prepared = prepare(args)?;
    print_warnings(&prepared.warnings);
    let baseline = build_system(&prepared, ControllerChoice::Droop)?;
    let lqg = build_system(&prepared, ControllerChoice::Lqg)?;
    let scenario = &prepared.config.scenario;
    let (base_trace, lqg_trace) = std::thread::scope(|s| {
        let b = s.spawn(|| simulate(&baseline, scenario));
        let l = simulate(&lqg, scenario);
        (b.join().expect("baseline simulation panicked"), l)
    });
    let (base_trace, lqg_trace) = (base_trace?, lqg_trace?);

    let signals = report_signals(&prepared.config, &lqg_trace);
    let names: Vec<&str> = signals.iter().map(String::as_str).collect();
    let mut comparison = analysis::compare(&base_trace, &lqg_trace, &names)?;
    comparison.stability = Some(StabilityPair {
        baseline: analysis::stability_report(&baseline)?,
        lqg: analysis::stability_report(&lqg)?,
    });

    let dir = out_dir(args, &prepared.config)?;
    let outputs = &prepared.config.outputs;
    let (base_name, lqg_name) = (tagged(&outputs.trace, "droop"), tagged(&outputs.trace, "lqg"));
    let out = CompareOutcome {
        baseline_trace: dir.join(&base_name),
        lqg_trace: dir.join(&lqg_name),
        report: dir.join(&outputs.report),
    };
    write_trace_csv(&out.baseline_trace, &base_trace)?;
    write_trace_csv(&out.lqg_trace, &lqg_trace)?;
    let mut metadata = lqg_trace.metadata.clone();
    metadata.controller = "droop+lqg".into();
    write_json(
        &out.report,
        &CompareReport {
            schema: SCHEMA_VERSION,
            baseline_trace: base_name,
            lqg_trace: lqg_name,
            metadata,
            warnings: prepared.warnings.iter().map(|d| d.to_string()).collect(),
            comparison,
        },
    )?;
    Ok(out)
}

/// Prints diagnostics; returns 0 iff there are no errors, else 1.
pub fn cmd_validate(args: &CommonArgs) -> Result<i32, CliError> {
    let config = source_config(args)?;
    let mut diags = diagnostics(&config);
    if !diags.iter().any(Diagnostic::is_error) {
        diags.extend(feasibility(&config));
    }
    for d in &diags {
        println!("{d}");
    }
    let errors = diags.iter().filter(|d| d.is_error()).count();
    println!("{errors} error(s), {} warning(s)", diags.len() - errors);
    Ok(if errors == 0 { 0 } else { 1 })
}

/// Stabilizability and detectability probes via a trial LQG design.
fn feasibility(config: &ConfigFile) -> Vec<Diagnostic> {
    let plant = match build_plant(&config.areas, &config.ties) {
        Ok(p) => p,
        Err(e) => return vec![Diagnostic::error("areas", e.to_string())],
    };
    let prepared = Prepared {
        config: config.clone(),
        plant,
        warnings: Vec::new(),
    };
    match build_system(&prepared, ControllerChoice::Lqg) {
        Ok(_) => Vec::new(),
        Err(e) => vec![Diagnostic::error("controller", e.to_string())],
    }
}
