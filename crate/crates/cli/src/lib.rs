//! Command-line driver: optimize durations, simulate traces, sweep privacy
//! and resources, generate synthetic traces, classify deployments.
//!
//! Every command except `classify` reads an optional JSON [`RunConfig`];
//! flags override its keys.

mod config;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fovguard_core::optimizer::{max_resources_rate, optimize_durations, DurationPlan, PlanStatus};
use fovguard_core::prediction::PredictorKind;
use fovguard_core::privacy::{
    classify_deployment, overall_tile_count, DeploymentCase, PredictionStyle, PrivacySpec, Site,
    StageVerdicts,
};
use fovguard_core::resources::{cc_capability, tile_bits, Rates};
use fovguard_core::simulator::{
    aggregate, simulate_traces, sweep, Aggregate, PrecomputedPredictions, SegmentPredictor,
    SimReport, SimSetup, SweepSetup,
};
use fovguard_core::trace_io::{dataset_path, load_traces, save_trace, synth_traces, Trace, TraceFormat};
use fovguard_core::Error;
use serde::Serialize;

pub use config::{RunConfig, SynthConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io { .. } | Error::Parse { .. } => CliError::Io(e.to_string()),
            Error::Infeasible { .. }
            | Error::EmptyObservation
            | Error::InsufficientSamples { .. }
            | Error::NoGridPlan { .. } => CliError::Infeasible(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "fovguard", version, about = "Privacy-preserving proactive 360° video streaming simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal observation, computing and communication durations.
    Optimize(ConfigArgs),
    /// Simulate every trace; prints the aggregate as JSON.
    Simulate(ConfigArgs),
    /// QoE, DoO and CC capability over the rho_s x R_cc grid, as CSV.
    Sweep(ConfigArgs),
    /// Write synthetic head-movement traces.
    GenTraces(ConfigArgs),
    /// FoV leakage of a deployment case during training and prediction.
    Classify(ClassifyArgs),
}

#[derive(Debug, Default, Args)]
pub struct ConfigArgs {
    /// JSON config file; omitted keys take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Print the resolved config and exit.
    #[arg(long)]
    pub print_config: bool,
    #[arg(long)]
    pub rho_s: Option<f64>,
    /// Comma-separated privacy levels.
    #[arg(long, value_delimiter = ',')]
    pub rho_grid: Option<Vec<f64>>,
    /// Comma-separated target resources rates.
    #[arg(long, value_delimiter = ',')]
    pub rcc_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Proactive streaming starts at this segment.
    #[arg(long)]
    pub l0: Option<usize>,
    /// Number of segments.
    #[arg(long)]
    pub segments: Option<usize>,
    /// Transmission rate, bit/s.
    #[arg(long)]
    pub c_com: Option<f64>,
    /// Rendering rate, bit/s.
    #[arg(long)]
    pub c_cpt: Option<f64>,
    #[arg(long, value_enum)]
    pub predictor: Option<PredictorArg>,
    /// Precomputed predictions CSV (trace_id,segment_index,yaw_rad,pitch_rad).
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// FoV diameter, degrees.
    #[arg(long)]
    pub fov: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trace file or dataset directory.
    #[arg(long)]
    pub traces: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub trace_format: Option<TraceFormatArg>,
    /// Number of synthetic traces.
    #[arg(long)]
    pub count: Option<usize>,
    /// Output file or directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PredictorArg {
    TrivialMotion,
    LinearExtrapolation,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum TraceFormatArg {
    YawPitchCsv,
    QuaternionCsv,
}

impl ConfigArgs {
    /// Loads the config file (if any) and applies the flag overrides.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.rho_s {
            cfg.rho_s = v;
        }
        if let Some(v) = &self.rho_grid {
            cfg.rho_grid = v.clone();
        }
        if let Some(v) = &self.rcc_grid {
            cfg.rcc_grid = v.clone();
        }
        if let Some(v) = self.tau {
            cfg.tau = v;
        }
        if let Some(v) = self.l0 {
            cfg.clock.l0 = v;
        }
        if let Some(v) = self.segments {
            cfg.clock.segments = v;
        }
        if self.c_com.is_some() || self.c_cpt.is_some() {
            let base = cfg.resolved_rates()?;
            cfg.rates = Some(Rates {
                c_com: self.c_com.unwrap_or(base.c_com),
                c_cpt: self.c_cpt.unwrap_or(base.c_cpt),
            });
            cfg.channel = None;
            cfg.compute = None;
        }
        if let Some(p) = self.predictor {
            cfg.predictor = match p {
                PredictorArg::TrivialMotion => PredictorKind::TrivialMotion,
                PredictorArg::LinearExtrapolation => PredictorKind::LinearExtrapolation,
            };
        }
        if let Some(v) = &self.predictions {
            cfg.predictions = Some(v.clone());
        }
        if let Some(v) = self.fov {
            cfg.fov_diameter_deg = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.traces {
            cfg.traces = Some(v.clone());
        }
        if let Some(f) = self.trace_format {
            cfg.trace_format = match f {
                TraceFormatArg::YawPitchCsv => TraceFormat::YawPitchCsv,
                TraceFormatArg::QuaternionCsv => TraceFormat::QuaternionCsv,
            };
        }
        if let Some(v) = self.count {
            cfg.trace_count = v;
        }
        if let Some(v) = &self.out {
            cfg.out = Some(v.clone());
        }
        if cfg.rates.is_none() && cfg.channel.is_none() && cfg.compute.is_none() {
            cfg.rates = Some(Rates::reference());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Default, Args)]
pub struct ClassifyArgs {
    /// Print all twelve cases.
    #[arg(long)]
    pub all: bool,
    #[arg(long, value_enum, default_value = "off")]
    pub camouflage: Toggle,
    /// A single case by number, 1-12.
    #[arg(long)]
    pub case: Option<usize>,
    #[arg(long, value_enum)]
    pub style: Option<StyleArg>,
    #[arg(long, value_enum)]
    pub train_site: Option<TrainSiteArg>,
    #[arg(long, value_enum)]
    pub predict_site: Option<SiteArg>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    #[default]
    Off,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum StyleArg {
    Direct,
    Indirect,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SiteArg {
    Mec,
    Hmd,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum TrainSiteArg {
    Mec,
    Hmd,
    None,
}

/// What a command prints and the exit code it ends with.
#[derive(Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub exit_code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self { stdout, exit_code: 0 }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    if let Command::Classify(args) = &cli.command {
        return cmd_classify(args).map(Outcome::ok);
    }
    let (Command::Optimize(args) | Command::Simulate(args) | Command::Sweep(args) | Command::GenTraces(args)) =
        &cli.command
    else {
        unreachable!("classify handled above")
    };
    let cfg = args.resolve()?;
    if args.print_config {
        return Ok(Outcome::ok(to_json(&cfg)));
    }
    match &cli.command {
        Command::Optimize(_) => cmd_optimize(&cfg),
        Command::Simulate(_) => cmd_simulate(&cfg).map(Outcome::ok),
        Command::Sweep(_) => cmd_sweep(&cfg).map(Outcome::ok),
        Command::GenTraces(_) => cmd_gen_traces(&cfg).map(Outcome::ok),
        Command::Classify(_) => unreachable!(),
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report types serialize");
    s.push('\n');
    s
}

#[derive(Debug, Serialize)]
pub struct OptimizeReport {
    pub feasible: bool,
    pub rho_s: f64,
    pub n_p: usize,
    pub max_resources_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_cc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_cc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cc_capability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<DurationPlan>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Prints the plan as JSON. An infeasible configuration still prints a
/// report (with `feasible: false`) and exits with code 3.
pub fn cmd_optimize(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let rates = cfg.resolved_rates()?;
    let spec = PrivacySpec::new(cfg.rho_s)?;
    let m = cfg.video.tile_count();
    let n_p = overall_tile_count(&spec, m, cfg.video.n_fov)?;
    let r_max = max_resources_rate(&cfg.video, &rates);
    let mut report = OptimizeReport {
        feasible: false,
        rho_s: cfg.rho_s,
        n_p,
        max_resources_rate: r_max,
        t_cc: None,
        r_cc: None,
        cc_capability: None,
        plan: None,
        reason: None,
    };
    match optimize_durations(&cfg.clock, cfg.tau, &spec, &cfg.video, &rates) {
        Ok(plan) => {
            let c_cc = cc_capability(plan.t_com, plan.t_cpt, &rates, &tile_bits(&cfg.video), m);
            report.feasible = true;
            report.t_cc = Some(plan.t_cc());
            report.r_cc = Some(c_cc / plan.t_cc());
            report.cc_capability = Some(c_cc);
            if plan.status == PlanStatus::NoObservation {
                report.reason = Some("no time left for an observation sample".into());
            }
            report.plan = Some(plan);
            Ok(Outcome::ok(to_json(&report)))
        }
        Err(e @ Error::Infeasible { .. }) => {
            report.reason = Some(e.to_string());
            Ok(Outcome {
                stdout: to_json(&report),
                exit_code: CliError::Infeasible(String::new()).exit_code(),
            })
        }
        Err(e) => Err(e.into()),
    }
}

/// Traces from `cfg.traces`, or synthetic ones.
pub fn load_config_traces(cfg: &RunConfig) -> Result<Vec<Trace>, CliError> {
    let traces = match &cfg.traces {
        Some(p) => load_traces(p, cfg.trace_format)?,
        None => synth_traces(&cfg.synth.params(cfg.seed), cfg.trace_count)?,
    };
    if traces.is_empty() {
        return Err(CliError::Config("traces: no traces to simulate".into()));
    }
    Ok(traces)
}

fn predictor_for(cfg: &RunConfig) -> Result<Box<dyn SegmentPredictor>, CliError> {
    Ok(match &cfg.predictions {
        Some(p) => Box::new(PrecomputedPredictions::load(p)?),
        None => Box::new(cfg.predictor),
    })
}

/// Per-trace reports plus their aggregate for the configured `rho_s`.
pub fn simulate_config(cfg: &RunConfig) -> Result<(Vec<SimReport>, Aggregate), CliError> {
    let traces = load_config_traces(cfg)?;
    let predictor = predictor_for(cfg)?;
    let setup = SimSetup::optimized(
        cfg.clock,
        cfg.video.clone(),
        cfg.resolved_rates()?,
        PrivacySpec::new(cfg.rho_s)?,
        cfg.tau,
        cfg.fov_diameter_deg,
    )?;
    let reports = simulate_traces(&traces, predictor.as_ref(), &setup)?;
    let agg = aggregate(&reports, &setup)?;
    Ok((reports, agg))
}

/// Prints the aggregate. With `out` set, also writes one JSON report per
/// trace (at `<out>/<trace_id>.json`) and `<out>/aggregate.json`.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<String, CliError> {
    let (reports, agg) = simulate_config(cfg)?;
    let agg_json = to_json(&agg);
    if let Some(dir) = &cfg.out {
        for r in &reports {
            let path = dir.join(format!("{}.json", r.trace_id));
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
            }
            fs::write(&path, to_json(r)).map_err(|e| io_err(&path, e))?;
        }
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let path = dir.join("aggregate.json");
        fs::write(&path, &agg_json).map_err(|e| io_err(&path, e))?;
    }
    Ok(agg_json)
}

pub fn sweep_csv(cfg: &RunConfig) -> Result<String, CliError> {
    let traces = load_config_traces(cfg)?;
    let predictor = predictor_for(cfg)?;
    let setup = SweepSetup {
        clock: cfg.clock,
        video: cfg.video.clone(),
        base_rates: cfg.resolved_rates()?,
        tau: cfg.tau,
        fov_diameter_deg: cfg.fov_diameter_deg,
    };
    let res = sweep(&traces, predictor.as_ref(), &cfg.rho_grid, &cfg.rcc_grid, &setup)?;
    Ok(res.to_csv())
}

/// The sweep CSV, printed or written to `out`.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<String, CliError> {
    let csv = sweep_csv(cfg)?;
    match &cfg.out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
            }
            fs::write(path, &csv).map_err(|e| io_err(path, e))?;
            Ok(String::new())
        }
        None => Ok(csv),
    }
}

/// Writes `trace_count` synthetic traces under `out` in the dataset layout.
pub fn cmd_gen_traces(cfg: &RunConfig) -> Result<String, CliError> {
    let dir = cfg
        .out
        .as_ref()
        .ok_or_else(|| CliError::Config("out: gen-traces needs an output directory".into()))?;
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let traces = if cfg.trace_count == 0 {
        Vec::new()
    } else {
        synth_traces(&cfg.synth.params(cfg.seed), cfg.trace_count)?
    };
    let mut listing = String::new();
    for t in &traces {
        let path = dataset_path(dir, t);
        save_trace(t, &path)?;
        listing.push_str(&format!("{}\n", path.display()));
    }
    Ok(listing)
}

pub const CLASSIFY_HEADER: &str =
    "no,style,train_site,predict_site,training_upload,training,prediction_upload,prediction";

fn site_name(s: Option<Site>) -> &'static str {
    match s {
        None => "none",
        Some(Site::Mec) => "mec",
        Some(Site::Hmd) => "hmd",
    }
}

fn classify_row(no: Option<usize>, case: &DeploymentCase, v: &StageVerdicts) -> String {
    let cam = case.camouflage_enabled;
    format!(
        "{},{},{},{},{},{},{},{}",
        no.map_or_else(|| "-".to_string(), |n| n.to_string()),
        match case.prediction_style {
            PredictionStyle::Direct => "direct",
            PredictionStyle::Indirect => "indirect",
        },
        site_name(case.train_site),
        site_name(Some(case.predict_site)),
        case.training_upload.label(cam),
        v.training,
        case.prediction_upload.label(cam),
        v.prediction,
    )
}

/// One CSV row per case: `--all`, `--case N`, or a case described by
/// `--style`, `--train-site` and `--predict-site`.
pub fn cmd_classify(args: &ClassifyArgs) -> Result<String, CliError> {
    let cam = args.camouflage == Toggle::On;
    let described = args.style.is_some() || args.train_site.is_some() || args.predict_site.is_some();
    let modes = [args.all, args.case.is_some(), described];
    if modes.iter().filter(|m| **m).count() != 1 {
        return Err(CliError::Config(
            "classify: give exactly one of --all, --case, or --style/--train-site/--predict-site".into(),
        ));
    }
    let mut out = format!("{CLASSIFY_HEADER}\n");
    let mut emit = |no: Option<usize>, case: DeploymentCase| -> Result<(), CliError> {
        let v = classify_deployment(&case)?;
        out.push_str(&classify_row(no, &case, &v));
        out.push('\n');
        Ok(())
    };
    if args.all {
        for no in 1..=12 {
            emit(Some(no), DeploymentCase::numbered(no, cam)?)?;
        }
    } else if let Some(no) = args.case {
        emit(Some(no), DeploymentCase::numbered(no, cam)?)?;
    } else {
        let (Some(style), Some(train), Some(predict)) = (args.style, args.train_site, args.predict_site) else {
            return Err(CliError::Config(
                "classify: --style, --train-site and --predict-site go together".into(),
            ));
        };
        let style = match style {
            StyleArg::Direct => PredictionStyle::Direct,
            StyleArg::Indirect => PredictionStyle::Indirect,
        };
        let train = match train {
            TrainSiteArg::Mec => Some(Site::Mec),
            TrainSiteArg::Hmd => Some(Site::Hmd),
            TrainSiteArg::None => None,
        };
        let predict = match predict {
            SiteArg::Mec => Site::Mec,
            SiteArg::Hmd => Site::Hmd,
        };
        let case = DeploymentCase::canonical(style, train, predict, cam);
        let no = (1..=12).find(|&n| DeploymentCase::numbered(n, cam).ok() == Some(case));
        emit(no, case)?;
    }
    Ok(out)
}
