//! Command-line front end: `simulate`, `run`, `evaluate` and `compare`.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 bad input data,
//! 4 numerical failure, 5 file-system error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dataset::{calibrate, load_recording, write_recording, CalibrationConfig, Manifest, Recording};
use crate::error::{Error, ErrorClass, Result};
use crate::eval::{compare, evaluate, read_solution, run_method, write_comparison, write_solution, Comparison, Method, MethodRun};
use crate::pipeline::{PipelineOptions, VehicleConfig, VelocityUpdateWheels};
use crate::sim::scenarios::{self, TyreModel};
use crate::sim::{simulate, NoiseSpec, SimVehicle, SimulationSpec, SkidEvent, TrajectorySpec};

pub const OUT_DIR_ENV: &str = "WICHINS_OUT_DIR";
pub const RUN_MANIFEST: &str = "run_manifest.txt";

#[derive(Debug, Parser)]
#[command(name = "wichins", version, about = "Dead reckoning with wheel- and chassis-mounted IMUs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a recording from a scenario or trajectory file.
    Simulate(SimulateArgs),
    /// Run one estimator on a recording.
    Run(RunArgs),
    /// Score a stored solution against ground truth.
    Evaluate(EvaluateArgs),
    /// Run several estimators on several recordings and tabulate errors.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Built-in scenario: straight, circle, figure-eight or urban.
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    pub scenario: Option<String>,
    /// Trajectory description in TOML.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Sensor noise and tyre imperfections.
    #[arg(long, value_enum, default_value_t = Switch::On)]
    pub noise: Switch,
    /// Slip interval, e.g. `wheel=1,t=30..33,s=0.2`. Repeatable.
    #[arg(long, value_parser = parse_skid)]
    pub skid: Vec<SkidEvent>,
    #[arg(long)]
    pub seed: u64,
    /// Vehicle geometry in TOML.
    #[arg(long)]
    pub vehicle: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct EstimatorArgs {
    /// Vehicle geometry in TOML; defaults to the geometry in the recording.
    #[arg(long)]
    pub vehicle: Option<PathBuf>,
    /// Skip static bias calibration.
    #[arg(long)]
    pub no_calibrate: bool,
    /// Calibration window at the start of the recording, seconds.
    #[arg(long, default_value_t = 5.0)]
    pub calibration_window: f64,
    /// Weak zero vertical-velocity prior, once per second.
    #[arg(long)]
    pub vertical_prior: bool,
    /// Wheels whose gyros correct velocity.
    #[arg(long, value_enum, default_value_t = VelocityWheels::All)]
    pub velocity_update: VelocityWheels,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VelocityWheels {
    All,
    Fixed,
}

impl From<VelocityWheels> for VelocityUpdateWheels {
    fn from(v: VelocityWheels) -> Self {
        match v {
            VelocityWheels::All => VelocityUpdateWheels::All,
            VelocityWheels::Fixed => VelocityUpdateWheels::Fixed,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Recording directory or manifest.
    #[arg(long)]
    pub recording: PathBuf,
    #[arg(long, default_value = "2wichins", value_parser = parse_method)]
    pub method: Method,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Recording providing the ground truth.
    #[arg(long)]
    pub recording: PathBuf,
    /// Solution CSV written by `run`.
    #[arg(long)]
    pub solution: PathBuf,
    #[arg(long, default_value = "2wichins", value_parser = parse_method)]
    pub method: Method,
    /// Trajectory label; the recording directory name by default.
    #[arg(long)]
    pub name: Option<String>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Recording directories. Repeatable.
    #[arg(long, required = true)]
    pub recording: Vec<PathBuf>,
    #[arg(long, default_value = "2wichins,4wichins,odo,wmi,cmi", value_delimiter = ',', value_parser = parse_method)]
    pub methods: Vec<Method>,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parses `wheel=<index>,t=<start>..<end>,s=<slip>`.
pub fn parse_skid(s: &str) -> std::result::Result<SkidEvent, String> {
    let (mut wheel, mut span, mut slip) = (None, None, None);
    for part in s.split(',') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| format!("'{part}' is not key=value"))?;
        let num = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("'{x}' is not a number"));
        match k.trim() {
            "wheel" => wheel = Some(v.trim().parse::<usize>().map_err(|_| format!("'{v}' is not a wheel index"))?),
            "t" => {
                let (a, b) = v.split_once("..").ok_or_else(|| format!("'{v}' is not start..end"))?;
                span = Some((num(a)?, num(b)?));
            }
            "s" => slip = Some(num(v)?),
            other => return Err(format!("unknown skid key '{other}'")),
        }
    }
    let (start, end) = span.ok_or("skid needs t=start..end")?;
    Ok(SkidEvent {
        wheel: wheel.ok_or("skid needs wheel=<index>")?,
        start,
        end,
        slip: slip.ok_or("skid needs s=<slip>")?,
    })
}

pub fn exit_code(class: ErrorClass) -> i32 {
    match class {
        ErrorClass::Config => 2,
        ErrorClass::Data => 3,
        ErrorClass::Numerical => 4,
        ErrorClass::Io => 5,
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(e.class())
        }
    }
}

pub fn execute(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Run(a) => cmd_run(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Compare(a) => cmd_compare(a),
    }
}

fn load_vehicle(path: Option<&Path>) -> Result<Option<VehicleConfig>> {
    path.map(VehicleConfig::load).transpose()
}

fn read_trajectory(path: &Path) -> Result<TrajectorySpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let spec: TrajectorySpec = toml::from_str(&text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    spec.segments()?;
    Ok(spec)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_run_manifest(dir: &Path, entries: &[(&str, String)]) -> Result<()> {
    let mut m = Manifest::default();
    m.set("software", concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")));
    for (k, v) in entries {
        m.set(*k, v);
    }
    let path = dir.join(RUN_MANIFEST);
    fs::write(&path, m.render()).map_err(|e| Error::io(&path, e))
}

pub fn build_simulation(a: &SimulateArgs) -> Result<SimulationSpec> {
    let trajectory = match (&a.scenario, &a.spec) {
        (Some(name), _) => scenarios::by_name(name).ok_or_else(|| {
            Error::Config(format!("unknown scenario '{name}', expected one of {}", scenarios::NAMES.join(", ")))
        })?,
        (None, Some(p)) => read_trajectory(p)?,
        (None, None) => return Err(Error::Config("give --scenario or --spec".into())),
    };
    let vehicle = load_vehicle(a.vehicle.as_deref())?.unwrap_or_default();
    let mut spec = match a.noise {
        Switch::On => SimulationSpec::new(trajectory, scenarios::imperfect_wheels(vehicle.wheels.clone(), a.seed, TyreModel::default()))
            .with_noise(NoiseSpec::tactical_grade(a.seed)),
        Switch::Off => SimulationSpec::new(trajectory, SimVehicle::nominal(vehicle.wheels.clone())),
    };
    spec.wheel_ids = vehicle.wheel_ids.clone();
    spec.gravity = vehicle.gravity;
    for s in &a.skid {
        spec = spec.with_skid(*s);
    }
    Ok(spec)
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let spec = build_simulation(a)?;
    let sim = simulate(&spec)?;
    let dir = &a.out.out;
    write_recording(dir, &sim.recording)?;
    let source = match (&a.scenario, &a.spec) {
        (Some(s), _) => format!("scenario {s}"),
        (_, Some(p)) => format!("spec {}", p.display()),
        _ => String::new(),
    };
    let toml = toml::to_string(&spec).map_err(|e| Error::Config(e.to_string()))?;
    let spec_path = dir.join("simulation.toml");
    fs::write(&spec_path, toml).map_err(|e| Error::io(&spec_path, e))?;
    write_run_manifest(
        dir,
        &[
            ("command", "simulate".into()),
            ("source", source),
            ("seed", a.seed.to_string()),
            ("noise", format!("{:?}", a.noise).to_lowercase()),
            ("skids", format!("{:?}", a.skid)),
            ("simulation_spec", "simulation.toml".into()),
        ],
    )?;
    println!("wrote {} samples per stream to {}", sim.recording.chassis.len(), dir.display());
    Ok(())
}

/// Loads, optionally calibrates, and resolves the vehicle for a recording.
pub fn prepare(path: &Path, est: &EstimatorArgs) -> Result<(Recording, VehicleConfig)> {
    let raw = load_recording(path)?;
    let config = match load_vehicle(est.vehicle.as_deref())? {
        Some(c) => c,
        None => VehicleConfig::from_recording(&raw),
    };
    let rec = if est.no_calibrate {
        raw
    } else {
        let cfg = CalibrationConfig {
            window_s: est.calibration_window,
            gravity: config.gravity,
            ..CalibrationConfig::default()
        };
        calibrate(&raw, &cfg)?.apply(&raw)
    };
    Ok((rec, config))
}

fn options(est: &EstimatorArgs) -> PipelineOptions {
    PipelineOptions {
        vertical_velocity_prior: est.vertical_prior,
        velocity_update: est.velocity_update.into(),
        ..PipelineOptions::default()
    }
}

fn estimator_entries(est: &EstimatorArgs, config: &VehicleConfig) -> Vec<(&'static str, String)> {
    vec![
        ("calibrated", (!est.no_calibrate).to_string()),
        ("calibration_window_s", est.calibration_window.to_string()),
        ("vertical_prior", est.vertical_prior.to_string()),
        ("velocity_update", format!("{:?}", est.velocity_update).to_lowercase()),
        (
            "vehicle",
            est.vehicle
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "recording".into()),
        ),
        ("vehicle_config", "vehicle.toml".into()),
        ("wheel_ids", config.wheel_ids.join(",")),
    ]
}

fn write_vehicle(dir: &Path, config: &VehicleConfig) -> Result<()> {
    let p = dir.join("vehicle.toml");
    fs::write(&p, config.to_toml_string()).map_err(|e| Error::io(&p, e))
}

fn cmd_run(a: &RunArgs) -> Result<()> {
    let (rec, config) = prepare(&a.recording, &a.estimator)?;
    let sol = run_method(a.method, &rec, &config, &options(&a.estimator))?;
    let dir = &a.out.out;
    create_dir(dir)?;
    let file = format!("solution_{}.csv", a.method);
    write_solution(&dir.join(&file), &sol)?;
    write_vehicle(dir, &config)?;
    let mut entries = vec![
        ("command", "run".to_string()),
        ("recording", a.recording.display().to_string()),
        ("method", a.method.to_string()),
        ("solution", file.clone()),
    ];
    entries.extend(estimator_entries(&a.estimator, &config));
    write_run_manifest(dir, &entries)?;
    println!("wrote {} epochs to {}", sol.len(), dir.join(file).display());
    Ok(())
}

fn trajectory_name(path: &Path) -> String {
    let p = if path.is_dir() { path } else { path.parent().unwrap_or(path) };
    p.canonicalize()
        .ok()
        .as_deref()
        .unwrap_or(p)
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "recording".into())
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let rec = load_recording(&a.recording)?;
    let sol = read_solution(&a.solution)?;
    let name = a.name.clone().unwrap_or_else(|| trajectory_name(&a.recording));
    let (row, aligned) = evaluate(&name, a.method, &sol, &rec.ground_truth)?;
    let cmp = Comparison {
        report: crate::eval::MetricReport::from_rows(vec![row.clone()]),
        runs: vec![MethodRun {
            trajectory: name,
            method: a.method,
            solution: sol,
            aligned,
            row,
        }],
    };
    write_comparison(&a.out.out, &cmp)?;
    write_run_manifest(
        &a.out.out,
        &[
            ("command", "evaluate".into()),
            ("recording", a.recording.display().to_string()),
            ("solution", a.solution.display().to_string()),
            ("method", a.method.to_string()),
        ],
    )?;
    print!("{}", cmp.report.to_csv());
    Ok(())
}

fn cmd_compare(a: &CompareArgs) -> Result<()> {
    let mut sets = Vec::new();
    let mut config = None;
    for path in &a.recording {
        let (rec, cfg) = prepare(path, &a.estimator)?;
        config.get_or_insert(cfg);
        sets.push((trajectory_name(path), rec));
    }
    let config = config.ok_or_else(|| Error::Config("no recordings given".into()))?;
    let mut names: Vec<&String> = sets.iter().map(|(n, _)| n).collect();
    names.sort();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config("recording directory names must be unique".into()));
    }
    let mut methods_run: Vec<Method> = Vec::new();
    for m in &a.methods {
        if !methods_run.contains(m) {
            methods_run.push(*m);
        }
    }
    let cmp = compare(&sets, &methods_run, &config, &options(&a.estimator))?;
    let dir = &a.out.out;
    write_comparison(dir, &cmp)?;
    write_vehicle(dir, &config)?;
    let methods: Vec<&str> = methods_run.iter().map(|m| m.name()).collect();
    let inputs: Vec<String> = a.recording.iter().map(|p| p.display().to_string()).collect();
    let mut entries = vec![
        ("command", "compare".to_string()),
        ("recordings", inputs.join(",")),
        ("methods", methods.join(",")),
    ];
    entries.extend(estimator_entries(&a.estimator, &config));
    write_run_manifest(dir, &entries)?;
    print!("{}", cmp.report.to_csv());
    Ok(())
}
