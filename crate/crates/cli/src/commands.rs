//! Subcommands, run manifests and replay.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand};
use pdmp::analytic::{boundary_lambda, represent_face, MonteCarloConfig, Representation};
use pdmp::classify::{classify, invasion_table, ClassifyConfig, Outcome};
use pdmp::geometry::{bracket_span_rank, DEFAULT_DEPTH};
use pdmp::measure::{default_burn_in, ln_f_drift_average, occupation_histogram, HistogramGrid};
use pdmp::model::validate;
use pdmp::presets::{preset, FigureName};
use pdmp::simulate::{simulate, simulate_ensemble, SimConfig, Trajectory};
use pdmp::{ModelSpec, PdmpError, SubspaceIndex};
use serde::{Deserialize, Serialize};

use crate::modelfile::{parse_model_file, parse_model_str, serialize_model};
use crate::output::{self, Panel};

/// Flags shared by every command.
#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct Common {
    /// Model file
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output directory (created if missing)
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Simulation horizon
    #[arg(long)]
    pub tmax: Option<f64>,
    #[arg(long)]
    pub replicates: Option<usize>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct Start {
    /// Initial state, comma separated (default: all ones)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    /// Initial environment (1-based)
    #[arg(long, default_value_t = 1)]
    pub k0: usize,
    /// Spacing of recorded points
    #[arg(long, default_value_t = 0.1)]
    pub record_dt: f64,
}

#[derive(Subcommand, Clone, Debug, Serialize, Deserialize)]
pub enum Command {
    /// Simulate one path; writes trajectory.csv and jumps.csv
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        start: Start,
        /// Also write an occupation histogram with this many bins per axis
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Simulate independent replicates; writes endpoints.csv
    Ensemble {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        start: Start,
        /// Also write every path under paths/
        #[arg(long)]
        paths: bool,
    },
    /// Closed-form invariant density on a one-species face
    Density {
        #[command(flatten)]
        common: Common,
        /// Species carrying the density (1-based); defaults to 1 for one-species models
        #[arg(long)]
        species: Option<usize>,
        #[arg(long, default_value_t = 400)]
        points: usize,
        /// Upper tail mass left off the plotted range
        #[arg(long, default_value_t = 1e-8)]
        tail: f64,
    },
    /// Invasion rates of every face
    Invade {
        #[command(flatten)]
        common: Common,
    },
    /// Persistence or extinction verdict
    Classify {
        #[command(flatten)]
        common: Common,
    },
    /// Lie bracket span at a point
    Brackets {
        #[command(flatten)]
        common: Common,
        /// Point, comma separated (default: all ones)
        #[arg(long, value_delimiter = ',')]
        point: Option<Vec<f64>>,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
    },
    /// Check the standing assumptions numerically
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Reproduce a figure: writes <name>.csv and <name>.svg
    Figure {
        /// fig1, fig2a, fig2b, fig3a or fig3b
        name: String,
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::Ensemble { .. } => "ensemble",
            Command::Density { .. } => "density",
            Command::Invade { .. } => "invade",
            Command::Classify { .. } => "classify",
            Command::Brackets { .. } => "brackets",
            Command::Validate { .. } => "validate",
            Command::Figure { .. } => "figure",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Simulate { common, .. }
            | Command::Ensemble { common, .. }
            | Command::Density { common, .. }
            | Command::Invade { common }
            | Command::Classify { common }
            | Command::Brackets { common, .. }
            | Command::Validate { common }
            | Command::Figure { common, .. } => common,
        }
    }

    fn common_mut(&mut self) -> &mut Common {
        match self {
            Command::Simulate { common, .. }
            | Command::Ensemble { common, .. }
            | Command::Density { common, .. }
            | Command::Invade { common }
            | Command::Classify { common }
            | Command::Brackets { common, .. }
            | Command::Validate { common }
            | Command::Figure { common, .. } => common,
        }
    }
}

/// Record of one run, written as `manifest.json` next to the outputs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub invocation: Command,
    pub config_path: Option<PathBuf>,
    /// The resolved model in model-file syntax.
    pub model: String,
    pub params: BTreeMap<String, f64>,
    pub fingerprint: String,
    pub seed: u64,
    pub version: String,
    /// Output files, relative to the manifest's directory.
    pub outputs: Vec<String>,
    pub summary: serde_json::Value,
    pub wall_clock_s: f64,
}

pub const MANIFEST: &str = "manifest.json";

/// A finished command; `inconclusive` maps to its own exit code.
#[derive(Debug)]
pub struct RunResult {
    pub manifest: RunManifest,
    pub inconclusive: bool,
}

/// Standing assumptions failed; the report has been written.
#[derive(Debug)]
pub struct ValidationFailed(pub Vec<String>);

impl std::fmt::Display for ValidationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "model fails validation: {}", self.0.join("; "))
    }
}

impl std::error::Error for ValidationFailed {}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, &(serde_json::to_string_pretty(value)? + "\n"))
    }
}

fn load_model(common: &Common, inline: Option<&str>) -> Result<ModelSpec> {
    if let Some(src) = inline {
        return parse_model_str(src).context("model embedded in manifest");
    }
    let path = common.model.as_ref().context("this command needs --model <FILE>")?;
    parse_model_file(path).with_context(|| format!("in model file {}", path.display()))
}

fn start_state(model: &ModelSpec, start: &Start) -> Result<(Vec<f64>, usize)> {
    let x0 = start.x0.clone().unwrap_or_else(|| vec![1.0; model.n()]);
    if x0.len() != model.n() {
        return Err(PdmpError::DimensionMismatch { expected: model.n(), got: x0.len() }.into());
    }
    if start.k0 == 0 || start.k0 > model.n0() {
        return Err(PdmpError::EnvOutOfRange { k: start.k0, n0: model.n0() }.into());
    }
    Ok((x0, start.k0 - 1))
}

fn sim_config(common: &Common, record_dt: f64, default_tmax: f64) -> Result<SimConfig> {
    let mut cfg = SimConfig::new(common.tmax.unwrap_or(default_tmax), common.seed);
    cfg.record_dt = record_dt;
    cfg.check()?;
    Ok(cfg)
}

fn classify_config(common: &Common) -> ClassifyConfig {
    let mut cfg = ClassifyConfig::default();
    if let Some(t) = common.tmax {
        cfg.mc.t_max = t;
        cfg.mc.burn_in = 0.1 * t;
    }
    cfg.mc.seed = common.seed;
    cfg
}

/// Runs `cmd`, writes its outputs and manifest. `inline_model` replaces
/// `--model` when replaying.
pub fn run(cmd: &Command, inline_model: Option<&str>) -> Result<RunResult> {
    let clock = Instant::now();
    let common = cmd.common();
    let mut out = Outputs::new(&common.out)?;
    let mut inconclusive = false;
    let model = match cmd {
        Command::Figure { name, .. } => preset(FigureName::from_name(name)?)?.model,
        _ => load_model(common, inline_model)?,
    };
    let m = &model;
    let summary = match cmd {
        Command::Simulate { start, bins, .. } => run_simulate(m, common, start, *bins, &mut out)?,
        Command::Ensemble { start, paths, .. } => run_ensemble(m, common, start, *paths, &mut out)?,
        Command::Density { species, points, tail, .. } => run_density(m, *species, *points, *tail, &mut out)?,
        Command::Invade { .. } => {
            let table = invasion_table(m, &classify_config(common))?;
            out.json("invasion.json", &table)?;
            out.write("invasion.csv", &output::invasion_csv(&table))?;
            println!("{}", output::invasion_csv(&table).trim_end());
            serde_json::json!({ "faces": table.rows.len(), "existing": table.existing().count() })
        }
        Command::Classify { .. } => {
            let c = classify(m, &classify_config(common))?;
            out.json("verdict.json", &c)?;
            out.write("invasion.csv", &output::invasion_csv(&c.table))?;
            let label = c.verdict.outcome.label();
            println!("verdict: {label}");
            for q in &c.verdict.qualifiers {
                println!("  {q}");
            }
            inconclusive = matches!(c.verdict.outcome, Outcome::Inconclusive);
            serde_json::json!({ "verdict": label, "qualifiers": c.verdict.qualifiers })
        }
        Command::Brackets { point, depth, .. } => {
            let x = point.clone().unwrap_or_else(|| vec![1.0; m.n()]);
            let basis = bracket_span_rank(m, &x, *depth)?;
            out.json("brackets.json", &basis)?;
            println!("rank {} of {} at {:?} (depth {}, tolerance {:e})", basis.rank, m.n(), x, depth, basis.tolerance);
            if let Some(det) = basis.det {
                println!("det M = {det:e}");
            }
            serde_json::json!({ "rank": basis.rank, "full_rank": basis.full_rank(), "det": basis.det })
        }
        Command::Validate { .. } => {
            let report = validate(m);
            out.json("validation.json", &report)?;
            for msg in &report.messages {
                println!("{msg}");
            }
            if report.messages.is_empty() {
                println!("all checks passed");
            }
            if !report.ok() {
                write_manifest(cmd, common, m, &mut out, serde_json::Value::Null, clock)?;
                return Err(ValidationFailed(report.messages.clone()).into());
            }
            serde_json::json!({ "ok": true })
        }
        Command::Figure { name, .. } => run_figure(name, common, &mut out)?,
    };
    let manifest = write_manifest(cmd, common, m, &mut out, summary, clock)?;
    Ok(RunResult { manifest, inconclusive })
}

fn write_manifest(
    cmd: &Command,
    common: &Common,
    model: &ModelSpec,
    out: &mut Outputs,
    summary: serde_json::Value,
    clock: Instant,
) -> Result<RunManifest> {
    let manifest = RunManifest {
        command: cmd.name().to_string(),
        invocation: cmd.clone(),
        config_path: common.model.clone(),
        model: serialize_model(model),
        params: model.params().clone(),
        fingerprint: model.fingerprint(),
        seed: common.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        outputs: out.files.clone(),
        summary,
        wall_clock_s: clock.elapsed().as_secs_f64(),
    };
    let path = out.dir.join(MANIFEST);
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(manifest)
}

fn run_simulate(
    model: &ModelSpec,
    common: &Common,
    start: &Start,
    bins: Option<usize>,
    out: &mut Outputs,
) -> Result<serde_json::Value> {
    let (x0, k0) = start_state(model, start)?;
    let cfg = sim_config(common, start.record_dt, 100.0)?;
    let traj = simulate(model, &x0, k0, &cfg)?;
    out.write("trajectory.csv", &output::trajectory_csv(&traj))?;
    out.write("jumps.csv", &output::jumps_csv(&traj))?;
    if let Some(bins) = bins {
        let hi: Vec<f64> = (0..model.n())
            .map(|i| (0..traj.len()).map(|s| traj.state(s)[i]).fold(0.0, f64::max) * 1.05 + 1e-12)
            .collect();
        let grid = HistogramGrid::new(vec![0.0; model.n()], hi, vec![bins; model.n()])?;
        let hist = occupation_histogram(&traj, model.n0(), &grid, default_burn_in(&traj))?;
        out.write("histogram.csv", &hist.to_csv())?;
    }
    let drift = match model.gauge() {
        Some(_) => Some(ln_f_drift_average(&traj, model, default_burn_in(&traj))?.value),
        None => {
            eprintln!("warning: model has no gauge function; ln F drift not computed");
            None
        }
    };
    println!(
        "simulated to t = {} with {} jumps; final x = {:?}, k = {}",
        traj.t_max,
        traj.jumps.len(),
        traj.final_state(),
        traj.final_env() + 1
    );
    Ok(serde_json::json!({
        "jumps": traj.jumps.len(),
        "final_x": traj.final_state(),
        "final_k": traj.final_env() + 1,
        "ln_f_drift": drift,
    }))
}

fn run_ensemble(
    model: &ModelSpec,
    common: &Common,
    start: &Start,
    paths: bool,
    out: &mut Outputs,
) -> Result<serde_json::Value> {
    let (x0, k0) = start_state(model, start)?;
    let cfg = sim_config(common, start.record_dt, 100.0)?;
    let reps = common.replicates.unwrap_or(10);
    let trajs = simulate_ensemble(model, &x0, k0, &cfg, reps)?;
    out.write("endpoints.csv", &output::endpoints_csv(&trajs))?;
    if paths {
        for tr in &trajs {
            out.write(&format!("paths/replicate_{:04}.csv", tr.replicate), &output::trajectory_csv(tr))?;
        }
    }
    let medians: Vec<f64> =
        (0..model.n()).map(|i| median(trajs.iter().map(|t| t.final_state()[i]).collect())).collect();
    println!("{reps} replicates to t = {}; median final x = {medians:?}", cfg.t_max);
    Ok(serde_json::json!({ "replicates": reps, "median_final_x": medians }))
}

fn run_density(
    model: &ModelSpec,
    species: Option<usize>,
    points: usize,
    tail: f64,
    out: &mut Outputs,
) -> Result<serde_json::Value> {
    let i = match (species, model.n()) {
        (Some(i), n) if i >= 1 && i <= n => i - 1,
        (Some(i), n) => bail!(PdmpError::InvalidConfig(format!("species {i} out of range 1..={n}"))),
        (None, 1) => 0,
        (None, _) => bail!(PdmpError::InvalidConfig("pass --species for models with more than one species".into())),
    };
    let rep = represent_face(model, &SubspaceIndex::new([i]), &MonteCarloConfig::default())?;
    match &rep.repr {
        Representation::Density { density, .. } => {
            let rows = density.table(points, tail)?;
            out.write("density.csv", &output::density_csv(&rows))?;
            out.json("density.json", density)?;
            println!("{:?} density on species {} with support {:?}", density.kind, i + 1, density.support);
            Ok(serde_json::json!({ "kind": format!("{:?}", density.kind), "support": density.support }))
        }
        Representation::PointMass { x, nu } => {
            let desc = serde_json::json!({ "kind": "PointMass", "x": x, "nu": nu });
            out.json("density.json", &desc)?;
            println!("invariant measure on species {} is a point mass at x = {:?}", i + 1, x);
            Ok(desc)
        }
        other => bail!(PdmpError::Unsupported(format!(
            "no closed-form density on species {} (method {})",
            i + 1,
            other.method().name()
        ))),
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn run_figure(name: &str, common: &Common, out: &mut Outputs) -> Result<serde_json::Value> {
    let fig = FigureName::from_name(name)?;
    let p = preset(fig)?;
    let t_max = common.tmax.unwrap_or(p.t_max);
    let reps = common.replicates.unwrap_or(p.replicates);
    let record_dt = if p.model.n() == 1 { t_max / 2000.0 } else { t_max / 1000.0 };
    let cfg = sim_config(common, record_dt, t_max)?;
    let trajs = simulate_ensemble(&p.model, &p.x0, p.k0, &cfg, reps)?;
    let csv = if reps == 1 { output::trajectory_csv(&trajs[0]) } else { output::ensemble_csv(&trajs, record_dt) };
    out.write(&format!("{name}.csv"), &csv)?;
    let summary = match fig {
        FigureName::Fig1 | FigureName::Fig2a | FigureName::Fig2b => {
            let origin = represent_face(&p.model, &SubspaceIndex::empty(), &MonteCarloConfig::default())?;
            let lambda = boundary_lambda(&p.model, &origin, 0)?.value;
            println!("{name}: lambda(delta_0 x nu) = {lambda}");
            out.write(&format!("{name}.svg"), &single_species_svg(name, &trajs[0], lambda))?;
            serde_json::json!({ "lambda_origin": lambda, "final_x": trajs[0].final_state() })
        }
        FigureName::Fig3a | FigureName::Fig3b => {
            let finals: Vec<&[f64]> = trajs.iter().map(Trajectory::final_state).collect();
            let coexist = finals.iter().filter(|x| x[0].min(x[1]) > 0.01).count();
            let x2_gone = finals.iter().filter(|x| x[1] < 1e-3).count();
            let med2 = median(finals.iter().map(|x| x[1]).collect());
            println!("{name}: {reps} paths, {coexist} end with min(x1,x2) > 0.01, {x2_gone} end with x2 < 1e-3, median final x2 = {med2:e}");
            out.write(&format!("{name}.svg"), &two_species_svg(name, &trajs))?;
            serde_json::json!({ "paths": reps, "coexisting": coexist, "x2_below_1e-3": x2_gone, "median_final_x2": med2 })
        }
    };
    Ok(summary)
}

fn single_species_svg(name: &str, traj: &Trajectory, lambda: f64) -> String {
    let ymax = (0..traj.len()).map(|s| traj.state(s)[0]).fold(0.0, f64::max) * 1.1;
    let panel = Panel {
        left: 70.0,
        top: 40.0,
        width: 640.0,
        height: 320.0,
        x_range: (0.0, traj.t_max),
        y_range: (0.0, if ymax > 0.0 { ymax } else { 1.0 }),
        log_y: false,
    };
    let mut body = String::new();
    panel.shade(&mut body, &output::env_intervals(traj, 1));
    let idx = output::thin(traj.len(), 4000);
    panel.line(&mut body, idx.iter().map(|&s| (traj.times[s], traj.state(s)[0])), "#1f4e9c", 1.0);
    panel.axes(&mut body, "t", "X");
    let title = format!("{name}: sample path, shaded when k = 2, lambda = {lambda:.4}");
    output::svg_document(760.0, 410.0, &title, &body)
}

fn two_species_svg(name: &str, trajs: &[Trajectory]) -> String {
    let t_max = trajs.first().map_or(1.0, |t| t.t_max);
    let mut body = String::new();
    for (i, label) in ["X1", "X2"].iter().enumerate() {
        let hi =
            trajs.iter().flat_map(|t| (0..t.len()).map(move |s| t.state(s)[i])).fold(1e-300, f64::max).log10().ceil();
        let panel = Panel {
            left: 70.0,
            top: 40.0 + 300.0 * i as f64,
            width: 640.0,
            height: 240.0,
            x_range: (0.0, t_max),
            y_range: (hi - 12.0, hi),
            log_y: true,
        };
        for tr in trajs {
            let idx = output::thin(tr.len(), 500);
            panel.line(&mut body, idx.iter().map(|&s| (tr.times[s], tr.state(s)[i])), "#1f4e9c", 0.25);
        }
        panel.axes(&mut body, "t", label);
    }
    output::svg_document(760.0, 650.0, &format!("{name}: {} sample paths", trajs.len()), &body)
}

/// Outcome of comparing one replayed output with the original.
#[derive(Debug, PartialEq)]
pub struct ReplayCheck {
    pub file: String,
    pub identical: Option<bool>,
}

/// Re-runs the command recorded in `manifest_path`, writing into `out`,
/// and compares each CSV with the original next to the manifest.
pub fn replay(manifest_path: &Path, out: &Path) -> Result<(RunResult, Vec<ReplayCheck>)> {
    let text = fs::read_to_string(manifest_path).with_context(|| format!("cannot read {}", manifest_path.display()))?;
    let manifest: RunManifest =
        serde_json::from_str(&text).with_context(|| format!("malformed manifest {}", manifest_path.display()))?;
    if manifest.version != env!("CARGO_PKG_VERSION") {
        eprintln!(
            "warning: manifest written by version {}, replaying with {}",
            manifest.version,
            env!("CARGO_PKG_VERSION")
        );
    }
    let original_dir = manifest_path.parent().unwrap_or(Path::new("."));
    if fs::canonicalize(original_dir).ok() == fs::canonicalize(out).ok() {
        bail!(PdmpError::InvalidConfig("replay output directory must differ from the original".into()));
    }
    let mut cmd = manifest.invocation.clone();
    cmd.common_mut().out = out.to_path_buf();
    let result = run(&cmd, Some(&manifest.model))?;
    let mut checks = Vec::new();
    for file in manifest.outputs.iter().filter(|f| f.ends_with(".csv")) {
        let identical = match (fs::read(original_dir.join(file)), fs::read(out.join(file))) {
            (Ok(a), Ok(b)) => Some(a == b),
            _ => None,
        };
        checks.push(ReplayCheck { file: file.clone(), identical });
    }
    Ok((result, checks))
}
