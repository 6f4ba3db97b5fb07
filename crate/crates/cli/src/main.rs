use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use diffbot::config::{ExperimentConfig, WorkspaceSection};
use diffbot::export::{self, write_atomic};
use diffbot::harness::{beta_sweep, monte_carlo};
use diffbot::pso::plan;
use diffbot::robot::Pose;
use diffbot::sim::{closed_loop_sim, ExperimentalPreset};
use diffbot::spline::SampledPath;
use diffbot::svg;
use diffbot::workspace::{load_workspace_file, Workspace};
use diffbot::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_NO_PATH: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "diffbot", version, about = "Spline path planning and tracking experiments for a differential-drive robot")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan one path and write it with its cost history.
    Plan {
        #[command(flatten)]
        common: Common,
        /// Override the penalty coefficient.
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Simulate the tracking controller on a planned path CSV.
    Track {
        #[command(flatten)]
        common: Common,
        /// Path CSV as written by `plan`.
        #[arg(long)]
        path: PathBuf,
        /// Override the reference sampling interval in s.
        #[arg(long)]
        control_dt: Option<f64>,
        /// Start pose `x,y,theta`; the robot approaches the path from there.
        #[arg(long, value_parser = parse_pose, allow_hyphen_values = true)]
        start: Option<Pose>,
    },
    /// Repeat planning over many seeds and summarise.
    Montecarlo {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Monte Carlo campaign per penalty coefficient.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated coefficients; defaults to the config's `[sweep] betas`.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        betas: Option<Vec<f64>>,
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Check a config file (and its workspace) without running anything.
    ValidateConfig { config: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Config values unchanged.
    Default,
    /// 30 s path, 1.5 s reference sampling, all obstacles of radius 0.05 m.
    Experimental,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Workspace file; overrides the config's workspace.
    #[arg(long)]
    workspace: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = "DIFFBOT_OUT_DIR", default_value = "out")]
    out: PathBuf,
    /// Swarm seed for `plan`, base seed for campaigns.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, value_enum, default_value = "default")]
    preset: Preset,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(e: impl std::fmt::Display) -> Self {
        Self { code: EXIT_CONFIG, message: e.to_string() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::NonFinite(_)) { EXIT_DIVERGED } else { EXIT_CONFIG };
        Self { code, message: e.to_string() }
    }
}

fn parse_pose(s: &str) -> Result<Pose, String> {
    let v: Vec<f64> = s.split(',').map(|p| p.trim().parse::<f64>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, theta] => Ok(Pose::new(x, y, theta)),
        _ => Err("expected x,y,theta".into()),
    }
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    tool_version: &'static str,
    /// Resolved configuration, also written next to the outputs as `config.toml`.
    config: ExperimentConfig,
    seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    inputs: Vec<String>,
    started_unix: f64,
    finished_unix: f64,
    outputs: Vec<String>,
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self, Failure> {
        std::fs::create_dir_all(dir).map_err(|e| Failure::config(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<(), Failure> {
        write_atomic(&self.dir.join(name), bytes.as_ref())?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn csv(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> diffbot::Result<()>) -> Result<(), Failure> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, buf)
    }

    fn finish(mut self, mut manifest: RunManifest) -> Result<(), Failure> {
        self.write("config.toml", manifest.config.to_toml())?;
        manifest.outputs = std::mem::take(&mut self.files);
        manifest.outputs.push("manifest.json".into());
        manifest.finished_unix = now();
        self.write("manifest.json", export::to_json(&manifest)?)
    }
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

fn load_config(common: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p).map_err(|e| Failure::config(format!("{}: {e}", p.display())))?,
        None => ExperimentConfig::default(),
    };
    if let Some(p) = &common.workspace {
        let ws = load_workspace_file(p).map_err(|e| Failure::config(format!("{}: {e}", p.display())))?;
        cfg.workspace = Some(inline(&ws));
        cfg.random = None;
    }
    if let Preset::Experimental = common.preset {
        let preset = ExperimentalPreset::default();
        cfg.spline = preset.spline(&cfg.spline);
        cfg.controller = preset.controller(&cfg.controller);
    }
    Ok(cfg)
}

fn inline(ws: &Workspace) -> WorkspaceSection {
    WorkspaceSection {
        name: ws.name.clone(),
        bounds: Some(ws.bounds),
        start: Some(ws.start),
        target: Some(ws.target),
        obstacles: ws.obstacles.clone(),
        ..Default::default()
    }
}

/// The single workspace of `plan`/`track`, pinned inline into the config snapshot.
fn single_workspace(cfg: &mut ExperimentConfig, seed: u64, preset: Preset) -> Result<Workspace, Failure> {
    let mut ws = cfg.resolve_workspace(seed)?;
    if let Preset::Experimental = preset {
        ws = ExperimentalPreset::default().workspace(&ws);
    }
    cfg.workspace = Some(inline(&ws));
    cfg.random = None;
    Ok(ws)
}

fn setup_jobs(jobs: Option<usize>) -> Result<(), Failure> {
    if let Some(n) = jobs {
        if n == 0 {
            return Err(Failure::config("--jobs must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(Failure::config)?;
    }
    Ok(())
}

fn manifest(command: &str, config: ExperimentConfig, seeds: Vec<u64>, inputs: Vec<String>, started: f64) -> RunManifest {
    RunManifest {
        command: command.into(),
        tool_version: env!("CARGO_PKG_VERSION"),
        config,
        seeds,
        inputs,
        started_unix: started,
        finished_unix: started,
        outputs: Vec::new(),
    }
}

fn cmd_plan(common: &Common, beta: Option<f64>) -> Result<(), Failure> {
    let started = now();
    let mut cfg = load_config(common)?;
    if let Some(s) = common.seed {
        cfg.pso.seed = s;
    }
    if let Some(b) = beta {
        cfg.cost.beta = b;
    }
    cfg.validate()?;
    let seed = cfg.pso.seed;
    let ws = single_workspace(&mut cfg, seed, common.preset)?;
    let res = plan(&ws, &cfg.spline, &cfg.cost, &cfg.pso)?;

    let mut out = Outputs::new(&common.out)?;
    out.csv("path.csv", |b| export::write_path_csv(&res.best_path, b))?;
    out.csv("history.csv", |b| export::write_history_csv(&res.best_cost_history, &res.mean_cost_history, b))?;
    out.write("plan.json", export::to_json(&res)?)?;
    out.write("path.svg", svg::path_svg(&ws, &res.best_path, Some(&res.best_polygon)))?;
    out.write("history.svg", svg::history_svg(&res.best_cost_history, &res.mean_cost_history))?;
    out.finish(manifest("plan", cfg, vec![seed], vec![], started))?;

    println!(
        "length {:.4} m, cost {:.4}, collision-free {}, converged at iteration {}",
        res.best_cost.length, res.best_cost.total, res.success, res.converged_at_iteration
    );
    if !res.success {
        return Err(Failure { code: EXIT_NO_PATH, message: "no collision-free path found".into() });
    }
    Ok(())
}

#[derive(Serialize)]
struct TrackSummary {
    planned_length: f64,
    distance_traveled: f64,
    final_position_error: f64,
    max_tracking_error: f64,
    collided: bool,
    control_dt: f64,
    samples: usize,
}

fn cmd_track(common: &Common, path_file: &Path, control_dt: Option<f64>, start: Option<Pose>) -> Result<(), Failure> {
    let started = now();
    let mut cfg = load_config(common)?;
    if let Some(h) = control_dt {
        cfg.controller.control_dt = h;
    }
    if start.is_some() {
        cfg.sim.initial_pose = start;
    }
    cfg.validate()?;
    let seed = common.seed.unwrap_or(cfg.pso.seed);
    let ws = single_workspace(&mut cfg, seed, common.preset)?;
    let file = std::fs::File::open(path_file).map_err(|e| Failure::config(format!("{}: {e}", path_file.display())))?;
    let path: SampledPath = export::read_path_csv(file).map_err(|e| Failure::config(format!("{}: {e}", path_file.display())))?;
    let sim = closed_loop_sim(&ws, &path, &cfg.controller, &cfg.robot, &cfg.sim)?;

    let summary = TrackSummary {
        planned_length: path.length,
        distance_traveled: sim.distance_traveled,
        final_position_error: sim.final_position_error,
        max_tracking_error: sim.max_tracking_error(),
        collided: sim.collided,
        control_dt: cfg.controller.control_dt,
        samples: sim.len(),
    };
    let mut out = Outputs::new(&common.out)?;
    out.csv("trace.csv", |b| export::write_trace_csv(&sim, b))?;
    out.csv("duty.csv", |b| export::write_duty_csv(&sim, b))?;
    out.write("track.json", export::to_json(&summary)?)?;
    out.write("tracking.svg", svg::tracking_svg(&ws, &sim))?;
    out.write("duty.svg", svg::duty_svg(&sim))?;
    out.finish(manifest("track", cfg, vec![], vec![path_file.display().to_string()], started))?;

    println!(
        "final error {:.4} m, travelled {:.4} m of {:.4} m planned, collided {}",
        summary.final_position_error, summary.distance_traveled, summary.planned_length, summary.collided
    );
    Ok(())
}

fn campaign_config(common: &Common, runs: Option<usize>) -> Result<ExperimentConfig, Failure> {
    let mut cfg = load_config(common)?;
    if let Some(s) = common.seed {
        cfg.montecarlo.base_seed = s;
    }
    if let Some(r) = runs {
        cfg.montecarlo.runs = r;
    }
    if let (Preset::Experimental, Some(_)) = (common.preset, &cfg.workspace) {
        let ws = ExperimentalPreset::default().workspace(&cfg.resolve_workspace(0)?);
        cfg.workspace = Some(inline(&ws));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn seeds(cfg: &ExperimentConfig) -> Vec<u64> {
    (0..cfg.montecarlo.runs).map(|i| diffbot::harness::run_seed(cfg.montecarlo.base_seed, i)).collect()
}

fn cmd_montecarlo(common: &Common, runs: Option<usize>) -> Result<(), Failure> {
    let started = now();
    let cfg = campaign_config(common, runs)?;
    let report = monte_carlo(&cfg.mc_config()?)?;
    let mut out = Outputs::new(&common.out)?;
    out.write("report.json", export::to_json(&report)?)?;
    out.csv("runs.csv", |b| export::write_runs_csv(&report, b))?;
    out.write("report.svg", svg::report_svg(&report))?;
    let s = seeds(&cfg);
    out.finish(manifest("montecarlo", cfg, s, vec![], started))?;
    println!(
        "SR {:.4}, avg length {}, SD {}, CPU {:.3} s, CT {:.3} s",
        report.success_rate,
        fmt_opt(report.avg_length),
        fmt_opt(report.length_sd),
        report.avg_cpu_time,
        report.avg_convergence_time
    );
    Ok(())
}

fn cmd_sweep(common: &Common, betas: Option<Vec<f64>>, runs: Option<usize>) -> Result<(), Failure> {
    let started = now();
    let mut cfg = campaign_config(common, runs)?;
    if let Some(b) = betas {
        cfg.sweep.betas = b;
    }
    if cfg.sweep.betas.is_empty() {
        return Err(Failure::config("at least one beta is required"));
    }
    cfg.validate()?;
    let rows = beta_sweep(&cfg.mc_config()?, &cfg.sweep.betas)?;
    let mut out = Outputs::new(&common.out)?;
    out.csv("sweep.csv", |b| export::write_sweep_csv(&rows, b))?;
    out.write("sweep.json", export::to_json(&rows)?)?;
    out.write("sweep.svg", svg::sweep_svg(&rows))?;
    let s = seeds(&cfg);
    out.finish(manifest("sweep", cfg, s, vec![], started))?;
    for r in &rows {
        println!("beta {}: SR {:.4}, avg length {}", r.beta, r.report.success_rate, fmt_opt(r.report.avg_length));
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |x| format!("{x:.4}"))
}

fn cmd_validate(path: &Path) -> Result<(), Failure> {
    let cfg = ExperimentConfig::load(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    if cfg.workspace.is_some() || cfg.random.is_some() {
        cfg.resolve_workspace(0)?;
    }
    println!("{}: ok", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Plan { common, beta } => {
            setup_jobs(common.jobs)?;
            cmd_plan(common, *beta)
        }
        Command::Track { common, path, control_dt, start } => {
            setup_jobs(common.jobs)?;
            cmd_track(common, path, *control_dt, *start)
        }
        Command::Montecarlo { common, runs } => {
            setup_jobs(common.jobs)?;
            cmd_montecarlo(common, *runs)
        }
        Command::Sweep { common, betas, runs } => {
            setup_jobs(common.jobs)?;
            cmd_sweep(common, betas.clone(), *runs)
        }
        Command::ValidateConfig { config } => cmd_validate(config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
