//! The `propsim` verbs. Each returns an [`Outcome`] or an error carrying the
//! exit code.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use propsim_core::sim::{ParamTarget, Scenario, Simulator, Trajectory};
use propsim_core::sysid::{
    calibrate, calibrate_cmaes, calibrate_single, gradient_check, CalibrationResult, GradCheckRow, ParamSpec, Problem,
    SupervisionChannel,
};
use propsim_core::Error;

use crate::formats::{read_trajectory, resample, write_calibration, write_compare_csv, write_trajectory, CompareRow, RunConfig, ScenarioFile, Strictness};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_DIVERGED: i32 = 2;
pub const EXIT_ALL_RESTARTS_DIVERGED: i32 = 3;
pub const EXIT_GRADCHECK: i32 = 4;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "PROPSIM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "propsim", version, about = "Differentiable robot and object simulation with proprioceptive parameter identification")]
pub struct Cli {
    /// Scenario file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (simulate, compare) or directory (calibrate, demo).
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Seed of the CMA-ES sampler.
    #[arg(long, global = true, default_value_t = 0)]
    pub rng_seed: u64,
    /// Reject unknown keys in JSON files instead of warning.
    #[arg(long, global = true)]
    pub strict: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Adam,
    Cmaes,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the scenario and write the trajectory CSV.
    Simulate {
        /// Parameter values as `name=value`, or bare values in the order of
        /// the scenario's `params`.
        #[arg(long, value_delimiter = ',')]
        theta: Vec<String>,
    },
    /// Identify the scenario's parameters from a ground-truth trajectory.
    Calibrate {
        /// Ground-truth CSV; defaults to `<scenario>_gt.csv` next to the
        /// scenario file.
        #[arg(long)]
        gt: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Method::Adam)]
        method: Method,
        /// Loss evaluations for CMA-ES.
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Compare tangent gradients with central finite differences.
    Gradcheck {
        #[arg(long, value_delimiter = ',', required = true)]
        theta: Vec<String>,
        /// Relative finite-difference step.
        #[arg(long, default_value_t = 1e-6)]
        h: f64,
        /// Ground truth; simulated at the scenario's own values when absent.
        #[arg(long)]
        gt: Option<PathBuf>,
        /// Truncate the horizon, s.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Loss against evaluations for Adam and CMA-ES from the same seed.
    Compare {
        #[arg(long)]
        gt: Option<PathBuf>,
        /// Evaluation budget for each method.
        #[arg(long, default_value_t = 2000)]
        budget: usize,
        /// Loss counted as converged; defaults to the scenario's loss
        /// tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Common starting point as `name=value`; defaults to each
        /// parameter's first seed.
        #[arg(long, value_delimiter = ',')]
        start: Vec<String>,
    },
    /// Write the demo robot, scenarios and ground-truth trajectories.
    Demo,
}

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Usage(String),
    GradCheck(Vec<GradCheckRow>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::AllRestartsDiverged(_)) => EXIT_ALL_RESTARTS_DIVERGED,
            CliError::Core(e) if e.is_divergence() => EXIT_DIVERGED,
            CliError::Core(_) | CliError::Usage(_) => EXIT_INPUT,
            CliError::GradCheck(_) => EXIT_GRADCHECK,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::GradCheck(rows) => {
                let bad: Vec<&str> = rows.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
                write!(f, "gradient check failed for {}", bad.join(", "))
            }
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

/// What a successful command produced: summary lines for standard output
/// and the files written.
#[derive(Debug, Default)]
pub struct Outcome {
    pub lines: Vec<String>,
    pub written: Vec<PathBuf>,
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let strictness = if cli.strict { Strictness::Strict } else { Strictness::Lenient };
    if let Command::Demo = cli.command {
        let dir = cli.output.clone().unwrap_or_else(|| PathBuf::from("demo"));
        let written = crate::demo::write_demo(&dir)?;
        return Ok(Outcome { lines: vec![format!("wrote {} files to {}", written.len(), dir.display())], written });
    }
    let config = cli.config.as_deref().ok_or_else(|| CliError::Usage("--config <scenario file> is required".into()))?;
    let run = ScenarioFile::load(config, strictness)?;
    match &cli.command {
        Command::Simulate { theta } => simulate_cmd(config, run, theta, cli.output.as_deref()),
        Command::Calibrate { gt, method, budget } => {
            let gt = gt.clone().unwrap_or_else(|| default_gt(config));
            calibrate_cmd(run, &gt, *method, *budget, cli.rng_seed, cli.output.as_deref())
        }
        Command::Gradcheck { theta, h, gt, duration } => gradcheck_cmd(run, theta, *h, gt.as_deref(), *duration),
        Command::Compare { gt, budget, tol, start } => {
            let gt = gt.clone().unwrap_or_else(|| default_gt(config));
            compare_cmd(config, run, &gt, *budget, *tol, start, cli.rng_seed, cli.output.as_deref())
        }
        Command::Demo => unreachable!("handled above"),
    }
}

/// `<dir>/<stem>_gt.csv` for scenario `<dir>/<stem>.json`.
pub fn default_gt(config: &Path) -> PathBuf {
    let stem = config.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    config.with_file_name(format!("{stem}_gt.csv"))
}

fn default_output(config: &Path, suffix: &str) -> PathBuf {
    let stem = config.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    PathBuf::from(format!("{stem}{suffix}"))
}

/// Resolves `--theta` items against the scenario's parameters.
pub fn parse_theta(items: &[String], spec: Option<&ParamSpec>) -> Result<Vec<(ParamTarget, f64)>, CliError> {
    let order: Vec<ParamTarget> = spec.map(|s| s.targets()).unwrap_or_default();
    let mut out: Vec<(ParamTarget, f64)> = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let (target, value) = match item.split_once('=') {
            Some((name, value)) => (name.trim().parse::<ParamTarget>()?, value),
            None => {
                let target = *order.get(i).ok_or_else(|| {
                    CliError::Usage(format!("bare --theta value '{item}' has no matching entry in the scenario's params; use name=value"))
                })?;
                (target, item.as_str())
            }
        };
        let value: f64 = value.trim().parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| CliError::Usage(format!("invalid --theta value '{item}'")))?;
        if out.iter().any(|(t, _)| *t == target) {
            return Err(CliError::Usage(format!("parameter '{target}' given twice")));
        }
        out.push((target, value));
    }
    Ok(out)
}

fn apply_theta(scenario: &mut Scenario, theta: &[(ParamTarget, f64)]) -> Result<(), CliError> {
    for &(target, value) in theta {
        scenario.set_param(target, value)?;
    }
    Ok(())
}

fn simulate_cmd(config: &Path, mut run: RunConfig, theta: &[String], output: Option<&Path>) -> Result<Outcome, CliError> {
    let theta = parse_theta(theta, run.spec.as_ref())?;
    apply_theta(&mut run.scenario, &theta)?;
    let sim = Simulator::<0>::new(&run.scenario, &[])?;
    let start = sim.energy(&sim.initial_state())?;
    let (traj, last) = sim.run_with_final()?;
    let end = sim.energy(&last)?;
    let path = output.map(Path::to_path_buf).unwrap_or_else(|| default_output(config, "_sim.csv"));
    write_trajectory(&path, &traj)?;
    let drift = end.total() - start.total();
    let line = format!(
        "simulated {} frames ({} s at {} fps, {} substeps), energy change {:+.6e} J; wrote {}",
        traj.len(),
        run.scenario.config.duration,
        run.scenario.config.frame_rate,
        run.scenario.config.substeps,
        drift,
        path.display()
    );
    Ok(Outcome { lines: vec![line], written: vec![path] })
}

/// Reads a ground-truth CSV, resampling onto the scenario's frame grid and
/// trimming extra rows.
pub fn load_ground_truth(path: &Path, scenario: &Scenario) -> Result<Trajectory<0>, Error> {
    let raw = read_trajectory(path)?;
    let rate = scenario.config.frame_rate;
    let (mut gt, changed) = resample(&raw, rate);
    if changed {
        log::info!("{}: resampled {} rows onto the {rate} Hz frame grid ({} rows)", path.display(), raw.len(), gt.len());
    }
    let needed = scenario.config.frames() + 1;
    if gt.len() < needed {
        return Err(Error::Format {
            path: path.to_path_buf(),
            field: "rows".into(),
            reason: format!("{} samples cover less than the simulated {needed} frames", gt.len()),
        });
    }
    if gt.len() > needed {
        log::info!("{}: using the first {needed} of {} samples", path.display(), gt.len());
        gt.times.truncate(needed);
        gt.joint_positions.truncate(needed);
        gt.joint_velocities.truncate(needed.min(gt.joint_velocities.len()));
        if let Some(o) = gt.object_positions.as_mut() {
            o.truncate(needed);
        }
    }
    Ok(gt)
}

/// Supervision channel from a ground-truth trajectory according to the
/// scenario file's supervision block. Column problems name the file.
pub fn supervision(run: &RunConfig, gt: &Trajectory<0>, gt_path: &Path) -> Result<SupervisionChannel, Error> {
    let names = run.scenario.tree.coordinate_names();
    SupervisionChannel::from_trajectory(gt, &names, &run.supervision.joints, run.supervision.object_weight).map_err(|e| match e {
        Error::Loss(reason) => Error::Format { path: gt_path.to_path_buf(), field: "supervision".into(), reason },
        e => e,
    })
}

fn require_spec(run: &RunConfig) -> Result<ParamSpec, CliError> {
    run.spec.clone().ok_or_else(|| CliError::Usage(format!("scenario '{}' declares no params to identify", run.scenario.name)))
}

fn format_theta(result: &CalibrationResult) -> String {
    result.names.iter().zip(&result.units).zip(&result.theta).map(|((n, u), v)| format!("{n} = {v:.6e} {u}")).collect::<Vec<_>>().join(", ")
}

fn calibrate_cmd(run: RunConfig, gt_path: &Path, method: Method, budget: Option<usize>, rng_seed: u64, output: Option<&Path>) -> Result<Outcome, CliError> {
    let spec = require_spec(&run)?;
    let gt = load_ground_truth(gt_path, &run.scenario)?;
    let sup = supervision(&run, &gt, gt_path)?;
    let targets = spec.targets();
    let problem = Problem::new(&run.scenario, &sup, &targets)?;
    let result = match method {
        Method::Adam => {
            if budget.is_some() {
                log::warn!("--budget applies to CMA-ES only; Adam uses optim.iterations");
            }
            calibrate(&problem, &spec, &run.optim)?
        }
        Method::Cmaes => {
            let mut cfg = run.cmaes.clone();
            cfg.rng_seed = rng_seed;
            if let Some(b) = budget {
                cfg.budget = b;
            }
            calibrate_cmaes(&problem, &spec, &cfg)?
        }
    };
    let dir = output.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("propsim_out"));
    let path = write_calibration(&dir, &result)?;
    let failed = result.restarts.iter().filter(|r| r.status.is_failed()).count();
    let mut lines = vec![format!(
        "{}: {}; loss {:.3e}; restart {} of {} selected ({} failed); {} evaluations in {:.2} s",
        result.method,
        format_theta(&result),
        result.loss,
        result.selected,
        result.restarts.len(),
        failed,
        result.evaluations,
        result.wall_time
    )];
    for (i, r) in result.restarts.iter().enumerate() {
        if let propsim_core::sysid::RestartStatus::Failed(m) = &r.status {
            lines.push(format!("restart {i} failed: {m}"));
        }
    }
    lines.push(format!("wrote {}", path.display()));
    Ok(Outcome { lines, written: vec![path] })
}

/// Gradient check on the scenario, optionally truncated to `duration`.
/// Without `gt_path` the ground truth is simulated at the scenario's own
/// parameter values.
pub fn gradcheck_rows(mut run: RunConfig, theta: &[(ParamTarget, f64)], h: f64, gt_path: Option<&Path>, duration: Option<f64>) -> Result<Vec<GradCheckRow>, CliError> {
    if let Some(d) = duration {
        if !(d > 0.0 && d.is_finite()) {
            return Err(CliError::Usage(format!("--duration must be positive, got {d}")));
        }
        run.scenario.config.duration = d.min(run.scenario.config.duration);
    }
    let (gt, label) = match gt_path {
        Some(p) => (load_ground_truth(p, &run.scenario)?, p.to_path_buf()),
        None => (propsim_core::sim::simulate::<0>(&run.scenario, &[])?, PathBuf::from("<simulated ground truth>")),
    };
    let sup = supervision(&run, &gt, &label)?;
    let targets: Vec<ParamTarget> = theta.iter().map(|(t, _)| *t).collect();
    let values: Vec<f64> = theta.iter().map(|(_, v)| *v).collect();
    let problem = Problem::new(&run.scenario, &sup, &targets)?;
    Ok(gradient_check(&problem, &values, h)?)
}

fn gradcheck_cmd(run: RunConfig, theta: &[String], h: f64, gt: Option<&Path>, duration: Option<f64>) -> Result<Outcome, CliError> {
    let theta = parse_theta(theta, run.spec.as_ref())?;
    let rows = gradcheck_rows(run, &theta, h, gt, duration)?;
    let mut lines = vec![format!("{:<12} {:>14} {:>14} {:>14} {:>10}  result", "param", "theta", "tangent", "central diff", "rel err")];
    for r in &rows {
        lines.push(format!(
            "{:<12} {:>14.6e} {:>14.6e} {:>14.6e} {:>10.2e}  {}",
            r.name,
            r.theta,
            r.ad,
            r.fd,
            r.rel_err,
            if r.pass { "PASS" } else { "FAIL" }
        ));
    }
    if rows.iter().all(|r| r.pass) {
        Ok(Outcome { lines, written: Vec::new() })
    } else {
        print_lines(&lines);
        Err(CliError::GradCheck(rows))
    }
}

/// Both runs of a comparison and the evaluation at which each first got
/// below the tolerance.
#[derive(Debug)]
pub struct Comparison {
    pub gradient: CalibrationResult,
    pub cmaes: CalibrationResult,
    pub tol: f64,
    pub gradient_to_tol: Option<usize>,
    pub cmaes_to_tol: Option<usize>,
    pub rows: Vec<CompareRow>,
}

fn best_so_far(result: &CalibrationResult) -> Vec<f64> {
    let mut best = f64::INFINITY;
    result.restarts[0]
        .history
        .iter()
        .map(|h| {
            best = best.min(h.loss);
            best
        })
        .collect()
}

/// Adam (one loss+gradient pass per evaluation) and CMA-ES from a common
/// start, each limited to `budget` evaluations. `start` overrides the first
/// seed of the named parameters.
pub fn compare(run: &RunConfig, sup: &SupervisionChannel, budget: usize, tol: f64, start: &[(ParamTarget, f64)], rng_seed: u64) -> Result<Comparison, CliError> {
    if budget == 0 {
        return Err(CliError::Usage("--budget must be at least 1".into()));
    }
    if !(tol > 0.0) {
        return Err(CliError::Usage(format!("tolerance must be positive, got {tol}")));
    }
    let mut spec = require_spec(run)?;
    for &(target, value) in start {
        let entry = spec.entries.iter_mut().find(|e| e.target == target).ok_or_else(|| CliError::Usage(format!("'{target}' is not identified by this scenario")))?;
        entry.seeds = vec![value];
    }
    for e in &mut spec.entries {
        e.seeds.truncate(1);
    }
    spec.validate()?;
    let targets = spec.targets();
    let problem = Problem::new(&run.scenario, sup, &targets)?;
    let seed = spec.seed(0);
    let mut opt = run.optim.clone();
    opt.iterations = opt.iterations.min(budget);
    opt.loss_tol = tol;
    let started = std::time::Instant::now();
    let restart = calibrate_single(&problem, &spec, &opt, &seed)?;
    let gradient = CalibrationResult {
        method: "adam".into(),
        names: targets.iter().map(|t| t.name().to_string()).collect(),
        units: targets.iter().map(|t| t.unit().to_string()).collect(),
        theta: restart.theta.clone(),
        loss: restart.loss,
        selected: 0,
        evaluations: restart.evaluations,
        restarts: vec![restart],
        wall_time: started.elapsed().as_secs_f64(),
    };
    let mut cfg = run.cmaes.clone();
    cfg.budget = budget;
    cfg.loss_tol = tol;
    cfg.rng_seed = rng_seed;
    let cmaes = calibrate_cmaes(&problem, &spec, &cfg)?;

    let g = best_so_far(&gradient);
    let c = best_so_far(&cmaes);
    let to_tol = |v: &[f64]| v.iter().position(|&l| l < tol).map(|i| i + 1);
    let rows = (0..g.len().max(c.len()))
        .map(|i| CompareRow { evaluations: i + 1, gradient_loss: g.get(i).copied(), cmaes_loss: c.get(i).copied() })
        .collect();
    Ok(Comparison { gradient_to_tol: to_tol(&g), cmaes_to_tol: to_tol(&c), gradient, cmaes, tol, rows })
}

#[allow(clippy::too_many_arguments)]
fn compare_cmd(config: &Path, run: RunConfig, gt_path: &Path, budget: usize, tol: Option<f64>, start: &[String], rng_seed: u64, output: Option<&Path>) -> Result<Outcome, CliError> {
    let start = parse_theta(start, run.spec.as_ref())?;
    let gt = load_ground_truth(gt_path, &run.scenario)?;
    let sup = supervision(&run, &gt, gt_path)?;
    let tol = tol.unwrap_or(run.optim.loss_tol);
    let cmp = compare(&run, &sup, budget, tol, &start, rng_seed)?;
    let path = output.map(Path::to_path_buf).unwrap_or_else(|| default_output(config, "_compare.csv"));
    write_compare_csv(&path, &cmp.rows)?;
    let count = |n: Option<usize>| n.map(|n| n.to_string()).unwrap_or_else(|| "not reached".into());
    let lines = vec![
        format!("evaluations to loss < {:e}: adam {}, cmaes {}", cmp.tol, count(cmp.gradient_to_tol), count(cmp.cmaes_to_tol)),
        format!("adam: {}; loss {:.3e}", format_theta(&cmp.gradient), cmp.gradient.loss),
        format!("cmaes: {}; loss {:.3e}", format_theta(&cmp.cmaes), cmp.cmaes.loss),
        format!("wrote {}", path.display()),
    ];
    Ok(Outcome { lines, written: vec![path] })
}

/// Parses `args`, runs the command and returns the process exit code.
/// Help and version requests exit 0; every other argument error exits 1.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    match run(&cli) {
        Ok(outcome) => {
            print_lines(&outcome.lines);
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn print_lines(lines: &[String]) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    for l in lines {
        if writeln!(out, "{l}").is_err() {
            return;
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got '{value}'")))?;
    // A second call in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}
