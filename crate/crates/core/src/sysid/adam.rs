use std::time::Instant;

use rayon::prelude::*;

use super::{OptimConfig, ParamSpec, Problem};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct HistoryEntry {
    /// Iteration for gradient runs, evaluation count for CMA-ES.
    pub iteration: usize,
    pub loss: f64,
    pub theta: Vec<f64>,
    /// Empty for gradient-free runs.
    pub grad: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RestartStatus {
    LossTolerance,
    StepTolerance,
    MaxIterations,
    Budget,
    Failed(String),
}

impl RestartStatus {
    pub fn label(&self) -> &'static str {
        match self {
            Self::LossTolerance => "loss_tolerance",
            Self::StepTolerance => "step_tolerance",
            Self::MaxIterations => "max_iterations",
            Self::Budget => "budget",
            Self::Failed(_) => "failed",
        }
    }

    pub fn is_failed(&self) -> bool {
        matches!(self, Self::Failed(_))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RestartResult {
    pub seed: Vec<f64>,
    /// Best evaluated parameters.
    pub theta: Vec<f64>,
    /// Loss at `theta`; infinite for failed restarts.
    pub loss: f64,
    pub evaluations: usize,
    pub status: RestartStatus,
    pub history: Vec<HistoryEntry>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationResult {
    pub method: String,
    pub names: Vec<String>,
    pub units: Vec<String>,
    pub theta: Vec<f64>,
    pub loss: f64,
    pub selected: usize,
    pub restarts: Vec<RestartResult>,
    pub evaluations: usize,
    /// s
    pub wall_time: f64,
}

impl CalibrationResult {
    pub(crate) fn select(method: &str, problem: &Problem<'_>, restarts: Vec<RestartResult>, started: Instant) -> Result<Self> {
        let selected = restarts
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.status.is_failed() && r.loss.is_finite())
            .min_by(|(i, a), (j, b)| a.loss.total_cmp(&b.loss).then(i.cmp(j)))
            .map(|(i, _)| i)
            .ok_or(Error::AllRestartsDiverged(restarts.len()))?;
        Ok(Self {
            method: method.into(),
            names: problem.targets.iter().map(|t| t.name().to_string()).collect(),
            units: problem.targets.iter().map(|t| t.unit().to_string()).collect(),
            theta: restarts[selected].theta.clone(),
            loss: restarts[selected].loss,
            selected,
            evaluations: restarts.iter().map(|r| r.evaluations).sum(),
            restarts,
            wall_time: started.elapsed().as_secs_f64(),
        })
    }
}

/// Adam with cosine annealing from one seed. Divergent simulations end the
/// restart as failed; other errors are returned.
pub fn calibrate_single(problem: &Problem<'_>, spec: &ParamSpec, opt: &OptimConfig, seed: &[f64]) -> Result<RestartResult> {
    opt.validate()?;
    let n = seed.len();
    let bounds = spec.log_bounds();
    let lin_bounds: Vec<(f64, f64)> = spec.entries.iter().map(|e| (e.lower, e.upper)).collect();
    let mut theta = spec.clamp(seed);
    let mut m = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut history: Vec<HistoryEntry> = Vec::new();
    let mut small_steps = 0;
    let mut status = RestartStatus::MaxIterations;
    for k in 0..opt.iterations {
        let (loss, grad) = match problem.loss_and_grad(&theta) {
            Ok(r) if r.0.is_finite() && r.1.iter().all(|g| g.is_finite()) => r,
            Ok(_) => {
                status = RestartStatus::Failed(format!("non-finite loss or gradient at iteration {k}"));
                break;
            }
            Err(e) if e.is_divergence() => {
                status = RestartStatus::Failed(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        history.push(HistoryEntry { iteration: k, loss, theta: theta.clone(), grad: grad.clone() });
        if loss < opt.loss_tol {
            status = RestartStatus::LossTolerance;
            break;
        }
        if k + 1 == opt.iterations {
            break;
        }
        let lr = opt.learning_rate(k);
        let t = (k + 1) as i32;
        let mut rel_step = 0.0f64;
        for i in 0..n {
            // chain rule into log space: ∂L/∂ln θ = θ ∂L/∂θ
            let g = if opt.log_space { grad[i] * theta[i] } else { grad[i] };
            m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g;
            v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * g * g;
            let m_hat = m[i] / (1.0 - opt.beta1.powi(t));
            let v_hat = v[i] / (1.0 - opt.beta2.powi(t));
            let step = lr * m_hat / (v_hat.sqrt() + opt.eps);
            let next = if opt.log_space {
                let (lo, hi) = bounds[i];
                (theta[i].ln() - step).clamp(lo, hi).exp()
            } else {
                let (lo, hi) = lin_bounds[i];
                (theta[i] - step).clamp(lo, hi)
            };
            rel_step = rel_step.max((next - theta[i]).abs() / theta[i].abs().max(f64::MIN_POSITIVE));
            theta[i] = next;
        }
        small_steps = if rel_step < opt.step_tol { small_steps + 1 } else { 0 };
        if small_steps >= opt.patience {
            status = RestartStatus::StepTolerance;
            break;
        }
    }
    let best = history.iter().min_by(|a, b| a.loss.total_cmp(&b.loss));
    let (theta, loss) = match (&status, best) {
        (RestartStatus::Failed(_), _) | (_, None) => (theta, f64::INFINITY),
        (_, Some(b)) => (b.theta.clone(), b.loss),
    };
    Ok(RestartResult { seed: seed.to_vec(), theta, loss, evaluations: history.len(), status, history })
}

/// Multi-start Adam over every seed in `spec`, restarts in parallel. The
/// winner is the lowest final loss, ties broken by restart index.
pub fn calibrate(problem: &Problem<'_>, spec: &ParamSpec, opt: &OptimConfig) -> Result<CalibrationResult> {
    spec.validate()?;
    opt.validate()?;
    if spec.targets() != problem.targets {
        return Err(Error::InvalidConfig("parameter spec does not match the problem's parameters".into()));
    }
    let started = Instant::now();
    let restarts = (0..spec.restarts())
        .into_par_iter()
        .map(|i| {
            let seed: Vec<f64> = spec.entries.iter().map(|e| e.seeds[i]).collect();
            calibrate_single(problem, spec, opt, &seed)
        })
        .collect::<Result<Vec<_>>>()?;
    CalibrationResult::select("adam", problem, restarts, started)
}
