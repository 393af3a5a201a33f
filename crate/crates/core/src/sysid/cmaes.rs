use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::adam::{CalibrationResult, HistoryEntry, RestartResult, RestartStatus};
use super::{ParamSpec, Problem};
use crate::error::{Error, Result};

const MAX_RESAMPLES: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct CmaesConfig {
    /// Maximum number of loss evaluations.
    pub budget: usize,
    /// Initial step size in log θ.
    pub sigma0: f64,
    pub loss_tol: f64,
    pub rng_seed: u64,
}

impl Default for CmaesConfig {
    fn default() -> Self {
        Self { budget: 2000, sigma0: 1.0, loss_tol: 1e-8, rng_seed: 0 }
    }
}

/// Population size for `n` parameters.
pub fn population(n: usize) -> usize {
    4 + (3.0 * (n as f64).ln()).floor() as usize
}

/// (μ/μ_w, λ)-CMA-ES in log θ started from the lowest-loss seed. Every
/// seed evaluation counts against the budget. Out-of-bounds samples are
/// redrawn; a sample that keeps falling outside is clamped.
pub fn calibrate_cmaes(problem: &Problem<'_>, spec: &ParamSpec, cfg: &CmaesConfig) -> Result<CalibrationResult> {
    spec.validate()?;
    if spec.targets() != problem.targets {
        return Err(Error::InvalidConfig("parameter spec does not match the problem's parameters".into()));
    }
    let n = spec.entries.len();
    let lambda = population(n);
    if cfg.budget < 2 * lambda {
        return Err(Error::InvalidConfig(format!("budget {} is below two generations ({})", cfg.budget, 2 * lambda)));
    }
    if !(cfg.sigma0 > 0.0) {
        return Err(Error::InvalidConfig("sigma0 must be positive".into()));
    }
    let started = Instant::now();
    let bounds = spec.log_bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);

    let mu = lambda / 2;
    let raw: Vec<f64> = (1..=mu).map(|i| (mu as f64 + 0.5).ln() - (i as f64).ln()).collect();
    let total: f64 = raw.iter().sum();
    let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let mu_eff = 1.0 / w.iter().map(|x| x * x).sum::<f64>();
    let nf = n as f64;
    let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
    let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
    let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
    let c_1 = 2.0 / ((nf + 1.3).powi(2) + mu_eff);
    let c_mu = (1.0 - c_1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff));
    let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));

    let mut sigma = cfg.sigma0;
    let mut cov = DMatrix::<f64>::identity(n, n);
    let mut p_sigma = DVector::<f64>::zeros(n);
    let mut p_c = DVector::<f64>::zeros(n);

    let mut history: Vec<HistoryEntry> = Vec::new();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut evaluate = |u: &DVector<f64>, history: &mut Vec<HistoryEntry>| -> Result<f64> {
        let theta: Vec<f64> = u.iter().map(|x| x.exp()).collect();
        let loss = match problem.loss(&theta) {
            Ok(l) if l.is_finite() => l,
            Ok(_) => f64::INFINITY,
            Err(e) if e.is_divergence() => f64::INFINITY,
            Err(e) => return Err(e),
        };
        if best.as_ref().is_none_or(|(b, _)| loss < *b) {
            best = Some((loss, theta.clone()));
        }
        history.push(HistoryEntry { iteration: history.len() + 1, loss, theta, grad: Vec::new() });
        Ok(loss)
    };

    let mut status = RestartStatus::Budget;
    let mut start: Option<(f64, Vec<f64>)> = None;
    for i in 0..spec.restarts().min(cfg.budget - lambda) {
        let seed = spec.seed(i);
        let loss = evaluate(&DVector::from_iterator(n, seed.iter().map(|s| s.ln())), &mut history)?;
        if start.as_ref().is_none_or(|(b, _)| loss < *b) {
            start = Some((loss, seed));
        }
    }
    let (start_loss, seed) = start.unwrap_or_else(|| (f64::INFINITY, spec.seed(0)));
    if start_loss < cfg.loss_tol {
        status = RestartStatus::LossTolerance;
    }
    let mut mean = DVector::from_iterator(n, seed.iter().map(|s| s.ln()));
    let mut generation = 0usize;
    while status == RestartStatus::Budget && history.len() + lambda <= cfg.budget {
        generation += 1;
        let eig = SymmetricEigen::new(cov.clone());
        let d = eig.eigenvalues.map(|x| x.max(0.0).sqrt());
        let b = eig.eigenvectors;
        let bd = &b * DMatrix::from_diagonal(&d);
        let mut samples: Vec<(f64, DVector<f64>, DVector<f64>)> = Vec::with_capacity(lambda);
        for _ in 0..lambda {
            let mut y = DVector::zeros(n);
            let mut x = DVector::zeros(n);
            for attempt in 0..MAX_RESAMPLES {
                let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
                y = &bd * z;
                x = &mean + &y * sigma;
                let inside = x.iter().zip(&bounds).all(|(v, (lo, hi))| *v >= *lo && *v <= *hi);
                if inside {
                    break;
                }
                if attempt + 1 == MAX_RESAMPLES {
                    for (k, (lo, hi)) in bounds.iter().enumerate() {
                        x[k] = x[k].clamp(*lo, *hi);
                    }
                    y = (&x - &mean) / sigma;
                }
            }
            let loss = evaluate(&x, &mut history)?;
            samples.push((loss, x, y));
        }
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        if samples[0].0 < cfg.loss_tol {
            status = RestartStatus::LossTolerance;
        }

        let old_mean = mean.clone();
        let mut y_w = DVector::zeros(n);
        for (wi, s) in w.iter().zip(&samples) {
            y_w += &s.2 * *wi;
        }
        mean = &old_mean + &y_w * sigma;

        // C^{-1/2} y_w
        let inv_sqrt = &b * DMatrix::from_diagonal(&d.map(|x| if x > 0.0 { 1.0 / x } else { 0.0 })) * b.transpose();
        p_sigma = &p_sigma * (1.0 - c_sigma) + (&inv_sqrt * &y_w) * (c_sigma * (2.0 - c_sigma) * mu_eff).sqrt();
        let ps_norm = p_sigma.norm();
        let h_sigma = ps_norm / (1.0 - (1.0 - c_sigma).powi(2 * generation as i32)).sqrt() / chi_n < 1.4 + 2.0 / (nf + 1.0);
        let hs = if h_sigma { 1.0 } else { 0.0 };
        p_c = &p_c * (1.0 - c_c) + &y_w * (hs * (c_c * (2.0 - c_c) * mu_eff).sqrt());
        let mut rank_mu = DMatrix::zeros(n, n);
        for (wi, s) in w.iter().zip(&samples) {
            rank_mu += &s.2 * s.2.transpose() * *wi;
        }
        let delta_h = (1.0 - hs) * c_c * (2.0 - c_c);
        cov = &cov * (1.0 - c_1 - c_mu + c_1 * delta_h) + &p_c * p_c.transpose() * c_1 + rank_mu * c_mu;
        cov = (&cov + cov.transpose()) * 0.5;
        sigma *= ((c_sigma / d_sigma) * (ps_norm / chi_n - 1.0)).exp();
        if !sigma.is_finite() || sigma < 1e-14 {
            status = RestartStatus::StepTolerance;
        }
    }
    let (loss, theta) = best.unwrap_or((f64::INFINITY, seed.clone()));
    let status = if loss.is_finite() { status } else { RestartStatus::Failed("every evaluation diverged".into()) };
    let restart = RestartResult { seed, theta, loss, evaluations: history.len(), status, history };
    CalibrationResult::select("cmaes", problem, vec![restart], started)
}
