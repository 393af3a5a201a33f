//! Parameter identification: trajectory loss, multi-start Adam, a CMA-ES
//! baseline and finite-difference gradient checks.

mod adam;
mod cmaes;
mod gradcheck;
mod loss;

pub use adam::{calibrate, calibrate_single, CalibrationResult, HistoryEntry, RestartResult, RestartStatus};
pub use cmaes::{calibrate_cmaes, population, CmaesConfig};
pub use gradcheck::{gradient_check, GradCheckRow, GRADCHECK_TOL};
pub use loss::{loss_mse, SupervisionChannel};

use crate::diffcore::{activate_params, extract_grad, DScalar, MAX_PARAMS};
use crate::error::{Error, Result};
use crate::sim::{simulate, ParamTarget, Scenario};

/// Seeds are clamped to at least this before log reparameterization.
pub const POSITIVE_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct ParamEntry {
    pub target: ParamTarget,
    pub lower: f64,
    pub upper: f64,
    /// One seed per restart.
    pub seeds: Vec<f64>,
}

/// `n` seeds log-spaced over two decades centered on `pivot`.
pub fn log_spaced_seeds(pivot: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![pivot],
        _ => (0..n).map(|i| pivot * 10f64.powf(-1.0 + 2.0 * i as f64 / (n - 1) as f64)).collect(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamSpec {
    pub entries: Vec<ParamEntry>,
}

impl ParamSpec {
    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::EmptyParams);
        }
        if self.entries.len() > MAX_PARAMS {
            return Err(Error::TooManyParams { count: self.entries.len(), max: MAX_PARAMS });
        }
        for (i, e) in self.entries.iter().enumerate() {
            let bad = |reason: String| Err(Error::InvalidConfig(format!("parameter '{}': {reason}", e.target)));
            if self.entries[..i].iter().any(|o| o.target == e.target) {
                return bad("listed twice".into());
            }
            if !(e.lower.is_finite() && e.upper.is_finite() && e.lower < e.upper) {
                return bad(format!("bounds [{}, {}] must be finite with lower < upper", e.lower, e.upper));
            }
            if e.lower < 0.0 {
                return bad("lower bound must be non-negative".into());
            }
            if e.seeds.is_empty() || e.seeds.len() != self.entries[0].seeds.len() {
                return bad("every parameter needs the same, non-zero number of seeds".into());
            }
            if !e.seeds.iter().all(|s| s.is_finite()) {
                return bad("non-finite seed".into());
            }
        }
        Ok(())
    }

    pub fn targets(&self) -> Vec<ParamTarget> {
        self.entries.iter().map(|e| e.target).collect()
    }

    pub fn restarts(&self) -> usize {
        self.entries.first().map_or(0, |e| e.seeds.len())
    }

    /// Seed vector of restart `i`, clamped into the bounds.
    pub fn seed(&self, i: usize) -> Vec<f64> {
        self.entries.iter().map(|e| self.clamp_one(e, e.seeds[i])).collect()
    }

    fn clamp_one(&self, e: &ParamEntry, v: f64) -> f64 {
        v.max(e.lower).max(POSITIVE_FLOOR).min(e.upper)
    }

    pub fn clamp(&self, theta: &[f64]) -> Vec<f64> {
        self.entries.iter().zip(theta).map(|(e, &v)| self.clamp_one(e, v)).collect()
    }

    /// Bounds in log space.
    pub fn log_bounds(&self) -> Vec<(f64, f64)> {
        self.entries.iter().map(|e| (e.lower.max(POSITIVE_FLOOR).ln(), e.upper.ln())).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimConfig {
    /// Initial learning rate; a step size in log θ when `log_space` is set.
    pub lr0: f64,
    pub iterations: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Final learning rate as a fraction of `lr0`.
    pub final_lr_ratio: f64,
    /// Stop once the loss drops below this (rad²).
    pub loss_tol: f64,
    /// Stop after `patience` consecutive relative steps below this.
    pub step_tol: f64,
    pub patience: usize,
    pub log_space: bool,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            lr0: 0.2,
            iterations: 100,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            final_lr_ratio: 1e-2,
            loss_tol: 1e-8,
            step_tol: 1e-5,
            patience: 5,
            log_space: true,
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("optimizer: {m}")));
        if !(self.lr0 > 0.0 && self.lr0.is_finite()) {
            return bad("lr0 must be positive");
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1");
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return bad("betas must be in [0, 1)");
        }
        if !(self.eps > 0.0) || !(self.final_lr_ratio > 0.0 && self.final_lr_ratio <= 1.0) {
            return bad("eps and final_lr_ratio must be positive");
        }
        if !(self.loss_tol >= 0.0) || !(self.step_tol >= 0.0) {
            return bad("tolerances must be non-negative");
        }
        Ok(())
    }

    /// Cosine-annealed learning rate at iteration `k` of `iterations`.
    pub fn learning_rate(&self, k: usize) -> f64 {
        let lo = self.lr0 * self.final_lr_ratio;
        let frac = if self.iterations > 1 { k as f64 / (self.iterations - 1) as f64 } else { 1.0 };
        lo + 0.5 * (self.lr0 - lo) * (1.0 + (std::f64::consts::PI * frac.min(1.0)).cos())
    }
}

/// A scenario, its ground truth and the parameters being identified.
#[derive(Clone, Copy, Debug)]
pub struct Problem<'a> {
    pub scenario: &'a Scenario,
    pub supervision: &'a SupervisionChannel,
    pub targets: &'a [ParamTarget],
}

impl<'a> Problem<'a> {
    pub fn new(scenario: &'a Scenario, supervision: &'a SupervisionChannel, targets: &'a [ParamTarget]) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::EmptyParams);
        }
        for t in targets {
            scenario.param_value(*t)?;
        }
        Ok(Self { scenario, supervision, targets })
    }

    fn loss_p<const P: usize>(&self, theta: &[DScalar<P>]) -> Result<DScalar<P>> {
        let bind: Vec<(ParamTarget, DScalar<P>)> = self.targets.iter().copied().zip(theta.iter().copied()).collect();
        let traj = simulate(self.scenario, &bind)?;
        loss_mse(&traj, self.supervision)
    }

    /// Loss without tangents.
    pub fn loss(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.targets.len() {
            return Err(Error::ParamCountMismatch { expected: self.targets.len(), got: theta.len() });
        }
        let t: Vec<DScalar<0>> = theta.iter().map(|&v| DScalar::constant(v)).collect();
        Ok(self.loss_p(&t)?.v)
    }

    /// Loss and its gradient with respect to θ.
    pub fn loss_and_grad(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        if theta.len() != self.targets.len() {
            return Err(Error::ParamCountMismatch { expected: self.targets.len(), got: theta.len() });
        }
        fn run<const P: usize>(p: &Problem<'_>, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
            let l = p.loss_p(&activate_params::<P>(theta)?)?;
            Ok((l.v, extract_grad(&l)))
        }
        match theta.len() {
            1 => run::<1>(self, theta),
            2 => run::<2>(self, theta),
            3 => run::<3>(self, theta),
            4 => run::<4>(self, theta),
            5 => run::<5>(self, theta),
            6 => run::<6>(self, theta),
            7 => run::<7>(self, theta),
            8 => run::<8>(self, theta),
            0 => Err(Error::EmptyParams),
            n => Err(Error::TooManyParams { count: n, max: MAX_PARAMS }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_span_two_decades() {
        let s = log_spaced_seeds(0.02, 5);
        assert_eq!(s.len(), 5);
        assert!((s[0] - 0.002).abs() < 1e-15 && (s[4] - 0.2).abs() < 1e-15);
        assert!((s[2] - 0.02).abs() < 1e-15);
    }

    #[test]
    fn cosine_schedule_endpoints() {
        let c = OptimConfig { lr0: 0.1, iterations: 11, ..OptimConfig::default() };
        assert!((c.learning_rate(0) - 0.1).abs() < 1e-15);
        assert!((c.learning_rate(10) - 0.001).abs() < 1e-15);
        assert!((c.learning_rate(5) - 0.0505).abs() < 1e-15);
    }

    #[test]
    fn spec_validation() {
        let e = |lower, upper| ParamEntry { target: ParamTarget::Mass, lower, upper, seeds: vec![0.01] };
        assert!(ParamSpec { entries: vec![e(0.0, 1.0)] }.validate().is_ok());
        assert!(ParamSpec { entries: vec![e(1.0, 1.0)] }.validate().is_err());
        assert!(ParamSpec { entries: vec![e(-1.0, 1.0)] }.validate().is_err());
        assert!(ParamSpec { entries: vec![] }.validate().is_err());
        let zero_seed = ParamSpec { entries: vec![ParamEntry { seeds: vec![0.0], ..e(0.0, 1.0) }] };
        assert_eq!(zero_seed.seed(0), vec![POSITIVE_FLOOR]);
    }
}
