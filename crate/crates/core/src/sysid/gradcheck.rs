use super::Problem;
use crate::error::{Error, Result};

/// Relative error above which a gradient entry is flagged.
pub const GRADCHECK_TOL: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckRow {
    pub name: String,
    pub theta: f64,
    pub ad: f64,
    pub fd: f64,
    pub rel_err: f64,
    pub pass: bool,
}

/// Relative difference, zero when both are exactly zero.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Compares the tangent gradient with central differences at step
/// `h · max(1, |θ_i|)`.
pub fn gradient_check(problem: &Problem<'_>, theta: &[f64], h: f64) -> Result<Vec<GradCheckRow>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidConfig(format!("finite-difference step must be positive, got {h}")));
    }
    let (_, ad) = problem.loss_and_grad(theta)?;
    let mut rows = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        let step = h * theta[i].abs().max(1.0);
        let mut plus = theta.to_vec();
        let mut minus = theta.to_vec();
        plus[i] += step;
        minus[i] -= step;
        let fd = (problem.loss(&plus)? - problem.loss(&minus)?) / (2.0 * step);
        let rel_err = relative_error(ad[i], fd);
        rows.push(GradCheckRow { name: problem.targets[i].name().into(), theta: theta[i], ad: ad[i], fd, rel_err, pass: rel_err <= GRADCHECK_TOL });
    }
    Ok(rows)
}
