use crate::diffcore::DScalar;
use crate::error::{Error, Result};
use crate::sim::Trajectory;

/// Ground truth for the loss: joint positions for a subset of coordinates
/// and, optionally, object positions.
#[derive(Clone, Debug, PartialEq)]
pub struct SupervisionChannel {
    /// Coordinate indices of the simulated trajectory that are supervised.
    pub mask: Vec<usize>,
    /// Names matching `mask`.
    pub names: Vec<String>,
    /// `[frame][k]` target for coordinate `mask[k]`.
    pub joint_targets: Vec<Vec<f64>>,
    pub object_targets: Option<Vec<[f64; 3]>>,
    /// Weight of the object channel relative to the joint channel.
    pub object_weight: f64,
}

impl SupervisionChannel {
    /// Picks the named joints (all of them when `joints` is empty) from a
    /// ground-truth trajectory, mapping them to the simulator's coordinate
    /// order.
    pub fn from_trajectory(gt: &Trajectory<0>, sim_names: &[String], joints: &[String], object_weight: Option<f64>) -> Result<Self> {
        let selected: Vec<String> = if joints.is_empty() { sim_names.to_vec() } else { joints.to_vec() };
        if selected.is_empty() {
            return Err(Error::Loss("supervision mask is empty".into()));
        }
        let mut mask = Vec::with_capacity(selected.len());
        let mut columns = Vec::with_capacity(selected.len());
        for name in &selected {
            let sim_col = sim_names.iter().position(|n| n == name).ok_or_else(|| Error::Loss(format!("'{name}' is not a simulated coordinate")))?;
            let gt_col = gt.joint_column(name).ok_or_else(|| Error::Loss(format!("ground truth has no column '{name}'")))?;
            mask.push(sim_col);
            columns.push(gt_col);
        }
        let joint_targets = gt.joint_positions.iter().map(|row| columns.iter().map(|&c| row[c].v).collect()).collect();
        let object_targets = match object_weight {
            Some(w) => {
                if !(w >= 0.0 && w.is_finite()) {
                    return Err(Error::Loss(format!("object weight must be non-negative, got {w}")));
                }
                let o = gt.object_positions.as_ref().ok_or_else(|| Error::Loss("ground truth has no object columns".into()))?;
                Some(o.iter().map(|p| p.values()).collect())
            }
            None => None,
        };
        Ok(Self { mask, names: selected, joint_targets, object_targets, object_weight: object_weight.unwrap_or(0.0) })
    }

    pub fn frames(&self) -> usize {
        self.joint_targets.len()
    }
}

fn mean_sq_from_first<I: Iterator<Item = Vec<f64>>>(rows: I) -> f64 {
    let mut first: Option<Vec<f64>> = None;
    let (mut sum, mut count) = (0.0, 0usize);
    for r in rows {
        let f = first.get_or_insert_with(|| r.clone());
        for (a, b) in r.iter().zip(f.iter()) {
            sum += (a - b) * (a - b);
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Mean squared joint error over all frames and supervised coordinates.
/// The object channel is scaled by the ratio of the ground truth's mean
/// squared joint and object excursions, so both channels are in rad².
pub fn loss_mse<const P: usize>(sim: &Trajectory<P>, gt: &SupervisionChannel) -> Result<DScalar<P>> {
    if gt.mask.is_empty() {
        return Err(Error::Loss("supervision mask is empty".into()));
    }
    if sim.len() != gt.frames() {
        return Err(Error::Loss(format!("simulated {} frames but ground truth has {}", sim.len(), gt.frames())));
    }
    let mut sum = DScalar::ZERO;
    for (row, target) in sim.joint_positions.iter().zip(&gt.joint_targets) {
        for (&c, &t) in gt.mask.iter().zip(target) {
            let q = *row.get(c).ok_or(Error::Dimension { what: "trajectory columns", expected: c + 1, got: row.len() })?;
            sum += (q - t).square();
        }
    }
    let joint = sum / (gt.frames() * gt.mask.len()) as f64;
    let Some(targets) = gt.object_targets.as_ref().filter(|_| gt.object_weight > 0.0) else {
        return Ok(joint);
    };
    let positions = sim.object_positions.as_ref().ok_or_else(|| Error::Loss("simulation has no object positions".into()))?;
    let mut sum = DScalar::ZERO;
    for (p, t) in positions.iter().zip(targets) {
        for k in 0..3 {
            sum += (p[k] - t[k]).square();
        }
    }
    let object = sum / (3 * gt.frames()) as f64;
    let sq = mean_sq_from_first(gt.joint_targets.iter().cloned());
    let so = mean_sq_from_first(targets.iter().map(|t| t.to_vec()));
    let scale = if sq > 0.0 && so > 0.0 { sq / so } else { 1.0 };
    let w = gt.object_weight;
    Ok((joint + object * (w * scale)) / (1.0 + w))
}
