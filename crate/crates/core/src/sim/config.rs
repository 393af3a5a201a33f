use crate::articulated::KinematicTree;
use crate::error::{Error, Result};

/// Intervals are matched against frame start times with this slack, s.
const TIME_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    /// Hz
    pub frame_rate: f64,
    pub substeps: usize,
    /// m/s²
    pub gravity: [f64; 3],
    /// s
    pub duration: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { frame_rate: 60.0, substeps: 16, gravity: [0.0, 0.0, -9.81], duration: 0.6 }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.frame_rate > 0.0 && self.frame_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!("frame rate must be positive, got {}", self.frame_rate)));
        }
        if !(1..=256).contains(&self.substeps) {
            return Err(Error::InvalidConfig(format!("substeps must be in [1, 256], got {}", self.substeps)));
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidConfig(format!("duration must be non-negative, got {}", self.duration)));
        }
        if !self.gravity.iter().all(|g| g.is_finite()) {
            return Err(Error::InvalidConfig("gravity must be finite".into()));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        1.0 / (self.frame_rate * self.substeps as f64)
    }

    /// Number of frame intervals T; the trajectory has T + 1 samples.
    pub fn frames(&self) -> usize {
        (self.duration * self.frame_rate).round() as usize
    }
}

/// Constant torque (N·m) or force (N) on one joint over `[start, end)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TorqueEntry {
    pub joint: String,
    pub start: f64,
    pub end: f64,
    pub torque: f64,
}

impl TorqueEntry {
    pub fn new(joint: impl Into<String>, start: f64, end: f64, torque: f64) -> Self {
        Self { joint: joint.into(), start, end, torque }
    }

    /// Torque from a motor current command, `current · k_t`.
    pub fn from_current(joint: impl Into<String>, start: f64, end: f64, current_ma: f64, torque_constant: f64) -> Self {
        Self::new(joint, start, end, current_ma * 1e-3 * torque_constant)
    }
}

/// Piecewise-constant joint torques, held over each frame.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TorqueSchedule {
    pub entries: Vec<TorqueEntry>,
}

impl TorqueSchedule {
    pub fn new(entries: Vec<TorqueEntry>) -> Self {
        Self { entries }
    }

    pub fn validate(&self) -> Result<()> {
        for e in &self.entries {
            if !(e.start.is_finite() && e.end.is_finite() && e.torque.is_finite()) {
                return Err(Error::InvalidSchedule(format!("non-finite entry for joint '{}'", e.joint)));
            }
            if !(e.start < e.end) {
                return Err(Error::InvalidSchedule(format!("joint '{}': start {} is not before end {}", e.joint, e.start, e.end)));
            }
        }
        for (i, a) in self.entries.iter().enumerate() {
            for b in &self.entries[i + 1..] {
                if a.joint == b.joint && a.start < b.end && b.start < a.end {
                    return Err(Error::InvalidSchedule(format!("overlapping intervals on joint '{}'", a.joint)));
                }
            }
        }
        Ok(())
    }

    /// Maps every entry to its coordinate index in `tree`.
    pub fn resolve(&self, tree: &KinematicTree) -> Result<ResolvedSchedule> {
        self.validate()?;
        let names = tree.coordinate_names();
        let mut entries = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            let dof = names.iter().position(|n| *n == e.joint).ok_or_else(|| {
                let reason = match tree.joint_index(&e.joint) {
                    Some(j) if tree.locked().contains_key(&j) => "is locked",
                    Some(_) => "has no actuated coordinate",
                    None => "does not exist",
                };
                Error::InvalidSchedule(format!("joint '{}' {reason}", e.joint))
            })?;
            entries.push((dof, e.start, e.end, e.torque));
        }
        Ok(ResolvedSchedule { n_dof: tree.n_dof(), entries })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedSchedule {
    n_dof: usize,
    entries: Vec<(usize, f64, f64, f64)>,
}

impl ResolvedSchedule {
    /// Generalized forces held during the frame starting at `t`.
    pub fn at(&self, t: f64) -> Vec<f64> {
        let mut tau = vec![0.0; self.n_dof];
        for &(dof, start, end, torque) in &self.entries {
            if start - TIME_EPS <= t && t < end - TIME_EPS {
                tau[dof] += torque;
            }
        }
        tau
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::articulated::{Body, Joint, JointKind};
    use crate::diffcore::Transform;

    fn tree() -> KinematicTree {
        let bodies = vec![Body::massless("w"), Body::point_mass("a", 1.0, [0.0, 0.1, 0.0]), Body::point_mass("b", 1.0, [0.0; 3])];
        let joints = vec![
            Joint::new("hinge", JointKind::Revolute { axis: [1.0, 0.0, 0.0] }, 0, 1, Transform::identity()),
            Joint::new("weld", JointKind::Fixed, 1, 2, Transform::identity()),
        ];
        KinematicTree::new(bodies, joints).unwrap()
    }

    #[test]
    fn frame_counts() {
        let c = SimConfig { duration: 0.6, ..SimConfig::default() };
        assert_eq!(c.frames(), 36);
        assert!((c.dt() - 1.0 / 960.0).abs() < 1e-18);
        assert!(SimConfig { substeps: 0, ..c }.validate().is_err());
        assert!(SimConfig { substeps: 257, ..c }.validate().is_err());
    }

    #[test]
    fn zero_order_hold() {
        let s = TorqueSchedule::new(vec![TorqueEntry::new("hinge", 0.0, 0.6, 0.05)]).resolve(&tree()).unwrap();
        assert_eq!(s.at(0.0), vec![0.05]);
        assert_eq!(s.at(35.0 / 60.0), vec![0.05]);
        assert_eq!(s.at(36.0 / 60.0), vec![0.0]);
    }

    #[test]
    fn current_to_torque() {
        let e = TorqueEntry::from_current("hinge", 0.0, 1.0, 300.0, 1.5);
        assert!((e.torque - 0.45).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_schedules() {
        let overlap = TorqueSchedule::new(vec![TorqueEntry::new("hinge", 0.0, 0.5, 1.0), TorqueEntry::new("hinge", 0.4, 0.6, 1.0)]);
        assert!(matches!(overlap.validate(), Err(Error::InvalidSchedule(_))));
        let back = TorqueSchedule::new(vec![TorqueEntry::new("hinge", 0.5, 0.5, 1.0)]);
        assert!(back.validate().is_err());
        let missing = TorqueSchedule::new(vec![TorqueEntry::new("elbow", 0.0, 0.5, 1.0)]);
        assert!(missing.resolve(&tree()).is_err());
        let fixed = TorqueSchedule::new(vec![TorqueEntry::new("weld", 0.0, 0.5, 1.0)]);
        assert!(fixed.resolve(&tree()).is_err());
        let adjacent = TorqueSchedule::new(vec![TorqueEntry::new("hinge", 0.0, 0.5, 1.0), TorqueEntry::new("hinge", 0.5, 0.6, -1.0)]);
        assert!(adjacent.validate().is_ok());
    }
}
