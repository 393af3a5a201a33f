use crate::diffcore::{DScalar, Vec3};
use crate::error::{Error, Result};

/// Frame-sampled simulation output, or ground truth read from a file.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<const P: usize> {
    /// s
    pub times: Vec<f64>,
    pub joint_names: Vec<String>,
    /// One row per sample; rad or m.
    pub joint_positions: Vec<Vec<DScalar<P>>>,
    /// Empty when not recorded.
    pub joint_velocities: Vec<Vec<DScalar<P>>>,
    /// Object position per sample, m.
    pub object_positions: Option<Vec<Vec3<P>>>,
}

impl<const P: usize> Trajectory<P> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn joint_column(&self, name: &str) -> Option<usize> {
        self.joint_names.iter().position(|n| n == name)
    }

    /// Positions of one joint over time.
    pub fn joint_series(&self, column: usize) -> Vec<f64> {
        self.joint_positions.iter().map(|r| r[column].v).collect()
    }

    /// Drops parameter tangents.
    pub fn values(&self) -> Trajectory<0> {
        let strip = |rows: &Vec<Vec<DScalar<P>>>| rows.iter().map(|r| r.iter().map(|x| DScalar::constant(x.v)).collect()).collect();
        Trajectory {
            times: self.times.clone(),
            joint_names: self.joint_names.clone(),
            joint_positions: strip(&self.joint_positions),
            joint_velocities: strip(&self.joint_velocities),
            object_positions: self.object_positions.as_ref().map(|o| o.iter().map(|p| Vec3::from_f64(p.values())).collect()),
        }
    }

    /// Checks shapes and strictly increasing times.
    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        let dim = |what: &'static str, got: usize| Error::Dimension { what, expected: n, got };
        if self.joint_positions.len() != n {
            return Err(dim("trajectory rows", self.joint_positions.len()));
        }
        if !self.joint_velocities.is_empty() && self.joint_velocities.len() != n {
            return Err(dim("trajectory velocity rows", self.joint_velocities.len()));
        }
        if let Some(o) = &self.object_positions {
            if o.len() != n {
                return Err(dim("object positions", o.len()));
            }
        }
        let cols = self.joint_names.len();
        if let Some(r) = self.joint_positions.iter().find(|r| r.len() != cols) {
            return Err(Error::Dimension { what: "trajectory columns", expected: cols, got: r.len() });
        }
        if let Some(i) = (1..n).find(|&i| !(self.times[i] > self.times[i - 1])) {
            return Err(Error::InvalidConfig(format!("times not strictly increasing at sample {i}")));
        }
        Ok(())
    }
}
