use std::collections::BTreeMap;
use std::path::Path;

use propsim_core::articulated::{Body, Joint, JointKind, KinematicTree};
use propsim_core::diffcore::Transform;
use propsim_core::Error;
use serde::{Deserialize, Serialize};

use super::format_error;

/// Rigid pose: translation in m and roll-pitch-yaw in rad.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Origin {
    #[serde(default)]
    pub xyz: [f64; 3],
    #[serde(default)]
    pub rpy: [f64; 3],
}

impl Origin {
    pub fn xyz(xyz: [f64; 3]) -> Self {
        Self { xyz, rpy: [0.0; 3] }
    }

    pub fn transform(&self) -> Transform<0> {
        Transform::from_xyz_rpy(self.xyz, self.rpy)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkFile {
    pub name: String,
    /// kg
    pub mass: f64,
    /// m, body frame
    #[serde(default)]
    pub com: [f64; 3],
    /// kg·m² about the center of mass: ixx, iyy, izz, ixy, ixz, iyz.
    #[serde(default)]
    pub inertia: [f64; 6],
}

impl LinkFile {
    pub fn to_body(&self) -> Body {
        let [xx, yy, zz, xy, xz, yz] = self.inertia;
        Body::new(self.name.clone(), self.mass, self.com, [[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKindFile {
    Revolute,
    Prismatic,
    Fixed,
    Free,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointFile {
    pub name: String,
    pub kind: JointKindFile,
    /// Unit axis in the joint frame; required for revolute and prismatic.
    #[serde(default)]
    pub axis: Option<[f64; 3]>,
    pub parent: String,
    pub child: String,
    #[serde(default)]
    pub origin: Origin,
    /// N·m·s/rad or N·s/m
    #[serde(default)]
    pub damping: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotModelFile {
    pub name: String,
    pub links: Vec<LinkFile>,
    pub joints: Vec<JointFile>,
    /// Joints held at a fixed position.
    #[serde(default)]
    pub locked: Vec<String>,
}

impl RobotModelFile {
    /// Builds the tree. `positions` gives lock positions for locked joints
    /// (default 0); `extra_locked` adds to the file's own locked list.
    pub fn to_tree(&self, path: &Path, extra_locked: &[String], positions: &BTreeMap<String, f64>) -> Result<KinematicTree, Error> {
        let err = |field: String, reason: String| format_error(path, field, reason);
        let mut bodies = Vec::with_capacity(self.links.len());
        for (i, l) in self.links.iter().enumerate() {
            if self.links[..i].iter().any(|o| o.name == l.name) {
                return Err(err(format!("links[{i}].name"), format!("duplicate link '{}'", l.name)));
            }
            if !(l.mass.is_finite() && l.mass >= 0.0) {
                return Err(err(format!("links[{i}].mass"), format!("mass must be non-negative, got {} kg", l.mass)));
            }
            let body = l.to_body();
            body.validate().map_err(|e| err(format!("links[{i}]"), e.to_string()))?;
            bodies.push(body);
        }
        let link_index = |name: &str, field: String| {
            self.links.iter().position(|l| l.name == name).ok_or_else(|| err(field, format!("unknown link '{name}'")))
        };
        let mut joints = Vec::with_capacity(self.joints.len());
        for (i, j) in self.joints.iter().enumerate() {
            if self.joints[..i].iter().any(|o| o.name == j.name) {
                return Err(err(format!("joints[{i}].name"), format!("duplicate joint '{}'", j.name)));
            }
            let axis = || j.axis.ok_or_else(|| err(format!("joints[{i}].axis"), "required for revolute and prismatic joints".into()));
            let kind = match j.kind {
                JointKindFile::Revolute => JointKind::Revolute { axis: axis()? },
                JointKindFile::Prismatic => JointKind::Prismatic { axis: axis()? },
                JointKindFile::Fixed => JointKind::Fixed,
                JointKindFile::Free => JointKind::Free,
            };
            if !(j.damping.is_finite() && j.damping >= 0.0) {
                return Err(err(format!("joints[{i}].damping"), format!("damping must be non-negative, got {}", j.damping)));
            }
            let parent = link_index(&j.parent, format!("joints[{i}].parent"))?;
            let child = link_index(&j.child, format!("joints[{i}].child"))?;
            let mut joint = Joint::new(j.name.clone(), kind, parent, child, j.origin.transform());
            joint.damping = j.damping;
            joints.push(joint);
        }
        let mut locked = BTreeMap::new();
        for name in self.locked.iter().chain(extra_locked) {
            let idx = self
                .joints
                .iter()
                .position(|j| &j.name == name)
                .ok_or_else(|| err("locked".into(), format!("unknown joint '{name}'")))?;
            let n = joints[idx].kind.dof_count();
            if n != 1 {
                return Err(err("locked".into(), format!("only single-coordinate joints can be locked, '{name}' has {n}")));
            }
            locked.insert(idx, vec![positions.get(name).copied().unwrap_or(0.0)]);
        }
        KinematicTree::with_locked(bodies, joints, locked).map_err(|e| err("joints".into(), e.to_string()))
    }
}
