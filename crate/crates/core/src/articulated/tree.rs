//! Kinematic tree description and its compiled link list.

use std::collections::{BTreeMap, VecDeque};

use crate::diffcore::Transform;
use crate::error::{Error, Result};

const AXIS_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Body {
    pub name: String,
    /// kg
    pub mass: f64,
    /// Center of mass in the body frame, m.
    pub com: [f64; 3],
    /// Rotational inertia about the center of mass, body axes, kg·m².
    pub inertia: [[f64; 3]; 3],
}

impl Body {
    pub fn new(name: impl Into<String>, mass: f64, com: [f64; 3], inertia: [[f64; 3]; 3]) -> Self {
        Self { name: name.into(), mass, com, inertia }
    }

    pub fn massless(name: impl Into<String>) -> Self {
        Self::new(name, 0.0, [0.0; 3], [[0.0; 3]; 3])
    }

    pub fn point_mass(name: impl Into<String>, mass: f64, com: [f64; 3]) -> Self {
        Self::new(name, mass, com, [[0.0; 3]; 3])
    }

    /// Solid sphere centered on the body origin.
    pub fn sphere(name: impl Into<String>, mass: f64, radius: f64) -> Self {
        let i = 0.4 * mass * radius * radius;
        Self::new(name, mass, [0.0; 3], diag(i, i, i))
    }

    /// Solid box centered on the body origin.
    pub fn cuboid(name: impl Into<String>, mass: f64, half_extents: [f64; 3]) -> Self {
        let [a, b, c] = half_extents.map(|h| 4.0 * h * h);
        let k = mass / 12.0;
        Self::new(name, mass, [0.0; 3], diag(k * (b + c), k * (a + c), k * (a + b)))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::InvalidBody { name: self.name.clone(), reason });
        if !(self.mass.is_finite() && self.mass >= 0.0) {
            return bad(format!("mass must be finite and non-negative, got {}", self.mass));
        }
        if !self.com.iter().chain(self.inertia.iter().flatten()).all(|x| x.is_finite()) {
            return bad("non-finite com or inertia".into());
        }
        let i = &self.inertia;
        let scale = i.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
        for r in 0..3 {
            for c in 0..3 {
                if (i[r][c] - i[c][r]).abs() > 1e-12 * scale.max(1e-300) {
                    return bad("inertia is not symmetric".into());
                }
            }
        }
        if scale == 0.0 {
            return Ok(());
        }
        let m = nalgebra::Matrix3::from_fn(|r, c| i[r][c]);
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let tol = 1e-9 * scale;
        if ev[0] < -tol {
            return bad(format!("inertia is not positive semidefinite (eigenvalue {:e})", ev[0]));
        }
        if ev[0] + ev[1] < ev[2] - tol {
            return bad("principal moments violate the triangle inequality".into());
        }
        Ok(())
    }
}

pub(crate) fn diag(a: f64, b: f64, c: f64) -> [[f64; 3]; 3] {
    [[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum JointKind {
    Revolute { axis: [f64; 3] },
    Prismatic { axis: [f64; 3] },
    Fixed,
    /// Six coordinates: translation x, y, z in the parent frame followed by
    /// z-y-x Euler angles.
    Free,
}

impl JointKind {
    pub fn dof_count(&self) -> usize {
        match self {
            JointKind::Fixed => 0,
            JointKind::Revolute { .. } | JointKind::Prismatic { .. } => 1,
            JointKind::Free => 6,
        }
    }

    fn validate(&self) -> Result<()> {
        if let JointKind::Revolute { axis } | JointKind::Prismatic { axis } = self {
            let n = axis.iter().map(|a| a * a).sum::<f64>().sqrt();
            if !((n - 1.0).abs() <= AXIS_TOL) {
                return Err(Error::InvalidTree(format!("joint axis {axis:?} is not unit length")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Joint {
    pub name: String,
    pub kind: JointKind,
    pub parent: usize,
    pub child: usize,
    /// Pose of the joint frame in the parent body frame at zero position.
    pub origin: Transform<0>,
    /// Viscous damping, N·m·s/rad or N·s/m.
    pub damping: f64,
}

impl Joint {
    pub fn new(name: impl Into<String>, kind: JointKind, parent: usize, child: usize, origin: Transform<0>) -> Self {
        Self { name: name.into(), kind, parent, child, origin, damping: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Motion {
    None,
    Revolute([f64; 3]),
    Prismatic([f64; 3]),
}

impl Motion {
    pub(crate) fn transform(&self, q: f64) -> Transform<0> {
        use crate::diffcore::{DScalar, Mat3, Vec3};
        match *self {
            Motion::None => Transform::identity(),
            Motion::Revolute(a) => Transform::new(Mat3::axis_angle(a, DScalar::constant(q)), Vec3::ZERO),
            Motion::Prismatic(a) => Transform::translation(Vec3::from_f64(a).scale_f(q)),
        }
    }
}

/// One entry of the flattened tree: at most one coordinate per link.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Link {
    pub parent: Option<usize>,
    pub origin: Transform<0>,
    pub motion: Motion,
    pub dof: Option<usize>,
    pub body: Option<usize>,
    pub damping: f64,
}

/// Robot description rooted at a world-fixed body. Locked joints are
/// frozen at a given position and contribute no coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct KinematicTree {
    bodies: Vec<Body>,
    joints: Vec<Joint>,
    locked: BTreeMap<usize, Vec<f64>>,
    root: usize,
    pub(crate) links: Vec<Link>,
    pub(crate) body_link: Vec<Option<usize>>,
    dof_map: Vec<Vec<usize>>,
    dof_joint: Vec<usize>,
}

impl KinematicTree {
    pub fn new(bodies: Vec<Body>, joints: Vec<Joint>) -> Result<Self> {
        Self::with_locked(bodies, joints, BTreeMap::new())
    }

    pub fn with_locked(bodies: Vec<Body>, joints: Vec<Joint>, locked: BTreeMap<usize, Vec<f64>>) -> Result<Self> {
        for b in &bodies {
            b.validate()?;
        }
        let mut tree = Self {
            bodies,
            joints,
            locked,
            root: 0,
            links: Vec::new(),
            body_link: Vec::new(),
            dof_map: Vec::new(),
            dof_joint: Vec::new(),
        };
        tree.compile()?;
        Ok(tree)
    }

    fn compile(&mut self) -> Result<()> {
        let nb = self.bodies.len();
        if nb == 0 {
            return Err(Error::InvalidTree("no bodies".into()));
        }
        let mut parent_joint: Vec<Option<usize>> = vec![None; nb];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); nb];
        for (ji, j) in self.joints.iter().enumerate() {
            j.kind.validate()?;
            if !(j.damping.is_finite() && j.damping >= 0.0) {
                return Err(Error::InvalidTree(format!("joint '{}' has invalid damping", j.name)));
            }
            if j.parent >= nb || j.child >= nb {
                return Err(Error::InvalidTree(format!("joint '{}' references a missing body", j.name)));
            }
            if j.parent == j.child {
                return Err(Error::InvalidTree(format!("joint '{}' connects a body to itself", j.name)));
            }
            if parent_joint[j.child].replace(ji).is_some() {
                return Err(Error::InvalidTree(format!("body '{}' has two parent joints", self.bodies[j.child].name)));
            }
            children[j.parent].push(ji);
        }
        for (&ji, pos) in &self.locked {
            let j = self.joints.get(ji).ok_or_else(|| Error::InvalidTree(format!("locked joint index {ji}")))?;
            if pos.len() != j.kind.dof_count() {
                return Err(Error::InvalidTree(format!("locked joint '{}' needs {} positions", j.name, j.kind.dof_count())));
            }
        }
        let roots: Vec<usize> = (0..nb).filter(|&b| parent_joint[b].is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::InvalidTree(format!("expected exactly one root body, found {}", roots.len())));
        }
        self.root = roots[0];

        let mut links = Vec::new();
        let mut body_link = vec![None; nb];
        let mut dof_map = vec![Vec::new(); self.joints.len()];
        let mut dof_joint = Vec::new();
        let mut queue = VecDeque::from([self.root]);
        let mut visited = 1usize;
        while let Some(b) = queue.pop_front() {
            let parent_link = body_link[b];
            for &ji in &children[b] {
                let j = &self.joints[ji];
                let lock = self.locked.get(&ji);
                let segments = expand_joint(&j.kind);
                let mut prev = parent_link;
                let mut origin = j.origin;
                for (k, motion) in segments.iter().enumerate() {
                    let last = k + 1 == segments.len();
                    let (motion, dof) = match (lock, motion) {
                        (_, Motion::None) => (Motion::None, None),
                        (Some(pos), m) => {
                            origin = origin.compose(&m.transform(pos[k]));
                            (Motion::None, None)
                        }
                        (None, m) => {
                            let d = dof_joint.len();
                            dof_joint.push(ji);
                            dof_map[ji].push(d);
                            (*m, Some(d))
                        }
                    };
                    links.push(Link {
                        parent: prev,
                        origin,
                        motion,
                        dof,
                        body: last.then_some(j.child),
                        damping: if dof.is_some() { j.damping } else { 0.0 },
                    });
                    origin = Transform::identity();
                    prev = Some(links.len() - 1);
                }
                body_link[j.child] = prev;
                visited += 1;
                queue.push_back(j.child);
            }
        }
        if visited != nb {
            return Err(Error::InvalidTree("bodies not connected to the root".into()));
        }
        self.links = links;
        self.body_link = body_link;
        self.dof_map = dof_map;
        self.dof_joint = dof_joint;
        Ok(())
    }

    pub fn bodies(&self) -> &[Body] {
        &self.bodies
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn locked(&self) -> &BTreeMap<usize, Vec<f64>> {
        &self.locked
    }

    pub fn n_dof(&self) -> usize {
        self.dof_joint.len()
    }

    /// Coordinate indices owned by each joint.
    pub fn dof_map(&self) -> &[Vec<usize>] {
        &self.dof_map
    }

    /// Joint owning each coordinate.
    pub fn dof_joint(&self) -> &[usize] {
        &self.dof_joint
    }

    pub fn body_index(&self, name: &str) -> Option<usize> {
        self.bodies.iter().position(|b| b.name == name)
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    /// Name of each coordinate: the joint name, suffixed for multi-DoF joints.
    pub fn coordinate_names(&self) -> Vec<String> {
        self.dof_joint
            .iter()
            .enumerate()
            .map(|(d, &ji)| {
                let j = &self.joints[ji];
                if j.kind.dof_count() == 1 {
                    j.name.clone()
                } else {
                    let k = self.dof_map[ji].iter().position(|&x| x == d).unwrap_or(0);
                    format!("{}_{}", j.name, ["x", "y", "z", "rz", "ry", "rx"][k])
                }
            })
            .collect()
    }

    /// Freezes additional joints. Positions are per joint coordinate.
    pub fn lock(&self, joint: usize, positions: Vec<f64>) -> Result<Self> {
        let mut locked = self.locked.clone();
        locked.insert(joint, positions);
        Self::with_locked(self.bodies.clone(), self.joints.clone(), locked)
    }

    pub fn set_body_mass(&mut self, body: usize, mass: f64) -> Result<()> {
        let b = self.bodies.get_mut(body).ok_or(Error::InvalidParent(body))?;
        b.mass = mass;
        b.validate()
    }

    /// Welds `object` to `parent` with a fixed joint at `transform`.
    pub fn attach_fixed(&self, object: Body, parent: usize, transform: Transform<0>) -> Result<Self> {
        if parent >= self.bodies.len() {
            return Err(Error::InvalidParent(parent));
        }
        let mut bodies = self.bodies.clone();
        let mut joints = self.joints.clone();
        let child = bodies.len();
        let name = format!("{}_weld", object.name);
        bodies.push(object);
        joints.push(Joint::new(name, JointKind::Fixed, parent, child, transform));
        Self::with_locked(bodies, joints, self.locked.clone())
    }
}

fn expand_joint(kind: &JointKind) -> Vec<Motion> {
    match *kind {
        JointKind::Fixed => vec![Motion::None],
        JointKind::Revolute { axis } => vec![Motion::Revolute(axis)],
        JointKind::Prismatic { axis } => vec![Motion::Prismatic(axis)],
        JointKind::Free => vec![
            Motion::Prismatic([1.0, 0.0, 0.0]),
            Motion::Prismatic([0.0, 1.0, 0.0]),
            Motion::Prismatic([0.0, 0.0, 1.0]),
            Motion::Revolute([0.0, 0.0, 1.0]),
            Motion::Revolute([0.0, 1.0, 0.0]),
            Motion::Revolute([1.0, 0.0, 0.0]),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> KinematicTree {
        let bodies = vec![
            Body::massless("base"),
            Body::point_mass("a", 1.0, [0.0, 0.1, 0.0]),
            Body::point_mass("b", 1.0, [0.0, 0.1, 0.0]),
            Body::point_mass("c", 0.5, [0.0, 0.0, 0.0]),
        ];
        let t = Transform::from_xyz_rpy([0.0, 0.1, 0.0], [0.0; 3]);
        let joints = vec![
            Joint::new("j1", JointKind::Revolute { axis: [1.0, 0.0, 0.0] }, 0, 1, Transform::identity()),
            Joint::new("j2", JointKind::Revolute { axis: [1.0, 0.0, 0.0] }, 1, 2, t),
            Joint::new("tool", JointKind::Fixed, 2, 3, t),
        ];
        KinematicTree::new(bodies, joints).unwrap()
    }

    #[test]
    fn dof_map_is_bijection() {
        let t = chain();
        assert_eq!(t.n_dof(), 2);
        assert_eq!(t.dof_map(), &[vec![0], vec![1], vec![]]);
        assert_eq!(t.dof_joint(), &[0, 1]);
    }

    #[test]
    fn locking_removes_coordinates() {
        let t = chain().lock(0, vec![0.3]).unwrap();
        assert_eq!(t.n_dof(), 1);
        assert_eq!(t.dof_joint(), &[1]);
        assert_eq!(t.coordinate_names(), vec!["j2"]);
    }

    #[test]
    fn free_joint_has_six_coordinates() {
        let bodies = vec![Body::massless("world"), Body::sphere("ball", 0.1, 0.02)];
        let joints = vec![Joint::new("float", JointKind::Free, 0, 1, Transform::identity())];
        let t = KinematicTree::new(bodies, joints).unwrap();
        assert_eq!(t.n_dof(), 6);
        assert_eq!(t.coordinate_names()[3], "float_rz");
    }

    #[test]
    fn rejects_cycles_and_bad_axes() {
        let bodies = vec![Body::massless("a"), Body::massless("b")];
        let j = |p, c| Joint::new("j", JointKind::Fixed, p, c, Transform::identity());
        assert!(KinematicTree::new(bodies.clone(), vec![j(0, 1), j(1, 0)]).is_err());
        let skew = Joint::new("s", JointKind::Revolute { axis: [1.0, 1.0, 0.0] }, 0, 1, Transform::identity());
        assert!(KinematicTree::new(bodies, vec![skew]).is_err());
    }

    #[test]
    fn body_validation() {
        assert!(Body::point_mass("neg", -1.0, [0.0; 3]).validate().is_err());
        assert!(Body::new("tri", 1.0, [0.0; 3], diag(1.0, 1.0, 3.0)).validate().is_err());
        assert!(Body::cuboid("box", 1.0, [0.1, 0.2, 0.3]).validate().is_ok());
    }

    #[test]
    fn attach_checks_parent() {
        let t = chain();
        assert!(matches!(t.attach_fixed(Body::massless("o"), 9, Transform::identity()), Err(Error::InvalidParent(9))));
        let t2 = t.attach_fixed(Body::sphere("o", 0.05, 0.01), 3, Transform::identity()).unwrap();
        assert_eq!(t2.n_dof(), 2);
        assert_eq!(t2.bodies().len(), 5);
    }
}
