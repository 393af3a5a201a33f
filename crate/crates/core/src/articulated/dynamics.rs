//! Recursive dynamics over a compiled tree: forward kinematics, composite
//! rigid body mass matrix, Newton-Euler bias forces, and forward dynamics.

use super::tree::{Body, KinematicTree, Motion};
use crate::diffcore::{solve_dense, DScalar, DenseMat, Mat3, SpatialInertia, SpatialVec, Transform, Vec3};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SimState<const P: usize> {
    pub q: Vec<DScalar<P>>,
    pub qdot: Vec<DScalar<P>>,
}

impl<const P: usize> SimState<P> {
    pub fn zeros(n: usize) -> Self {
        Self { q: vec![DScalar::ZERO; n], qdot: vec![DScalar::ZERO; n] }
    }

    pub fn from_values(q: &[f64], qdot: &[f64]) -> Self {
        Self { q: q.iter().map(|&v| DScalar::constant(v)).collect(), qdot: qdot.iter().map(|&v| DScalar::constant(v)).collect() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WrenchFrame {
    /// World coordinates, moment about the world origin.
    World,
    /// Body coordinates, moment about the body origin.
    Body,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BodyWrench<const P: usize> {
    pub body: usize,
    pub wrench: SpatialVec<P>,
    pub frame: WrenchFrame,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExternalForces<const P: usize> {
    /// m/s²
    pub gravity: [f64; 3],
    pub wrenches: Vec<BodyWrench<P>>,
}

impl<const P: usize> ExternalForces<P> {
    pub fn gravity(g: [f64; 3]) -> Self {
        Self { gravity: g, wrenches: Vec::new() }
    }

    pub fn none() -> Self {
        Self::gravity([0.0; 3])
    }

    pub fn is_finite(&self) -> bool {
        self.gravity.iter().all(|g| g.is_finite()) && self.wrenches.iter().all(|w| w.wrench.is_finite())
    }
}

#[derive(Clone, Debug)]
struct LinkData<const P: usize> {
    parent: Option<usize>,
    origin: Transform<P>,
    motion: Motion,
    dof: Option<usize>,
    body: Option<usize>,
    inertia: SpatialInertia<P>,
    damping: f64,
}

/// Per-link kinematic quantities for one configuration.
#[derive(Clone, Debug)]
pub struct LinkKinematics<const P: usize> {
    /// Link pose in its parent link (or the world for top-level links).
    pub x_parent: Transform<P>,
    pub world: Transform<P>,
    /// Spatial velocity in link coordinates.
    pub velocity: SpatialVec<P>,
    pub subspace: Option<SpatialVec<P>>,
}

/// A tree with inertias lifted to dual scalars, so that body masses can
/// carry parameter tangents.
#[derive(Clone, Debug)]
pub struct Model<const P: usize> {
    links: Vec<LinkData<P>>,
    body_link: Vec<Option<usize>>,
    body_names: Vec<String>,
    bodies: Vec<Body>,
    n_dof: usize,
}

fn body_inertia<const P: usize>(b: &Body, mass: DScalar<P>, unit_inertia: Option<[[f64; 3]; 3]>) -> SpatialInertia<P> {
    let i_c = match unit_inertia {
        Some(u) => Mat3::from_f64(u).scale(mass),
        None if b.mass > 0.0 => Mat3::from_f64(b.inertia).scale(mass / b.mass),
        None => Mat3::from_f64(b.inertia),
    };
    SpatialInertia::from_com(mass, Vec3::from_f64(b.com), i_c)
}

impl<const P: usize> Model<P> {
    pub fn new(tree: &KinematicTree) -> Self {
        let links = tree
            .links
            .iter()
            .map(|l| LinkData {
                parent: l.parent,
                origin: l.origin.resize(),
                motion: l.motion,
                dof: l.dof,
                body: l.body,
                inertia: l
                    .body
                    .map(|b| {
                        let body = &tree.bodies()[b];
                        body_inertia(body, DScalar::constant(body.mass), None)
                    })
                    .unwrap_or(SpatialInertia::ZERO),
                damping: l.damping,
            })
            .collect();
        Self {
            links,
            body_link: tree.body_link.clone(),
            body_names: tree.bodies().iter().map(|b| b.name.clone()).collect(),
            bodies: tree.bodies().to_vec(),
            n_dof: tree.n_dof(),
        }
    }

    pub fn n_dof(&self) -> usize {
        self.n_dof
    }

    /// Replaces a body's mass. Its rotational inertia scales with the mass,
    /// or is `unit_inertia · mass` when given (inertia per kilogram).
    pub fn set_body_mass(&mut self, body: usize, mass: DScalar<P>, unit_inertia: Option<[[f64; 3]; 3]>) -> Result<()> {
        let b = self.bodies.get(body).ok_or(Error::InvalidParent(body))?;
        match self.body_link[body] {
            Some(l) => {
                self.links[l].inertia = body_inertia(b, mass, unit_inertia);
                Ok(())
            }
            // the root is welded to the world; its mass never matters
            None => Ok(()),
        }
    }

    fn check_dims(&self, q: &[DScalar<P>], qdot: Option<&[DScalar<P>]>) -> Result<()> {
        if q.len() != self.n_dof {
            return Err(Error::Dimension { what: "q", expected: self.n_dof, got: q.len() });
        }
        if let Some(v) = qdot {
            if v.len() != self.n_dof {
                return Err(Error::Dimension { what: "qdot", expected: self.n_dof, got: v.len() });
            }
        }
        Ok(())
    }

    fn joint_transform(motion: &Motion, q: DScalar<P>) -> Transform<P> {
        match *motion {
            Motion::None => Transform::identity(),
            Motion::Revolute(a) => Transform::new(Mat3::axis_angle(a, q), Vec3::ZERO),
            Motion::Prismatic(a) => Transform::translation(Vec3::from_f64(a).scale(q)),
        }
    }

    fn subspace(motion: &Motion) -> Option<SpatialVec<P>> {
        match *motion {
            Motion::None => None,
            Motion::Revolute(a) => Some(SpatialVec::new(Vec3::from_f64(a), Vec3::ZERO)),
            Motion::Prismatic(a) => Some(SpatialVec::new(Vec3::ZERO, Vec3::from_f64(a))),
        }
    }

    /// Poses and velocities of every link. `qdot = None` gives zero velocities.
    pub fn kinematics(&self, q: &[DScalar<P>], qdot: Option<&[DScalar<P>]>) -> Result<Vec<LinkKinematics<P>>> {
        self.check_dims(q, qdot)?;
        let mut out: Vec<LinkKinematics<P>> = Vec::with_capacity(self.links.len());
        for l in &self.links {
            let qi = l.dof.map(|d| q[d]).unwrap_or(DScalar::ZERO);
            let x_parent = match l.motion {
                Motion::None => l.origin,
                m => l.origin.compose(&Self::joint_transform(&m, qi)),
            };
            let s = Self::subspace(&l.motion);
            let (world, v_parent) = match l.parent {
                Some(p) => (out[p].world.compose(&x_parent), out[p].velocity),
                None => (x_parent, SpatialVec::ZERO),
            };
            let mut velocity = x_parent.motion_to_child(&v_parent);
            if let (Some(s), Some(d), Some(qd)) = (s, l.dof, qdot) {
                velocity += s.scale(qd[d]);
            }
            out.push(LinkKinematics { x_parent, world, velocity, subspace: s });
        }
        Ok(out)
    }

    /// World pose of each body; the root is the world frame.
    pub fn forward_kinematics(&self, q: &[DScalar<P>]) -> Result<Vec<Transform<P>>> {
        let kin = self.kinematics(q, None)?;
        Ok(self.body_link.iter().map(|l| l.map(|l| kin[l].world).unwrap_or_else(Transform::identity)).collect())
    }

    /// World pose and world-coordinate twist (angular, linear at the world
    /// origin) of one body.
    pub fn body_pose_twist(&self, kin: &[LinkKinematics<P>], body: usize) -> (Transform<P>, SpatialVec<P>) {
        match self.body_link.get(body).copied().flatten() {
            Some(l) => {
                let w = kin[l].world;
                (w, w.motion_to_parent(&kin[l].velocity))
            }
            None => (Transform::identity(), SpatialVec::ZERO),
        }
    }

    pub fn mass_matrix(&self, q: &[DScalar<P>]) -> Result<DenseMat<P>> {
        let kin = self.kinematics(q, None)?;
        Ok(self.mass_matrix_from(&kin))
    }

    fn mass_matrix_from(&self, kin: &[LinkKinematics<P>]) -> DenseMat<P> {
        let n = self.links.len();
        let mut ic: Vec<SpatialInertia<P>> = self.links.iter().map(|l| l.inertia).collect();
        for i in (0..n).rev() {
            if let Some(p) = self.links[i].parent {
                let moved = ic[i].to_parent(&kin[i].x_parent);
                ic[p] += moved;
            }
        }
        let mut h = DenseMat::zeros(self.n_dof);
        for i in 0..n {
            let (Some(di), Some(si)) = (self.links[i].dof, kin[i].subspace) else { continue };
            let mut f = ic[i].mul_motion(&si);
            h[(di, di)] = si.dot(&f);
            let mut j = i;
            while let Some(p) = self.links[j].parent {
                f = kin[j].x_parent.force_to_parent(&f);
                j = p;
                if let (Some(dj), Some(sj)) = (self.links[j].dof, kin[j].subspace) {
                    let hij = f.dot(&sj);
                    h[(di, dj)] = hij;
                    h[(dj, di)] = hij;
                }
            }
        }
        h
    }

    /// Generalized forces producing `qddot` (recursive Newton-Euler).
    /// Joint damping is not included.
    pub fn inverse_dynamics(
        &self,
        q: &[DScalar<P>],
        qdot: &[DScalar<P>],
        qddot: &[DScalar<P>],
        ext: &ExternalForces<P>,
    ) -> Result<Vec<DScalar<P>>> {
        let kin = self.kinematics(q, Some(qdot))?;
        if qddot.len() != self.n_dof {
            return Err(Error::Dimension { what: "qddot", expected: self.n_dof, got: qddot.len() });
        }
        self.rnea(&kin, qdot, Some(qddot), ext)
    }

    fn rnea(
        &self,
        kin: &[LinkKinematics<P>],
        qdot: &[DScalar<P>],
        qddot: Option<&[DScalar<P>]>,
        ext: &ExternalForces<P>,
    ) -> Result<Vec<DScalar<P>>> {
        if !ext.is_finite() {
            return Err(Error::NonFinite("external forces"));
        }
        let n = self.links.len();
        // fictitious base acceleration accounts for gravity
        let a_root = SpatialVec::new(Vec3::ZERO, -Vec3::from_f64(ext.gravity));
        let mut f_ext: Vec<SpatialVec<P>> = vec![SpatialVec::ZERO; n];
        for w in &ext.wrenches {
            let Some(l) = self.body_link.get(w.body).copied().ok_or(Error::InvalidParent(w.body))? else {
                continue;
            };
            f_ext[l] += match w.frame {
                WrenchFrame::Body => w.wrench,
                WrenchFrame::World => kin[l].world.force_to_child(&w.wrench),
            };
        }
        let mut acc: Vec<SpatialVec<P>> = Vec::with_capacity(n);
        let mut force: Vec<SpatialVec<P>> = Vec::with_capacity(n);
        for (i, l) in self.links.iter().enumerate() {
            let a_parent = l.parent.map(|p| acc[p]).unwrap_or(a_root);
            let mut a = kin[i].x_parent.motion_to_child(&a_parent);
            if let (Some(s), Some(d)) = (kin[i].subspace, l.dof) {
                a += kin[i].velocity.cross_motion(&s.scale(qdot[d]));
                if let Some(qdd) = qddot {
                    a += s.scale(qdd[d]);
                }
            }
            let v = &kin[i].velocity;
            let inertia = &l.inertia;
            let f = inertia.mul_motion(&a) + v.cross_force(&inertia.mul_motion(v)) - f_ext[i];
            acc.push(a);
            force.push(f);
        }
        let mut tau = vec![DScalar::ZERO; self.n_dof];
        for i in (0..n).rev() {
            if let (Some(s), Some(d)) = (kin[i].subspace, self.links[i].dof) {
                tau[d] = s.dot(&force[i]);
            }
            if let Some(p) = self.links[i].parent {
                let fp = kin[i].x_parent.force_to_parent(&force[i]);
                force[p] += fp;
            }
        }
        Ok(tau)
    }

    /// Bias forces `C(q, q̇, fˣ)`: inverse dynamics at zero acceleration plus
    /// viscous joint damping.
    pub fn bias_forces(&self, q: &[DScalar<P>], qdot: &[DScalar<P>], ext: &ExternalForces<P>) -> Result<Vec<DScalar<P>>> {
        let kin = self.kinematics(q, Some(qdot))?;
        self.bias_from(&kin, qdot, ext)
    }

    fn bias_from(&self, kin: &[LinkKinematics<P>], qdot: &[DScalar<P>], ext: &ExternalForces<P>) -> Result<Vec<DScalar<P>>> {
        let mut c = self.rnea(kin, qdot, None, ext)?;
        for l in &self.links {
            if let (Some(d), true) = (l.dof, l.damping > 0.0) {
                c[d] += qdot[d] * l.damping;
            }
        }
        Ok(c)
    }

    /// Solves `H q̈ = τ − C` for the joint accelerations.
    pub fn forward_dynamics(&self, state: &SimState<P>, tau: &[DScalar<P>], ext: &ExternalForces<P>) -> Result<Vec<DScalar<P>>> {
        let kin = self.kinematics(&state.q, Some(&state.qdot))?;
        self.forward_dynamics_with(&kin, state, tau, ext)
    }

    /// Same as [`forward_dynamics`](Self::forward_dynamics) reusing
    /// precomputed kinematics.
    pub fn forward_dynamics_with(
        &self,
        kin: &[LinkKinematics<P>],
        state: &SimState<P>,
        tau: &[DScalar<P>],
        ext: &ExternalForces<P>,
    ) -> Result<Vec<DScalar<P>>> {
        if tau.len() != self.n_dof {
            return Err(Error::Dimension { what: "tau", expected: self.n_dof, got: tau.len() });
        }
        if self.n_dof == 0 {
            return Ok(Vec::new());
        }
        let h = self.mass_matrix_from(kin);
        if !h.is_finite() {
            return Err(Error::NonFinite("mass matrix"));
        }
        let c = self.bias_from(kin, &state.qdot, ext)?;
        let rhs: Vec<DScalar<P>> = tau.iter().zip(&c).map(|(t, c)| *t - *c).collect();
        solve_dense(&h, &rhs).map_err(|e| match e {
            Error::Singular { pivot } => Error::DegenerateInertia { dof: pivot, body: self.dof_body_name(pivot) },
            e => e,
        })
    }

    fn dof_body_name(&self, dof: usize) -> String {
        self.links
            .iter()
            .enumerate()
            .find(|(_, l)| l.dof == Some(dof))
            .and_then(|(i, _)| {
                // nearest descendant carrying a body (free joints use virtual links)
                let mut j = i;
                loop {
                    if let Some(b) = self.links[j].body {
                        return Some(self.body_names[b].clone());
                    }
                    j = self.links.iter().position(|l| l.parent == Some(j))?;
                }
            })
            .unwrap_or_else(|| format!("coordinate {dof}"))
    }

    /// Gravitational potential of all bodies, `−Σ m g·x_com`.
    pub fn potential_energy(&self, kin: &[LinkKinematics<P>], gravity: [f64; 3]) -> DScalar<P> {
        let g = Vec3::from_f64(gravity);
        let mut v = DScalar::ZERO;
        for (l, k) in self.links.iter().zip(kin) {
            if l.body.is_none() {
                continue;
            }
            let m = l.inertia.mass;
            if m.v == 0.0 && m.d.iter().all(|d| *d == 0.0) {
                continue;
            }
            // world first moment: m·p + R h
            let h_world = k.world.pos.scale(m) + k.world.rot.mul_vec(&l.inertia.h);
            v -= g.dot(&h_world);
        }
        v
    }

    /// ½ q̇ᵀ H q̇.
    pub fn kinetic_energy(&self, q: &[DScalar<P>], qdot: &[DScalar<P>]) -> Result<DScalar<P>> {
        let h = self.mass_matrix(q)?;
        let hq = h.mul_vec(qdot);
        Ok(hq.iter().zip(qdot).map(|(a, b)| *a * *b).sum::<DScalar<P>>() * 0.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::articulated::tree::{Joint, JointKind};

    type D = DScalar<0>;

    fn c(v: f64) -> D {
        D::constant(v)
    }

    /// Point mass on a massless rod about x, lever along +y, so that
    /// gravity −z pulls q negative.
    pub(crate) fn pendulum(m: f64, l: f64) -> KinematicTree {
        let bodies = vec![Body::massless("world"), Body::point_mass("bob", m, [0.0, l, 0.0])];
        let joints = vec![Joint::new("hinge", JointKind::Revolute { axis: [1.0, 0.0, 0.0] }, 0, 1, Transform::identity())];
        KinematicTree::new(bodies, joints).unwrap()
    }

    #[test]
    fn pendulum_mass_matrix() {
        let model = Model::<0>::new(&pendulum(0.05, 0.1));
        let h = model.mass_matrix(&[c(0.4)]).unwrap();
        assert!((h[(0, 0)].v - 5.0e-4).abs() < 1e-15);
    }

    #[test]
    fn pendulum_gravity_torque() {
        let model = Model::<0>::new(&pendulum(0.05, 0.1));
        let ext = ExternalForces::gravity([0.0, 0.0, -9.81]);
        let cq = model.bias_forces(&[c(0.0)], &[c(0.0)], &ext).unwrap();
        assert!((cq[0].v - 0.04905).abs() < 1e-12);
        let none = model.bias_forces(&[c(0.3)], &[c(0.0)], &ExternalForces::none()).unwrap();
        assert_eq!(none[0].v, 0.0);
    }

    #[test]
    fn pendulum_forward_dynamics() {
        let model = Model::<0>::new(&pendulum(0.05, 0.1));
        let ext = ExternalForces::gravity([0.0, 0.0, -9.81]);
        let s = SimState::from_values(&[0.0], &[0.0]);
        let qdd = model.forward_dynamics(&s, &[c(0.0)], &ext).unwrap();
        assert!((qdd[0].v + 98.1).abs() < 1e-10);
        for q in [-1.0, 0.2, 1.3] {
            let s = SimState::from_values(&[q], &[0.0]);
            let tau = 0.05 * 9.81 * 0.1 * f64::cos(q);
            let qdd = model.forward_dynamics(&s, &[c(tau)], &ext).unwrap();
            assert!(qdd[0].v.abs() < 1e-12);
        }
        let free = model.forward_dynamics(&SimState::zeros(1), &[c(0.0)], &ExternalForces::none()).unwrap();
        assert_eq!(free[0].v, 0.0);
    }

    #[test]
    fn fixed_only_tree_has_empty_matrix() {
        let bodies = vec![Body::massless("w"), Body::sphere("s", 1.0, 0.1)];
        let joints = vec![Joint::new("weld", JointKind::Fixed, 0, 1, Transform::identity())];
        let model = Model::<0>::new(&KinematicTree::new(bodies, joints).unwrap());
        assert_eq!(model.mass_matrix(&[]).unwrap().dim(), 0);
    }

    #[test]
    fn revolute_quarter_turn_maps_x_to_y() {
        let bodies = vec![Body::massless("w"), Body::point_mass("b", 1.0, [0.0; 3])];
        let joints = vec![Joint::new("yaw", JointKind::Revolute { axis: [0.0, 0.0, 1.0] }, 0, 1, Transform::identity())];
        let model = Model::<0>::new(&KinematicTree::new(bodies, joints).unwrap());
        let poses = model.forward_kinematics(&[c(std::f64::consts::FRAC_PI_2)]).unwrap();
        let x_axis = poses[1].rot.col(0).values();
        assert!((x_axis[0]).abs() < 1e-15 && (x_axis[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let model = Model::<0>::new(&pendulum(1.0, 1.0));
        assert!(matches!(model.mass_matrix(&[]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn degenerate_inertia_names_body() {
        let model = Model::<0>::new(&pendulum(0.0, 0.1));
        let err = model.forward_dynamics(&SimState::zeros(1), &[c(1.0)], &ExternalForces::none()).unwrap_err();
        assert!(matches!(err, Error::DegenerateInertia { ref body, .. } if body == "bob"), "{err}");
    }
}
