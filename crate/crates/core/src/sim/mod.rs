//! Scenario assembly and coupled time stepping of robot and object.

mod config;
mod scenario;
mod trajectory;

pub use config::{ResolvedSchedule, SimConfig, TorqueEntry, TorqueSchedule};
pub use scenario::{ContainerSetup, ObjectModel, PadSetup, ParamTarget, Scenario, SqueezeSetup};
pub use trajectory::Trajectory;

use crate::articulated::{free_body_dynamics, BodyWrench, ExternalForces, FreeBody, LinkKinematics, Model, RigidState, SimState, WrenchFrame};
use crate::contact::{accumulate_wrenches, detect_sphere_in_box, torque_about, BodyMotion, Contact, ContactParams};
use crate::diffcore::{DScalar, SpatialVec, Vec3};
use crate::error::{Error, Result};
use crate::softbody::{elastic_energy, soft_rigid_contact, soft_step, Material, SoftState};

/// Beyond these magnitudes a run is treated as diverged.
pub const MAX_POSITION: f64 = 1e3;
pub const MAX_VELOCITY: f64 = 1e5;

#[derive(Clone, Debug, PartialEq)]
pub enum ObjectState<const P: usize> {
    None,
    Rigid(RigidState<P>),
    Soft(SoftState<P>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoupledState<const P: usize> {
    pub robot: SimState<P>,
    pub object: ObjectState<P>,
}

impl<const P: usize> CoupledState<P> {
    pub fn object_position(&self) -> Option<Vec3<P>> {
        match &self.object {
            ObjectState::None => None,
            ObjectState::Rigid(r) => Some(r.pose.pos),
            ObjectState::Soft(s) => Some(s.centroid()),
        }
    }
}

/// Kinetic, gravitational and elastic energy, J.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Energy {
    pub kinetic: f64,
    pub potential: f64,
    pub elastic: f64,
}

impl Energy {
    pub fn total(&self) -> f64 {
        self.kinetic + self.potential + self.elastic
    }
}

fn lift_contact<const P: usize>(c: &ContactParams<0>) -> ContactParams<P> {
    ContactParams {
        k_e: DScalar::constant(c.k_e.v),
        k_d: DScalar::constant(c.k_d.v),
        k_f: DScalar::constant(c.k_f.v),
        mu: DScalar::constant(c.mu.v),
        non_adhesive: c.non_adhesive,
    }
}

fn lift_material<const P: usize>(m: &Material<0>) -> Material<P> {
    Material { k_mu: DScalar::constant(m.k_mu.v), k_lambda: DScalar::constant(m.k_lambda.v), rho0: m.rho0, rayleigh_damping: m.rayleigh_damping }
}

/// A scenario with its unknowns bound to (possibly dual) values.
pub struct Simulator<'a, const P: usize> {
    scenario: &'a Scenario,
    model: Model<P>,
    contact: ContactParams<P>,
    sphere: Option<FreeBody<P>>,
    material: Option<Material<P>>,
    schedule: ResolvedSchedule,
}

impl<'a, const P: usize> Simulator<'a, P> {
    pub fn new(scenario: &'a Scenario, bind: &[(ParamTarget, DScalar<P>)]) -> Result<Self> {
        scenario.validate()?;
        let mut model = Model::new(&scenario.tree);
        let mut contact = lift_contact(&scenario.contact);
        let mut sphere = match &scenario.object {
            ObjectModel::Container(c) => Some(FreeBody::from_body(&c.sphere)),
            _ => None,
        };
        let mut material = match &scenario.object {
            ObjectModel::Squeeze(s) => Some(lift_material(&s.material)),
            _ => None,
        };
        for (i, (target, value)) in bind.iter().enumerate() {
            if bind[..i].iter().any(|(t, _)| t == target) {
                return Err(Error::InvalidConfig(format!("parameter '{target}' bound twice")));
            }
            if !value.v.is_finite() {
                return Err(Error::InvalidConfig(format!("parameter '{target}' is not finite")));
            }
            scenario.param_value(*target)?;
            match target {
                ParamTarget::Mass => match &scenario.object {
                    ObjectModel::Attached { body } => model.set_body_mass(*body, *value, None)?,
                    ObjectModel::Container(c) => sphere = Some(FreeBody::with_mass(&c.sphere, *value)),
                    _ => unreachable!(),
                },
                ParamTarget::KMu => material.as_mut().expect("checked").k_mu = *value,
                ParamTarget::KLambda => material.as_mut().expect("checked").k_lambda = *value,
                ParamTarget::KE => contact.k_e = *value,
                ParamTarget::KD => contact.k_d = *value,
                ParamTarget::KF => contact.k_f = *value,
                ParamTarget::Mu => contact.mu = *value,
            }
        }
        let schedule = scenario.schedule.resolve(&scenario.tree)?;
        Ok(Self { scenario, model, contact, sphere, material, schedule })
    }

    pub fn model(&self) -> &Model<P> {
        &self.model
    }

    pub fn initial_state(&self) -> CoupledState<P> {
        let robot = SimState::from_values(&self.scenario.initial_q, &self.scenario.initial_qdot);
        let object = match &self.scenario.object {
            ObjectModel::Container(c) => ObjectState::Rigid(RigidState::at_rest(c.initial_position)),
            ObjectModel::Squeeze(s) => ObjectState::Soft(SoftState::at_rest(&s.mesh)),
            _ => ObjectState::None,
        };
        CoupledState { robot, object }
    }

    fn body_motion(&self, kin: &[LinkKinematics<P>], body: usize) -> BodyMotion<P> {
        let (pose, twist) = self.model.body_pose_twist(kin, body);
        BodyMotion { pose, twist }
    }

    /// One substep: forces from the state at the start of the step, then
    /// velocities, then positions.
    pub fn step(&self, state: &CoupledState<P>, tau: &[f64], dt: f64) -> Result<CoupledState<P>> {
        let gravity = self.scenario.config.gravity;
        let robot = &state.robot;
        let kin = self.model.kinematics(&robot.q, Some(&robot.qdot))?;
        let mut ext = ExternalForces::gravity(gravity);
        let object = match (&self.scenario.object, &state.object) {
            (ObjectModel::Container(c), ObjectState::Rigid(s)) => {
                let sphere = self.sphere.as_ref().expect("container has a sphere");
                let container = self.body_motion(&kin, c.carrier).offset(&c.box_pose.resize());
                let twist = SpatialVec::new(s.ang_vel, s.lin_vel - s.ang_vel.cross(&s.pose.pos));
                let ball = BodyMotion { pose: s.pose, twist };
                let nb = self.scenario.tree.bodies().len();
                let contacts: Vec<Contact<P>> = detect_sphere_in_box(&ball, c.radius, &container, c.half_extents)
                    .into_iter()
                    .map(|point| Contact { surface: c.carrier, body: nb, point })
                    .collect();
                let mut sphere_wrench = SpatialVec::ZERO;
                if !contacts.is_empty() {
                    let w = accumulate_wrenches(&contacts, &self.contact, nb + 1);
                    ext.wrenches.push(BodyWrench { body: c.carrier, wrench: w[c.carrier], frame: WrenchFrame::World });
                    sphere_wrench = torque_about(&w[nb], &s.pose.pos);
                }
                let acc = free_body_dynamics(sphere, &s.pose, &s.ang_vel, &sphere_wrench, gravity)?;
                ObjectState::Rigid(s.integrate(&acc, dt))
            }
            (ObjectModel::Squeeze(sq), ObjectState::Soft(s)) => {
                let material = self.material.as_ref().expect("squeeze has a material");
                let mut nodal = vec![Vec3::ZERO; s.positions.len()];
                for pad in &sq.pads {
                    let motion = self.body_motion(&kin, pad.body).offset(&pad.pose.resize());
                    let (f, reaction) = soft_rigid_contact(s, &motion, pad.half_extents, pad.thickness, &self.contact);
                    for (acc, f) in nodal.iter_mut().zip(f) {
                        *acc += f;
                    }
                    ext.wrenches.push(BodyWrench { body: pad.body, wrench: reaction, frame: WrenchFrame::World });
                }
                ObjectState::Soft(soft_step(&sq.mesh, material, s, &nodal, gravity, dt)?)
            }
            (_, o) => o.clone(),
        };
        let tau: Vec<DScalar<P>> = tau.iter().map(|&t| DScalar::constant(t)).collect();
        let qdd = self.model.forward_dynamics_with(&kin, robot, &tau, &ext)?;
        let qdot: Vec<DScalar<P>> = robot.qdot.iter().zip(&qdd).map(|(v, a)| *v + *a * dt).collect();
        let q = robot.q.iter().zip(&qdot).map(|(q, v)| *q + *v * dt).collect();
        Ok(CoupledState { robot: SimState { q, qdot }, object })
    }

    fn guard(&self, state: &CoupledState<P>) -> std::result::Result<(), String> {
        let check = |what: &str, x: DScalar<P>, limit: f64| {
            if !x.is_finite() {
                Err(format!("non-finite {what}"))
            } else if x.v.abs() > limit {
                Err(format!("{what} magnitude {:e} exceeds {limit:e}", x.v))
            } else {
                Ok(())
            }
        };
        for (q, v) in state.robot.q.iter().zip(&state.robot.qdot) {
            check("joint position", *q, MAX_POSITION)?;
            check("joint velocity", *v, MAX_VELOCITY)?;
        }
        let vecs: Box<dyn Iterator<Item = (&Vec3<P>, &Vec3<P>)>> = match &state.object {
            ObjectState::None => Box::new(std::iter::empty()),
            ObjectState::Rigid(r) => Box::new(std::iter::once((&r.pose.pos, &r.lin_vel)).chain(std::iter::once((&r.pose.pos, &r.ang_vel)))),
            ObjectState::Soft(s) => Box::new(s.positions.iter().zip(&s.velocities)),
        };
        for (x, v) in vecs {
            for k in 0..3 {
                check("object position", x[k], MAX_POSITION)?;
                check("object velocity", v[k], MAX_VELOCITY)?;
            }
        }
        Ok(())
    }

    /// Runs the full schedule and records every frame.
    pub fn run(&self) -> Result<Trajectory<P>> {
        self.run_with_final().map(|(traj, _)| traj)
    }

    /// Like [`run`](Self::run), also returning the state after the last frame.
    pub fn run_with_final(&self) -> Result<(Trajectory<P>, CoupledState<P>)> {
        let cfg = &self.scenario.config;
        let frames = cfg.frames();
        let dt = cfg.dt();
        let mut traj = Trajectory {
            times: Vec::with_capacity(frames + 1),
            joint_names: self.scenario.tree.coordinate_names(),
            joint_positions: Vec::with_capacity(frames + 1),
            joint_velocities: Vec::with_capacity(frames + 1),
            object_positions: self.scenario.has_object_positions().then(Vec::new),
        };
        let mut state = self.initial_state();
        let record = |traj: &mut Trajectory<P>, state: &CoupledState<P>, frame: usize| {
            traj.times.push(frame as f64 / cfg.frame_rate);
            traj.joint_positions.push(state.robot.q.clone());
            traj.joint_velocities.push(state.robot.qdot.clone());
            if let (Some(o), Some(p)) = (traj.object_positions.as_mut(), state.object_position()) {
                o.push(p);
            }
        };
        record(&mut traj, &state, 0);
        for frame in 0..frames {
            let tau = self.schedule.at(frame as f64 / cfg.frame_rate);
            for sub in 0..cfg.substeps {
                let step = frame * cfg.substeps + sub;
                state = self.step(&state, &tau, dt).map_err(|e| match e {
                    Error::InvertedElement { tet, det } => Error::InversionDuringStep { step, frame, tet, det },
                    Error::NonFinite(what) => Error::Divergence { step, frame, detail: format!("non-finite {what}") },
                    e => e,
                })?;
                self.guard(&state).map_err(|detail| Error::Divergence { step, frame, detail })?;
            }
            record(&mut traj, &state, frame + 1);
        }
        Ok((traj, state))
    }

    /// Energy of the whole system in `state`.
    pub fn energy(&self, state: &CoupledState<P>) -> Result<Energy> {
        let g = self.scenario.config.gravity;
        let robot = &state.robot;
        let kin = self.model.kinematics(&robot.q, None)?;
        let mut e = Energy {
            kinetic: self.model.kinetic_energy(&robot.q, &robot.qdot)?.v,
            potential: self.model.potential_energy(&kin, g).v,
            elastic: 0.0,
        };
        let gv = Vec3::<P>::from_f64(g);
        match &state.object {
            ObjectState::None => {}
            ObjectState::Rigid(r) => {
                let body = self.sphere.as_ref().expect("rigid object");
                let m = body.mass;
                let rot = &r.pose.rot;
                let iw = rot.mul_mat(&body.inertia).mul_mat(&rot.transpose());
                e.kinetic += (m * r.lin_vel.norm_squared() * 0.5 + r.ang_vel.dot(&iw.mul_vec(&r.ang_vel)) * 0.5).v;
                e.potential -= (m * gv.dot(&r.pose.pos)).v;
            }
            ObjectState::Soft(s) => {
                let ObjectModel::Squeeze(sq) = &self.scenario.object else { unreachable!() };
                for (i, (x, v)) in s.positions.iter().zip(&s.velocities).enumerate() {
                    let m = sq.mesh.lumped_mass[i];
                    e.kinetic += 0.5 * m * v.norm_squared().v;
                    e.potential -= m * gv.dot(x).v;
                }
                e.elastic = elastic_energy(&sq.mesh, &s.positions, self.material.as_ref().expect("soft object"))?.v;
            }
        }
        Ok(e)
    }
}

/// Runs `scenario` with the given parameter bindings.
pub fn simulate<const P: usize>(scenario: &Scenario, bind: &[(ParamTarget, DScalar<P>)]) -> Result<Trajectory<P>> {
    Simulator::new(scenario, bind)?.run()
}

/// Energy terms of a state, with the scenario's own parameter values.
pub fn energy_probe(scenario: &Scenario, state: &CoupledState<0>) -> Result<Energy> {
    Simulator::<0>::new(scenario, &[])?.energy(state)
}
