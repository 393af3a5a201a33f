//! Unconstrained rigid bodies (objects outside the robot's tree).

use super::tree::Body;
use crate::diffcore::{DScalar, Mat3, SpatialVec, Transform, Vec3};
use crate::error::{Error, Result};

/// Mass properties of a free body about its center of mass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FreeBody<const P: usize> {
    pub mass: DScalar<P>,
    /// Inertia about the center of mass, body axes.
    pub inertia: Mat3<P>,
}

impl<const P: usize> FreeBody<P> {
    /// Lifts a body description; the body frame is taken to sit at the
    /// center of mass.
    pub fn from_body(b: &Body) -> Self {
        Self { mass: DScalar::constant(b.mass), inertia: Mat3::from_f64(b.inertia) }
    }

    /// Same shape with a different mass; inertia scales proportionally.
    pub fn with_mass(b: &Body, mass: DScalar<P>) -> Self {
        let inertia = if b.mass > 0.0 { Mat3::from_f64(b.inertia).scale(mass / b.mass) } else { Mat3::from_f64(b.inertia) };
        Self { mass, inertia }
    }
}

/// Pose and twist of a free body, all in world coordinates. The linear
/// velocity is that of the center of mass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidState<const P: usize> {
    pub pose: Transform<P>,
    pub ang_vel: Vec3<P>,
    pub lin_vel: Vec3<P>,
}

impl<const P: usize> RigidState<P> {
    pub fn at_rest(position: [f64; 3]) -> Self {
        Self { pose: Transform::translation(Vec3::from_f64(position)), ang_vel: Vec3::ZERO, lin_vel: Vec3::ZERO }
    }

    pub fn twist(&self) -> SpatialVec<P> {
        SpatialVec::new(self.ang_vel, self.lin_vel)
    }

    /// Velocity of the material point currently at world position `p`.
    pub fn point_velocity(&self, p: &Vec3<P>) -> Vec3<P> {
        self.lin_vel + self.ang_vel.cross(&(*p - self.pose.pos))
    }

    /// Semi-implicit Euler: velocities first, then the pose with the new
    /// velocities.
    pub fn integrate(&self, acc: &SpatialVec<P>, dt: f64) -> Self {
        let ang_vel = self.ang_vel + acc.ang.scale_f(dt);
        let lin_vel = self.lin_vel + acc.lin.scale_f(dt);
        let rot = Mat3::exp_so3(&ang_vel.scale_f(dt)).mul_mat(&self.pose.rot);
        let pos = self.pose.pos + lin_vel.scale_f(dt);
        Self { pose: Transform::new(rot, pos), ang_vel, lin_vel }
    }

    pub fn is_finite(&self) -> bool {
        self.pose.pos.is_finite() && self.pose.rot.is_finite() && self.ang_vel.is_finite() && self.lin_vel.is_finite()
    }
}

/// Newton-Euler acceleration `(ω̇, a)` of a free body under a wrench
/// (torque about the center of mass, force; world coordinates) and gravity.
pub fn free_body_dynamics<const P: usize>(
    body: &FreeBody<P>,
    pose: &Transform<P>,
    ang_vel: &Vec3<P>,
    wrench: &SpatialVec<P>,
    gravity: [f64; 3],
) -> Result<SpatialVec<P>> {
    if !(body.mass.v > 0.0) {
        return Err(Error::ZeroMass("free body".into()));
    }
    let r = &pose.rot;
    let i_world = r.mul_mat(&body.inertia).mul_mat(&r.transpose());
    let gyro = ang_vel.cross(&i_world.mul_vec(ang_vel));
    let rhs = wrench.ang - gyro;
    let ang = if i_world.det().v.abs() > 0.0 { i_world.inverse().mul_vec(&rhs) } else { Vec3::ZERO };
    let lin = wrench.lin.scale(body.mass.recip()) + Vec3::from_f64(gravity);
    Ok(SpatialVec::new(ang, lin))
}
