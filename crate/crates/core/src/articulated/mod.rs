//! Articulated rigid-body dynamics for kinematic trees, plus free bodies.

mod dynamics;
mod free_body;
mod tree;

pub use dynamics::{BodyWrench, ExternalForces, LinkKinematics, Model, SimState, WrenchFrame};
pub use free_body::{free_body_dynamics, FreeBody, RigidState};
pub use tree::{Body, Joint, JointKind, KinematicTree};
