//! Differentiable simulation of robot arms, rigid objects and soft bodies,
//! with gradient-based identification of physical parameters.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod articulated;
pub mod contact;
pub mod diffcore;
pub mod error;
pub mod sim;
pub mod sysid;
pub mod softbody;

pub use error::{Error, Result};
pub use diffcore::{DScalar, Mat3, Transform, Vec3};
pub use sim::{ParamTarget, Scenario, SimConfig, Trajectory};
pub use sysid::{CalibrationResult, OptimConfig, ParamSpec};
