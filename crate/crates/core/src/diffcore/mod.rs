//! Numerical kernel shared by the dynamics modules: dual scalars, small
//! fixed-size linear algebra, spatial vectors, and a dense solver.

mod dense;
mod dual;
mod linalg;
mod spatial;

pub use dense::{solve_dense, DenseMat};
pub use dual::{activate_params, extract_grad, extract_value, DScalar, MAX_PARAMS};
pub use linalg::{Mat3, Vec3};
pub use spatial::{SpatialInertia, SpatialMat, SpatialVec, Transform};
