//! Spatial (6D) algebra: angular-before-linear motion and force vectors,
//! rigid transforms, and rigid-body spatial inertia.
//!
//! A `Transform` stores the pose of a child frame in its parent: `rot` has
//! the child axes as columns and `pos` is the child origin, both in parent
//! coordinates.

use std::ops::{Add, AddAssign, Neg, Sub};

use super::{DScalar, Mat3, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct SpatialVec<const P: usize> {
    pub ang: Vec3<P>,
    pub lin: Vec3<P>,
}

impl<const P: usize> SpatialVec<P> {
    pub const ZERO: Self = Self { ang: Vec3::ZERO, lin: Vec3::ZERO };

    pub fn new(ang: Vec3<P>, lin: Vec3<P>) -> Self {
        Self { ang, lin }
    }

    pub fn to_array(&self) -> [DScalar<P>; 6] {
        [self.ang[0], self.ang[1], self.ang[2], self.lin[0], self.lin[1], self.lin[2]]
    }

    pub fn from_array(a: [DScalar<P>; 6]) -> Self {
        Self { ang: Vec3([a[0], a[1], a[2]]), lin: Vec3([a[3], a[4], a[5]]) }
    }

    pub fn dot(&self, o: &Self) -> DScalar<P> {
        self.ang.dot(&o.ang) + self.lin.dot(&o.lin)
    }

    pub fn scale(&self, s: DScalar<P>) -> Self {
        Self { ang: self.ang.scale(s), lin: self.lin.scale(s) }
    }

    /// Motion cross product `self ×ₘ m`.
    pub fn cross_motion(&self, m: &Self) -> Self {
        Self { ang: self.ang.cross(&m.ang), lin: self.ang.cross(&m.lin) + self.lin.cross(&m.ang) }
    }

    /// Force cross product `self ×f f`.
    pub fn cross_force(&self, f: &Self) -> Self {
        Self { ang: self.ang.cross(&f.ang) + self.lin.cross(&f.lin), lin: self.ang.cross(&f.lin) }
    }

    /// Velocity of the material point at `r` (same coordinates as `self`).
    pub fn point_velocity(&self, r: &Vec3<P>) -> Vec3<P> {
        self.lin + self.ang.cross(r)
    }

    pub fn is_finite(&self) -> bool {
        self.ang.is_finite() && self.lin.is_finite()
    }
}

impl<const P: usize> Add for SpatialVec<P> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { ang: self.ang + o.ang, lin: self.lin + o.lin }
    }
}

impl<const P: usize> Sub for SpatialVec<P> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self { ang: self.ang - o.ang, lin: self.lin - o.lin }
    }
}

impl<const P: usize> Neg for SpatialVec<P> {
    type Output = Self;
    fn neg(self) -> Self {
        Self { ang: -self.ang, lin: -self.lin }
    }
}

impl<const P: usize> AddAssign for SpatialVec<P> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

/// Dense 6×6 matrix, mostly used to inspect spatial inertias.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpatialMat<const P: usize>(pub [[DScalar<P>; 6]; 6]);

impl<const P: usize> SpatialMat<P> {
    pub fn mul_vec(&self, v: &SpatialVec<P>) -> SpatialVec<P> {
        let a = v.to_array();
        let mut out = [DScalar::ZERO; 6];
        for (i, o) in out.iter_mut().enumerate() {
            for (j, x) in a.iter().enumerate() {
                *o += self.0[i][j] * *x;
            }
        }
        SpatialVec::from_array(out)
    }

    /// Max-norm asymmetry relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let mut max_entry: f64 = 0.0;
        let mut max_diff: f64 = 0.0;
        for i in 0..6 {
            for j in 0..6 {
                max_entry = max_entry.max(self.0[i][j].v.abs());
                max_diff = max_diff.max((self.0[i][j].v - self.0[j][i].v).abs());
            }
        }
        if max_entry == 0.0 {
            0.0
        } else {
            max_diff / max_entry
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transform<const P: usize> {
    pub rot: Mat3<P>,
    pub pos: Vec3<P>,
}

impl<const P: usize> Default for Transform<P> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<const P: usize> Transform<P> {
    pub fn identity() -> Self {
        Self { rot: Mat3::identity(), pos: Vec3::ZERO }
    }

    pub fn new(rot: Mat3<P>, pos: Vec3<P>) -> Self {
        Self { rot, pos }
    }

    pub fn from_xyz_rpy(xyz: [f64; 3], rpy: [f64; 3]) -> Self {
        Self { rot: Mat3::from_rpy(rpy), pos: Vec3::from_f64(xyz) }
    }

    pub fn translation(p: Vec3<P>) -> Self {
        Self { rot: Mat3::identity(), pos: p }
    }

    /// `self ∘ o`: pose of `o`'s child expressed in `self`'s parent.
    pub fn compose(&self, o: &Self) -> Self {
        Self { rot: self.rot.mul_mat(&o.rot), pos: self.pos + self.rot.mul_vec(&o.pos) }
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rot.transpose();
        Self { rot: rt, pos: -rt.mul_vec(&self.pos) }
    }

    /// Child-frame point to parent coordinates.
    pub fn apply_point(&self, p: &Vec3<P>) -> Vec3<P> {
        self.pos + self.rot.mul_vec(p)
    }

    /// Parent-frame point to child coordinates.
    pub fn inv_apply_point(&self, p: &Vec3<P>) -> Vec3<P> {
        self.rot.tr_mul_vec(&(*p - self.pos))
    }

    /// Motion vector from parent to child coordinates.
    pub fn motion_to_child(&self, m: &SpatialVec<P>) -> SpatialVec<P> {
        let lin = m.lin - self.pos.cross(&m.ang);
        SpatialVec { ang: self.rot.tr_mul_vec(&m.ang), lin: self.rot.tr_mul_vec(&lin) }
    }

    /// Motion vector from child to parent coordinates.
    pub fn motion_to_parent(&self, m: &SpatialVec<P>) -> SpatialVec<P> {
        let ang = self.rot.mul_vec(&m.ang);
        SpatialVec { ang, lin: self.rot.mul_vec(&m.lin) + self.pos.cross(&ang) }
    }

    /// Force vector from child to parent coordinates.
    pub fn force_to_parent(&self, f: &SpatialVec<P>) -> SpatialVec<P> {
        let lin = self.rot.mul_vec(&f.lin);
        SpatialVec { ang: self.rot.mul_vec(&f.ang) + self.pos.cross(&lin), lin }
    }

    /// Force vector from parent to child coordinates.
    pub fn force_to_child(&self, f: &SpatialVec<P>) -> SpatialVec<P> {
        let ang = f.ang - self.pos.cross(&f.lin);
        SpatialVec { ang: self.rot.tr_mul_vec(&ang), lin: self.rot.tr_mul_vec(&f.lin) }
    }

    pub fn resize<const Q: usize>(&self) -> Transform<Q> {
        Transform { rot: self.rot.resize(), pos: self.pos.resize() }
    }
}

/// Rigid-body spatial inertia about a frame origin: mass `m`, first moment
/// `h = m·c`, and rotational inertia `i_o` about the origin. This form adds
/// componentwise and stays valid for massless bodies.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct SpatialInertia<const P: usize> {
    pub mass: DScalar<P>,
    pub h: Vec3<P>,
    pub i_o: Mat3<P>,
}

impl<const P: usize> SpatialInertia<P> {
    pub const ZERO: Self = Self { mass: DScalar::ZERO, h: Vec3::ZERO, i_o: Mat3::ZERO };

    /// From mass, center of mass and inertia about the center of mass.
    pub fn from_com(mass: DScalar<P>, com: Vec3<P>, i_c: Mat3<P>) -> Self {
        let h = com.scale(mass);
        // parallel axis: m (|c|² 1 − c cᵀ)
        let shift = Mat3::diagonal(com.norm_squared()) - com.outer(&com);
        Self { mass, h, i_o: i_c + shift.scale(mass) }
    }

    pub fn mul_motion(&self, v: &SpatialVec<P>) -> SpatialVec<P> {
        SpatialVec {
            ang: self.i_o.mul_vec(&v.ang) + self.h.cross(&v.lin),
            lin: v.lin.scale(self.mass) - self.h.cross(&v.ang),
        }
    }

    /// Re-expresses an inertia given in a child frame in the parent frame.
    pub fn to_parent(&self, x: &Transform<P>) -> Self {
        let r = &x.rot;
        let p = &x.pos;
        let h_a = r.mul_vec(&self.h);
        let i_rot = r.mul_mat(&self.i_o).mul_mat(&r.transpose());
        let m = self.mass;
        // origin shift by p without dividing by m
        let diag = p.norm_squared() * m + p.dot(&h_a) * 2.0;
        let off = p.outer(p).scale(m) + p.outer(&h_a) + h_a.outer(p);
        Self { mass: m, h: h_a + p.scale(m), i_o: i_rot + Mat3::diagonal(diag) - off }
    }

    pub fn to_matrix(&self) -> SpatialMat<P> {
        let mut out = [[DScalar::ZERO; 6]; 6];
        let hx = Mat3::skew(&self.h);
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = self.i_o.0[i][j];
                out[i][j + 3] = hx.0[i][j];
                out[i + 3][j] = -hx.0[i][j];
            }
            out[i + 3][i + 3] = self.mass;
        }
        SpatialMat(out)
    }
}

impl<const P: usize> Add for SpatialInertia<P> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { mass: self.mass + o.mass, h: self.h + o.h, i_o: self.i_o + o.i_o }
    }
}

impl<const P: usize> AddAssign for SpatialInertia<P> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type D = DScalar<0>;

    fn sample_transform() -> Transform<0> {
        Transform::from_xyz_rpy([0.1, -0.2, 0.3], [0.4, -0.5, 0.6])
    }

    fn sample_inertia() -> SpatialInertia<0> {
        SpatialInertia::from_com(
            D::constant(0.7),
            Vec3::from_f64([0.02, -0.01, 0.05]),
            Mat3::from_f64([[2e-3, 1e-4, 0.0], [1e-4, 3e-3, -2e-4], [0.0, -2e-4, 1.5e-3]]),
        )
    }

    fn sv(a: [f64; 6]) -> SpatialVec<0> {
        SpatialVec::from_array(a.map(D::constant))
    }

    fn assert_sv_close(a: &SpatialVec<0>, b: &SpatialVec<0>, tol: f64) {
        let (a, b) = (a.to_array(), b.to_array());
        for i in 0..6 {
            assert!((a[i].v - b[i].v).abs() < tol, "{i}: {} vs {}", a[i].v, b[i].v);
        }
    }

    #[test]
    fn motion_roundtrip() {
        let x = sample_transform();
        let m = sv([0.3, -1.0, 2.0, 0.5, 0.1, -0.7]);
        assert_sv_close(&x.motion_to_parent(&x.motion_to_child(&m)), &m, 1e-14);
        let f = sv([1.0, 2.0, 3.0, -0.4, 0.2, 0.9]);
        assert_sv_close(&x.force_to_parent(&x.force_to_child(&f)), &f, 1e-14);
    }

    #[test]
    fn power_is_frame_invariant() {
        let x = sample_transform();
        let m = sv([0.3, -1.0, 2.0, 0.5, 0.1, -0.7]);
        let f = sv([1.0, 2.0, 3.0, -0.4, 0.2, 0.9]);
        let p_child = x.motion_to_child(&m).dot(&x.force_to_child(&f)).v;
        assert!((p_child - m.dot(&f).v).abs() < 1e-14);
    }

    #[test]
    fn inertia_transform_consistent_with_vector_transforms() {
        // I_parent v = X* I_child X v
        let x = sample_transform();
        let ic = sample_inertia();
        let v = sv([0.3, -1.0, 2.0, 0.5, 0.1, -0.7]);
        let direct = ic.to_parent(&x).mul_motion(&v);
        let via = x.force_to_parent(&ic.mul_motion(&x.motion_to_child(&v)));
        assert_sv_close(&direct, &via, 1e-14);
    }

    #[test]
    fn inertia_matrix_symmetric() {
        let m = sample_inertia().to_parent(&sample_transform()).to_matrix();
        assert!(m.asymmetry() < 1e-12);
        let v = sv([0.3, -1.0, 2.0, 0.5, 0.1, -0.7]);
        assert_sv_close(&m.mul_vec(&v), &sample_inertia().to_parent(&sample_transform()).mul_motion(&v), 1e-15);
    }

    #[test]
    fn rotation_blocks_orthonormal() {
        let r = sample_transform().rot;
        let rtr = r.transpose().mul_mat(&r).values();
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((rtr[i][j] - e).abs() < 1e-10);
            }
        }
    }
}
