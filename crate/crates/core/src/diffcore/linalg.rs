//! Fixed-size 3-vectors and 3×3 matrices over `DScalar`.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use super::DScalar;

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Vec3<const P: usize>(pub [DScalar<P>; 3]);

/// Row-major 3×3 matrix.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Mat3<const P: usize>(pub [[DScalar<P>; 3]; 3]);

impl<const P: usize> Vec3<P> {
    pub const ZERO: Self = Self([DScalar::ZERO; 3]);

    pub fn new(x: DScalar<P>, y: DScalar<P>, z: DScalar<P>) -> Self {
        Self([x, y, z])
    }

    pub fn from_f64(v: [f64; 3]) -> Self {
        Self(v.map(DScalar::constant))
    }

    pub fn values(&self) -> [f64; 3] {
        self.0.map(|s| s.v)
    }

    pub fn x(&self) -> DScalar<P> {
        self.0[0]
    }
    pub fn y(&self) -> DScalar<P> {
        self.0[1]
    }
    pub fn z(&self) -> DScalar<P> {
        self.0[2]
    }

    #[inline]
    pub fn dot(&self, o: &Self) -> DScalar<P> {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    #[inline]
    pub fn cross(&self, o: &Self) -> Self {
        let [a0, a1, a2] = self.0;
        let [b0, b1, b2] = o.0;
        Self([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0])
    }

    #[inline]
    pub fn scale(&self, s: DScalar<P>) -> Self {
        Self(self.0.map(|x| x * s))
    }

    #[inline]
    pub fn scale_f(&self, s: f64) -> Self {
        Self(self.0.map(|x| x * s))
    }

    pub fn norm_squared(&self) -> DScalar<P> {
        self.dot(self)
    }

    pub fn norm(&self) -> DScalar<P> {
        self.norm_squared().sqrt()
    }

    /// Outer product `self · oᵀ`.
    pub fn outer(&self, o: &Self) -> Mat3<P> {
        let mut m = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[i] * o.0[j];
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|s| s.is_finite())
    }

    pub fn resize<const Q: usize>(&self) -> Vec3<Q> {
        Vec3(self.0.map(|s| s.resize()))
    }
}

impl<const P: usize> Index<usize> for Vec3<P> {
    type Output = DScalar<P>;
    fn index(&self, i: usize) -> &DScalar<P> {
        &self.0[i]
    }
}

impl<const P: usize> IndexMut<usize> for Vec3<P> {
    fn index_mut(&mut self, i: usize) -> &mut DScalar<P> {
        &mut self.0[i]
    }
}

impl<const P: usize> Add for Vec3<P> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl<const P: usize> Sub for Vec3<P> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl<const P: usize> Neg for Vec3<P> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self(self.0.map(|x| -x))
    }
}

impl<const P: usize> AddAssign for Vec3<P> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<const P: usize> SubAssign for Vec3<P> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<const P: usize> Mul<DScalar<P>> for Vec3<P> {
    type Output = Self;
    #[inline]
    fn mul(self, s: DScalar<P>) -> Self {
        self.scale(s)
    }
}

impl<const P: usize> Mul<f64> for Vec3<P> {
    type Output = Self;
    #[inline]
    fn mul(self, s: f64) -> Self {
        self.scale_f(s)
    }
}

impl<const P: usize> Mat3<P> {
    pub const ZERO: Self = Self([[DScalar::ZERO; 3]; 3]);

    pub fn identity() -> Self {
        Self::diagonal(DScalar::ONE)
    }

    pub fn diagonal(s: DScalar<P>) -> Self {
        let mut m = Self::ZERO;
        for i in 0..3 {
            m.0[i][i] = s;
        }
        m
    }

    pub fn from_f64(m: [[f64; 3]; 3]) -> Self {
        Self(m.map(|r| r.map(DScalar::constant)))
    }

    pub fn values(&self) -> [[f64; 3]; 3] {
        self.0.map(|r| r.map(|s| s.v))
    }

    pub fn from_cols(c0: Vec3<P>, c1: Vec3<P>, c2: Vec3<P>) -> Self {
        let mut m = Self::ZERO;
        for i in 0..3 {
            m.0[i][0] = c0.0[i];
            m.0[i][1] = c1.0[i];
            m.0[i][2] = c2.0[i];
        }
        m
    }

    pub fn col(&self, j: usize) -> Vec3<P> {
        Vec3([self.0[0][j], self.0[1][j], self.0[2][j]])
    }

    /// Skew-symmetric matrix with `skew(a) b = a × b`.
    pub fn skew(a: &Vec3<P>) -> Self {
        let z = DScalar::ZERO;
        let [x, y, w] = a.0;
        Self([[z, -w, y], [w, z, -x], [-y, x, z]])
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[j][i];
            }
        }
        m
    }

    #[inline]
    pub fn mul_vec(&self, v: &Vec3<P>) -> Vec3<P> {
        let r = |i: usize| self.0[i][0] * v.0[0] + self.0[i][1] * v.0[1] + self.0[i][2] * v.0[2];
        Vec3([r(0), r(1), r(2)])
    }

    /// `selfᵀ · v` without forming the transpose.
    #[inline]
    pub fn tr_mul_vec(&self, v: &Vec3<P>) -> Vec3<P> {
        let r = |j: usize| self.0[0][j] * v.0[0] + self.0[1][j] * v.0[1] + self.0[2][j] * v.0[2];
        Vec3([r(0), r(1), r(2)])
    }

    pub fn mul_mat(&self, o: &Self) -> Self {
        let mut m = Self::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[i][0] * o.0[0][j] + self.0[i][1] * o.0[1][j] + self.0[i][2] * o.0[2][j];
            }
        }
        m
    }

    pub fn scale(&self, s: DScalar<P>) -> Self {
        Self(self.0.map(|r| r.map(|x| x * s)))
    }

    pub fn scale_f(&self, s: f64) -> Self {
        Self(self.0.map(|r| r.map(|x| x * s)))
    }

    pub fn trace(&self) -> DScalar<P> {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn det(&self) -> DScalar<P> {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Cofactor matrix; equals `det · inverse()ᵀ`.
    pub fn cofactor(&self) -> Self {
        let m = &self.0;
        let c = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        Self([
            [c(1, 2, 1, 2), -c(1, 2, 0, 2), c(1, 2, 0, 1)],
            [-c(0, 2, 1, 2), c(0, 2, 0, 2), -c(0, 2, 0, 1)],
            [c(0, 1, 1, 2), -c(0, 1, 0, 2), c(0, 1, 0, 1)],
        ])
    }

    /// Inverse via cofactors. Singular input gives non-finite entries.
    pub fn inverse(&self) -> Self {
        let inv_det = self.det().recip();
        self.cofactor().transpose().scale(inv_det)
    }

    /// Frobenius inner product `Σ aᵢⱼ bᵢⱼ`.
    pub fn ddot(&self, o: &Self) -> DScalar<P> {
        let mut s = DScalar::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                s += self.0[i][j] * o.0[i][j];
            }
        }
        s
    }

    /// Rotation by `angle` about unit `axis` (Rodrigues).
    pub fn axis_angle(axis: [f64; 3], angle: DScalar<P>) -> Self {
        let (s, c) = angle.sin_cos();
        let k = Vec3::<P>::from_f64(axis);
        let kk = k.outer(&k);
        let kx = Self::skew(&k);
        let one_c = 1.0 - c;
        let mut m = Self::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                let id = if i == j { c } else { DScalar::ZERO };
                m.0[i][j] = id + kx.0[i][j] * s + kk.0[i][j] * one_c;
            }
        }
        m
    }

    /// Exponential map of a rotation vector. Uses a series near zero so the
    /// tangents stay finite at rest.
    pub fn exp_so3(w: &Vec3<P>) -> Self {
        let th2 = w.norm_squared();
        let (a, b) = if th2.v < 1e-10 {
            // sin(t)/t and (1 - cos t)/t² to fourth order
            (1.0 - th2 * (1.0 / 6.0) + th2 * th2 * (1.0 / 120.0), 0.5 - th2 * (1.0 / 24.0) + th2 * th2 * (1.0 / 720.0))
        } else {
            let th = th2.sqrt();
            let (s, c) = th.sin_cos();
            (s / th, (1.0 - c) / th2)
        };
        let k = Self::skew(w);
        let k2 = k.mul_mat(&k);
        let mut m = Self::identity();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] += k.0[i][j] * a + k2.0[i][j] * b;
            }
        }
        m
    }

    /// Rotation from roll-pitch-yaw (fixed-axis X, then Y, then Z).
    pub fn from_rpy(rpy: [f64; 3]) -> Self {
        let rx = Self::axis_angle([1.0, 0.0, 0.0], DScalar::constant(rpy[0]));
        let ry = Self::axis_angle([0.0, 1.0, 0.0], DScalar::constant(rpy[1]));
        let rz = Self::axis_angle([0.0, 0.0, 1.0], DScalar::constant(rpy[2]));
        rz.mul_mat(&ry).mul_mat(&rx)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|r| r.iter().all(|s| s.is_finite()))
    }

    pub fn resize<const Q: usize>(&self) -> Mat3<Q> {
        Mat3(self.0.map(|r| r.map(|s| s.resize())))
    }
}

impl<const P: usize> Add for Mat3<P> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut m = self;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] += o.0[i][j];
            }
        }
        m
    }
}

impl<const P: usize> Sub for Mat3<P> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let mut m = self;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] -= o.0[i][j];
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type V = Vec3<0>;
    type M = Mat3<0>;

    fn close(a: [[f64; 3]; 3], b: [[f64; 3]; 3], tol: f64) -> bool {
        (0..3).all(|i| (0..3).all(|j| (a[i][j] - b[i][j]).abs() < tol))
    }

    #[test]
    fn cross_and_skew_agree() {
        let a = V::from_f64([1.0, -2.0, 0.5]);
        let b = V::from_f64([0.3, 0.7, -1.1]);
        assert_eq!(a.cross(&b).values(), M::skew(&a).mul_vec(&b).values());
    }

    #[test]
    fn inverse_roundtrip() {
        let m = M::from_f64([[2.0, 0.3, -0.1], [0.5, 1.5, 0.2], [0.0, -0.4, 3.0]]);
        let p = m.mul_mat(&m.inverse()).values();
        assert!(close(p, M::identity().values(), 1e-14));
    }

    #[test]
    fn rodrigues_is_orthonormal() {
        let axis = {
            let n = (1.0f64 + 4.0 + 9.0).sqrt();
            [1.0 / n, 2.0 / n, 3.0 / n]
        };
        let r = M::axis_angle(axis, DScalar::constant(0.7));
        let rtr = r.transpose().mul_mat(&r).values();
        assert!(close(rtr, M::identity().values(), 1e-14));
        assert!((r.det().v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exp_so3_matches_axis_angle() {
        let w = V::from_f64([0.0, 0.0, 0.4]);
        let a = M::exp_so3(&w).values();
        let b = M::axis_angle([0.0, 0.0, 1.0], DScalar::constant(0.4)).values();
        assert!(close(a, b, 1e-14));
        // tangent finite at zero rotation
        let w0 = Vec3::<1>([DScalar::variable(0.0, 0), DScalar::ZERO, DScalar::ZERO]);
        assert!(Mat3::exp_so3(&w0).is_finite());
    }
}
