//! Penalty contact between rigid primitives and against soft-body nodes.

use crate::diffcore::{DScalar, SpatialVec, Transform, Vec3};
use crate::error::{Error, Result};

/// Tangential speeds below this are treated as sticking (m/s).
pub const TANGENT_DEADZONE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContactParams<const P: usize> {
    /// Normal stiffness, N/m.
    pub k_e: DScalar<P>,
    /// Normal damping, N·s/m.
    pub k_d: DScalar<P>,
    /// Friction stiffness, N·s/m.
    pub k_f: DScalar<P>,
    pub mu: DScalar<P>,
    /// Zero the normal force instead of letting damping pull the bodies
    /// together while they separate.
    pub non_adhesive: bool,
}

impl<const P: usize> Default for ContactParams<P> {
    fn default() -> Self {
        Self::new(1.0e4, 10.0, 10.0, 0.5)
    }
}

impl<const P: usize> ContactParams<P> {
    pub fn new(k_e: f64, k_d: f64, k_f: f64, mu: f64) -> Self {
        Self {
            k_e: DScalar::constant(k_e),
            k_d: DScalar::constant(k_d),
            k_f: DScalar::constant(k_f),
            mu: DScalar::constant(mu),
            non_adhesive: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("k_e", self.k_e), ("k_d", self.k_d), ("k_f", self.k_f), ("mu", self.mu)] {
            if !(v.v.is_finite() && v.v >= 0.0) {
                return Err(Error::InvalidConfig(format!("contact {name} must be finite and non-negative, got {}", v.v)));
            }
        }
        if self.mu.v > 2.0 {
            return Err(Error::InvalidConfig(format!("friction coefficient {} exceeds 2", self.mu.v)));
        }
        Ok(())
    }
}

/// One penetrating contact. The normal points from the surface into the
/// penetrating body; velocities are of the penetrating body relative to the
/// surface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContactPoint<const P: usize> {
    pub point: Vec3<P>,
    pub normal: Vec3<P>,
    pub depth: DScalar<P>,
    pub v_n: Vec3<P>,
    pub v_t: Vec3<P>,
}

impl<const P: usize> ContactPoint<P> {
    /// Splits the relative velocity along the normal.
    pub fn new(point: Vec3<P>, normal: Vec3<P>, depth: DScalar<P>, v_rel: Vec3<P>) -> Self {
        let v_n = normal.scale(normal.dot(&v_rel));
        Self { point, normal, depth, v_n, v_t: v_rel - v_n }
    }
}

/// A contact between two bodies, identified by the caller's indices. The
/// force computed for `point` acts on `body` and its reaction on `surface`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contact<const P: usize> {
    pub surface: usize,
    pub body: usize,
    pub point: ContactPoint<P>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    Sphere { radius: f64 },
    /// Hollow box; contacts are against the inner walls.
    Box { half_extents: [f64; 3] },
    /// Half space `n·x ≤ offset` in the shape frame is solid.
    Plane { normal: [f64; 3], offset: f64 },
    /// Rectangle in the local xy plane, pushing along local +z. Points below
    /// the surface count as penetrating down to `thickness`.
    Pad { half_extents: [f64; 2], thickness: f64 },
}

impl Shape {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Shape::Sphere { radius } => *radius > 0.0,
            Shape::Box { half_extents } => half_extents.iter().all(|h| *h > 0.0),
            Shape::Plane { normal, offset } => {
                let n = normal.iter().map(|x| x * x).sum::<f64>().sqrt();
                (n - 1.0).abs() < 1e-9 && offset.is_finite()
            }
            Shape::Pad { half_extents, thickness } => half_extents.iter().all(|h| *h > 0.0) && *thickness > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid shape dimensions: {self:?}")))
        }
    }
}

/// World pose and world twist (angular velocity, linear velocity of the
/// point at the world origin) of a body.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BodyMotion<const P: usize> {
    pub pose: Transform<P>,
    pub twist: SpatialVec<P>,
}

impl<const P: usize> BodyMotion<P> {
    pub fn fixed(pose: Transform<P>) -> Self {
        Self { pose, twist: SpatialVec::ZERO }
    }

    pub fn velocity_at(&self, p: &Vec3<P>) -> Vec3<P> {
        self.twist.point_velocity(p)
    }

    /// Composes a fixed local offset, e.g. a shape's pose in its body.
    pub fn offset(&self, local: &Transform<P>) -> Self {
        Self { pose: self.pose.compose(local), twist: self.twist }
    }
}

/// Contacts of a sphere against the inner walls of a box, at most one per
/// wall.
pub fn detect_sphere_in_box<const P: usize>(
    sphere: &BodyMotion<P>,
    radius: f64,
    container: &BodyMotion<P>,
    half_extents: [f64; 3],
) -> Vec<ContactPoint<P>> {
    let center = sphere.pose.pos;
    let local = container.pose.inv_apply_point(&center);
    let mut out = Vec::new();
    for axis in 0..3 {
        for sign in [1.0, -1.0] {
            let depth = local[axis] * sign - (half_extents[axis] - radius);
            if !(depth.v > 0.0) {
                continue;
            }
            let normal = container.pose.rot.col(axis).scale_f(-sign);
            let point = center - normal.scale(DScalar::constant(radius) - depth * 0.5);
            let v_rel = sphere.velocity_at(&point) - container.velocity_at(&point);
            out.push(ContactPoint::new(point, normal, depth, v_rel));
        }
    }
    out
}

/// Contact of a sphere with a solid half space.
pub fn detect_sphere_plane<const P: usize>(
    sphere: &BodyMotion<P>,
    radius: f64,
    plane: &BodyMotion<P>,
    normal: [f64; 3],
    offset: f64,
) -> Option<ContactPoint<P>> {
    let n = plane.pose.rot.mul_vec(&Vec3::from_f64(normal));
    let center = sphere.pose.pos;
    let height = n.dot(&(center - plane.pose.pos)) - offset;
    let depth = DScalar::constant(radius) - height;
    if !(depth.v > 0.0) {
        return None;
    }
    let point = center - n.scale(DScalar::constant(radius) - depth * 0.5);
    let v_rel = sphere.velocity_at(&point) - plane.velocity_at(&point);
    Some(ContactPoint::new(point, n, depth, v_rel))
}

/// Contacts of loose points (soft-body nodes) with a pad. Returns the index
/// of each penetrating point with its contact.
pub fn detect_pad_points<const P: usize>(
    points: &[Vec3<P>],
    velocities: &[Vec3<P>],
    pad: &BodyMotion<P>,
    half_extents: [f64; 2],
    thickness: f64,
) -> Vec<(usize, ContactPoint<P>)> {
    let normal = pad.pose.rot.col(2);
    let mut out = Vec::new();
    for (i, (x, v)) in points.iter().zip(velocities).enumerate() {
        let local = pad.pose.inv_apply_point(x);
        let inside = local[0].v.abs() <= half_extents[0] && local[1].v.abs() <= half_extents[1];
        let depth = -local[2];
        if inside && depth.v > 0.0 && depth.v <= thickness {
            out.push((i, ContactPoint::new(*x, normal, depth, *v - pad.velocity_at(x))));
        }
    }
    out
}

/// Normal and tangential penalty forces on the penetrating body.
pub fn penalty_force<const P: usize>(c: &ContactPoint<P>, p: &ContactParams<P>) -> (Vec3<P>, Vec3<P>) {
    let push = p.k_e * c.depth - p.k_d * c.normal.dot(&c.v_n);
    if p.non_adhesive && push.v < 0.0 {
        return (Vec3::ZERO, Vec3::ZERO);
    }
    let f_n = c.normal.scale(p.k_e * c.depth) - c.v_n.scale(p.k_d);
    let speed = c.v_t.norm();
    if speed.v < TANGENT_DEADZONE {
        return (f_n, Vec3::ZERO);
    }
    let mag = (p.k_f * speed).min(p.mu * f_n.norm());
    (f_n, c.v_t.scale(-mag / speed))
}

/// Net contact wrench on each body (world coordinates, moment about the
/// world origin).
pub fn accumulate_wrenches<const P: usize>(contacts: &[Contact<P>], params: &ContactParams<P>, n_bodies: usize) -> Vec<SpatialVec<P>> {
    let mut out = vec![SpatialVec::ZERO; n_bodies];
    for c in contacts {
        let (f_n, f_t) = penalty_force(&c.point, params);
        let f = f_n + f_t;
        let w = SpatialVec::new(c.point.point.cross(&f), f);
        out[c.body] += w;
        out[c.surface] += -w;
    }
    out
}

/// Re-expresses a world wrench about the origin as a torque about `center`.
pub fn torque_about<const P: usize>(w: &SpatialVec<P>, center: &Vec3<P>) -> SpatialVec<P> {
    SpatialVec::new(w.ang - center.cross(&w.lin), w.lin)
}

#[cfg(test)]
mod tests {
    use super::*;

    type D = DScalar<0>;

    fn at(p: [f64; 3]) -> BodyMotion<0> {
        BodyMotion::fixed(Transform::translation(Vec3::from_f64(p)))
    }

    #[test]
    fn centered_sphere_has_no_contact() {
        assert!(detect_sphere_in_box(&at([0.0; 3]), 0.01, &at([0.0; 3]), [0.03; 3]).is_empty());
    }

    #[test]
    fn sphere_against_positive_x_wall() {
        let (h, r, delta) = (0.03, 0.01, 1e-3);
        let c = detect_sphere_in_box(&at([h - r + delta, 0.0, 0.0]), r, &at([0.0; 3]), [h; 3]);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].normal.values(), [-1.0, 0.0, 0.0]);
        assert!((c[0].depth.v - delta).abs() < 1e-15);
        assert_eq!(c[0].v_t.values(), [0.0; 3]);
    }

    #[test]
    fn exact_touch_is_not_contact() {
        // binary-exact dimensions so that the touch is exact
        assert!(detect_sphere_in_box(&at([0.25, 0.0, 0.0]), 0.25, &at([0.0; 3]), [0.5; 3]).is_empty());
        assert!(detect_sphere_plane(&at([0.0, 0.0, 0.25]), 0.25, &at([0.0; 3]), [0.0, 0.0, 1.0], 0.0).is_none());
    }

    #[test]
    fn rotated_box_wall_normal() {
        let pose = Transform::from_xyz_rpy([0.0; 3], [0.0, 0.0, std::f64::consts::FRAC_PI_2]);
        let container = BodyMotion::fixed(pose);
        // local +x wall sits along world +y
        let c = detect_sphere_in_box(&at([0.0, 0.0205, 0.0]), 0.01, &container, [0.03, 0.05, 0.05]);
        assert_eq!(c.len(), 1);
        let n = c[0].normal.values();
        assert!(n[0].abs() < 1e-15 && (n[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn sphere_plane_depth() {
        let c = detect_sphere_plane(&at([0.0, 0.0, 0.009]), 0.01, &at([0.0; 3]), [0.0, 0.0, 1.0], 0.0).unwrap();
        assert!((c.depth.v - 0.001).abs() < 1e-15);
        assert_eq!(c.normal.values(), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn relative_velocity_split() {
        let mut s = at([0.0, 0.0, 0.009]);
        s.twist = SpatialVec::new(Vec3::ZERO, Vec3::from_f64([0.3, 0.0, -0.2]));
        let c = detect_sphere_plane(&s, 0.01, &at([0.0; 3]), [0.0, 0.0, 1.0], 0.0).unwrap();
        assert_eq!(c.v_n.values(), [0.0, 0.0, -0.2]);
        assert_eq!(c.v_t.values(), [0.3, 0.0, 0.0]);
        assert!(c.v_t.dot(&c.normal).v.abs() < 1e-10);
    }

    #[test]
    fn pad_outside_rectangle() {
        let pts = [Vec3::<0>::from_f64([0.02, 0.0, -0.001])];
        let vel = [Vec3::ZERO];
        assert!(detect_pad_points(&pts, &vel, &at([0.0; 3]), [0.01, 0.01], 0.005).is_empty());
        let inside = [Vec3::<0>::from_f64([0.0, 0.0, -0.001])];
        assert_eq!(detect_pad_points(&inside, &vel, &at([0.0; 3]), [0.01, 0.01], 0.005).len(), 1);
    }

    fn point(depth: f64, v_n: f64, v_t: [f64; 3]) -> ContactPoint<0> {
        let n = Vec3::from_f64([0.0, 0.0, 1.0]);
        let v = Vec3::from_f64([v_t[0], v_t[1], v_n]);
        ContactPoint::new(Vec3::ZERO, n, D::constant(depth), v)
    }

    #[test]
    fn zero_contact_zero_force() {
        let (f_n, f_t) = penalty_force(&point(0.0, 0.0, [0.0; 3]), &ContactParams::default());
        assert_eq!(f_n.values(), [0.0; 3]);
        assert_eq!(f_t.values(), [0.0; 3]);
    }

    #[test]
    fn spring_force() {
        let p = ContactParams::new(1000.0, 10.0, 10.0, 0.5);
        let (f_n, _) = penalty_force(&point(0.001, 0.0, [0.0; 3]), &p);
        assert!((f_n.z().v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coulomb_cap() {
        // μ‖f_n‖ = 0.3 N
        let p = ContactParams::new(600.0, 0.0, 10.0, 0.5);
        let (f_n, f_t) = penalty_force(&point(0.001, 0.0, [100.0, 0.0, 0.0]), &p);
        assert!((f_n.norm().v - 0.6).abs() < 1e-12);
        assert!((f_t.x().v + 0.3).abs() < 1e-12);
        // below the cap the viscous branch applies
        let (_, slow) = penalty_force(&point(0.001, 0.0, [0.01, 0.0, 0.0]), &p);
        assert!((slow.x().v + 0.1).abs() < 1e-12);
    }

    #[test]
    fn separating_contact_is_not_adhesive() {
        let mut p = ContactParams::new(1000.0, 10.0, 10.0, 0.5);
        let c = point(0.001, 1.0, [0.0; 3]);
        assert_eq!(penalty_force(&c, &p).0.values(), [0.0; 3]);
        p.non_adhesive = false;
        assert!((penalty_force(&c, &p).0.z().v - (1.0 - 10.0)).abs() < 1e-12);
    }

    #[test]
    fn action_reaction() {
        let mut s = at([0.0, 0.0, 0.009]);
        s.twist = SpatialVec::new(Vec3::from_f64([0.0, 1.0, 0.0]), Vec3::from_f64([0.1, 0.0, -0.05]));
        let c = detect_sphere_plane(&s, 0.01, &at([0.0; 3]), [0.0, 0.0, 1.0], 0.0).unwrap();
        let w = accumulate_wrenches(&[Contact { surface: 0, body: 1, point: c }], &ContactParams::default(), 2);
        let sum = w[0] + w[1];
        assert_eq!(sum.ang.values(), [0.0; 3]);
        assert_eq!(sum.lin.values(), [0.0; 3]);
        // about the contact point the wrench is a pure force
        let about = torque_about(&w[1], &c.point);
        assert!(about.ang.norm().v < 1e-15);
    }

    #[test]
    fn symmetric_contacts_cancel_torque() {
        let r = 0.011;
        // a sphere squeezed in a narrow box touches both x walls equally
        let c = detect_sphere_in_box(&at([0.0; 3]), r, &at([0.0; 3]), [0.0105, 0.05, 0.05]);
        assert_eq!(c.len(), 2);
        let contacts: Vec<_> = c.iter().map(|p| Contact { surface: 0, body: 1, point: *p }).collect();
        let w = accumulate_wrenches(&contacts, &ContactParams::default(), 2);
        assert!(w[1].ang.norm().v < 1e-15 && w[1].lin.norm().v < 1e-12);
    }
}
