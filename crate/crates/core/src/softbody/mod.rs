//! Tetrahedral FEM deformable bodies with a stable Neo-Hookean material.

mod mesh;

pub use mesh::{hex_to_tets, TetMesh};

use crate::contact::{detect_pad_points, penalty_force, BodyMotion, ContactParams};
use crate::diffcore::{DScalar, Mat3, SpatialVec, Vec3};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Material<const P: usize> {
    /// First Lamé parameter, Pa.
    pub k_mu: DScalar<P>,
    /// Second Lamé parameter, Pa.
    pub k_lambda: DScalar<P>,
    /// kg/m³
    pub rho0: f64,
    /// Mass-proportional damping, 1/s.
    pub rayleigh_damping: f64,
}

impl<const P: usize> Material<P> {
    pub fn new(k_mu: f64, k_lambda: f64, rho0: f64) -> Self {
        Self { k_mu: DScalar::constant(k_mu), k_lambda: DScalar::constant(k_lambda), rho0, rayleigh_damping: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_mu.v > 0.0 && self.k_mu.v.is_finite()) {
            return Err(Error::InvalidMaterial(format!("k_mu must be positive, got {}", self.k_mu.v)));
        }
        if !(self.k_lambda.v >= 0.0 && self.k_lambda.v.is_finite()) {
            return Err(Error::InvalidMaterial(format!("k_lambda must be non-negative, got {}", self.k_lambda.v)));
        }
        if !(self.rho0 > 0.0 && self.rho0.is_finite()) {
            return Err(Error::InvalidMaterial(format!("density must be positive, got {}", self.rho0)));
        }
        if !(self.rayleigh_damping >= 0.0) {
            return Err(Error::InvalidMaterial("damping must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SoftState<const P: usize> {
    pub positions: Vec<Vec3<P>>,
    pub velocities: Vec<Vec3<P>>,
}

impl<const P: usize> SoftState<P> {
    pub fn at_rest(mesh: &TetMesh) -> Self {
        Self { positions: mesh.rest_state(), velocities: vec![Vec3::ZERO; mesh.n_nodes()] }
    }

    /// Mean nodal position.
    pub fn centroid(&self) -> Vec3<P> {
        let mut c = Vec3::ZERO;
        for x in &self.positions {
            c += *x;
        }
        c.scale_f(1.0 / self.positions.len() as f64)
    }
}

fn inverted(det: f64) -> Error {
    Error::InvertedElement { tet: 0, det }
}

fn with_tet(e: Error, tet: usize) -> Error {
    match e {
        Error::InvertedElement { det, .. } => Error::InvertedElement { tet, det },
        e => e,
    }
}

/// Energy density `μ/2 (I_C − 3) − μ ln J + λ/2 (ln J)²`, Pa. Inversion
/// errors report tet 0; mesh-level callers substitute the real index.
pub fn neo_hookean_energy<const P: usize>(f: &Mat3<P>, m: &Material<P>) -> Result<DScalar<P>> {
    let j = f.det();
    if !(j.v > 0.0) {
        return Err(inverted(j.v));
    }
    let ic = f.ddot(f);
    let ln_j = j.ln();
    Ok(m.k_mu * 0.5 * (ic - 3.0) - m.k_mu * ln_j + m.k_lambda * 0.5 * ln_j.square())
}

/// First Piola-Kirchhoff stress `∂Ψ/∂F = μ(F − F⁻ᵀ) + λ ln J F⁻ᵀ`.
pub fn pk1_stress<const P: usize>(f: &Mat3<P>, m: &Material<P>) -> Result<Mat3<P>> {
    let j = f.det();
    if !(j.v > 0.0) {
        return Err(inverted(j.v));
    }
    let f_inv_t = f.inverse().transpose();
    Ok((*f - f_inv_t).scale(m.k_mu) + f_inv_t.scale(m.k_lambda * j.ln()))
}

/// Total elastic energy `Σ V₀ Ψ`, J.
pub fn elastic_energy<const P: usize>(mesh: &TetMesh, positions: &[Vec3<P>], m: &Material<P>) -> Result<DScalar<P>> {
    let mut e = DScalar::ZERO;
    for t in 0..mesh.tets.len() {
        let f = mesh.deformation_gradient(positions, t);
        e += neo_hookean_energy(&f, m).map_err(|e| with_tet(e, t))? * mesh.rest_volume[t];
    }
    Ok(e)
}

/// Elastic nodal forces, the negative gradient of [`elastic_energy`].
pub fn nodal_forces<const P: usize>(mesh: &TetMesh, positions: &[Vec3<P>], m: &Material<P>) -> Result<Vec<Vec3<P>>> {
    if positions.len() != mesh.n_nodes() {
        return Err(Error::Dimension { what: "node positions", expected: mesh.n_nodes(), got: positions.len() });
    }
    let mut out = vec![Vec3::ZERO; mesh.n_nodes()];
    for (t, tet) in mesh.tets.iter().enumerate() {
        let f = mesh.deformation_gradient(positions, t);
        let p = pk1_stress(&f, m).map_err(|e| with_tet(e, t))?;
        let h = p.mul_mat(&Mat3::from_f64(mesh.dm_inv[t]).transpose()).scale_f(-mesh.rest_volume[t]);
        let mut f0 = Vec3::ZERO;
        for c in 0..3 {
            let fc = h.col(c);
            out[tet[c + 1]] += fc;
            f0 -= fc;
        }
        out[tet[0]] += f0;
    }
    Ok(out)
}

/// Penalty forces between mesh nodes and a pad, and the reaction on the pad
/// body as a world wrench about the origin.
pub fn soft_rigid_contact<const P: usize>(
    state: &SoftState<P>,
    pad: &BodyMotion<P>,
    half_extents: [f64; 2],
    thickness: f64,
    params: &ContactParams<P>,
) -> (Vec<Vec3<P>>, SpatialVec<P>) {
    let mut forces = vec![Vec3::ZERO; state.positions.len()];
    let mut reaction = SpatialVec::ZERO;
    for (i, c) in detect_pad_points(&state.positions, &state.velocities, pad, half_extents, thickness) {
        let (f_n, f_t) = penalty_force(&c, params);
        let f = f_n + f_t;
        forces[i] += f;
        reaction += -SpatialVec::new(c.point.cross(&f), f);
    }
    (forces, reaction)
}

/// One semi-implicit Euler step of the nodal dynamics. `external` holds
/// extra nodal forces (contacts), or is empty.
pub fn soft_step<const P: usize>(
    mesh: &TetMesh,
    material: &Material<P>,
    state: &SoftState<P>,
    external: &[Vec3<P>],
    gravity: [f64; 3],
    dt: f64,
) -> Result<SoftState<P>> {
    if !(dt > 0.0) {
        return Err(Error::InvalidConfig(format!("time step must be positive, got {dt}")));
    }
    let elastic = nodal_forces(mesh, &state.positions, material)?;
    let g = Vec3::from_f64(gravity);
    let mut next = state.clone();
    for i in 0..mesh.n_nodes() {
        if mesh.pinned.contains(&i) {
            next.velocities[i] = Vec3::ZERO;
            continue;
        }
        let m = mesh.lumped_mass[i];
        let mut f = elastic[i] - state.velocities[i].scale_f(material.rayleigh_damping * m);
        if let Some(e) = external.get(i) {
            f += *e;
        }
        let v = state.velocities[i] + (f.scale_f(1.0 / m) + g).scale_f(dt);
        next.velocities[i] = v;
        next.positions[i] = state.positions[i] + v.scale_f(dt);
    }
    Ok(next)
}
