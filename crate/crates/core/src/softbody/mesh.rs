use std::collections::BTreeSet;

use crate::diffcore::{Mat3, Vec3};
use crate::error::{Error, Result};

use super::Material;

/// Tetrahedral mesh with precomputed rest quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct TetMesh {
    pub rest_positions: Vec<[f64; 3]>,
    pub tets: Vec<[usize; 4]>,
    /// Inverse of the rest edge matrix `[x1−x0, x2−x0, x3−x0]`.
    pub dm_inv: Vec<[[f64; 3]; 3]>,
    /// m³
    pub rest_volume: Vec<f64>,
    /// kg
    pub lumped_mass: Vec<f64>,
    pub pinned: BTreeSet<usize>,
}

fn edge_matrix(x: &[[f64; 3]], t: &[usize; 4]) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for c in 0..3 {
        for r in 0..3 {
            m[r][c] = x[t[c + 1]][r] - x[t[0]][r];
        }
    }
    m
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

impl TetMesh {
    /// Builds a mesh from nodes and tets, flipping any negatively oriented
    /// tet. Nodal masses are a quarter of each adjacent tet's mass.
    pub fn new(rest_positions: Vec<[f64; 3]>, tets: Vec<[usize; 4]>, rho0: f64) -> Result<Self> {
        if !(rho0 > 0.0 && rho0.is_finite()) {
            return Err(Error::InvalidMaterial(format!("density must be positive, got {rho0}")));
        }
        let n = rest_positions.len();
        let mut tets = tets;
        let mut dm_inv = Vec::with_capacity(tets.len());
        let mut rest_volume = Vec::with_capacity(tets.len());
        let mut lumped_mass = vec![0.0; n];
        for (i, t) in tets.iter_mut().enumerate() {
            if t.iter().any(|&v| v >= n) {
                return Err(Error::InvalidMesh(format!("tet {i} references a missing node")));
            }
            let mut dm = edge_matrix(&rest_positions, t);
            let mut det = det3(&dm);
            if det < 0.0 {
                t.swap(2, 3);
                dm = edge_matrix(&rest_positions, t);
                det = -det;
            }
            if !(det > 0.0) {
                return Err(Error::InvalidMesh(format!("tet {i} is degenerate")));
            }
            let volume = det / 6.0;
            dm_inv.push(Mat3::<0>::from_f64(dm).inverse().values());
            rest_volume.push(volume);
            for &v in t.iter() {
                lumped_mass[v] += 0.25 * rho0 * volume;
            }
        }
        Ok(Self { rest_positions, tets, dm_inv, rest_volume, lumped_mass, pinned: BTreeSet::new() })
    }

    pub fn n_nodes(&self) -> usize {
        self.rest_positions.len()
    }

    pub fn total_volume(&self) -> f64 {
        self.rest_volume.iter().sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.lumped_mass.iter().sum()
    }

    /// Pins every node whose coordinate along `axis` equals `value`.
    pub fn pin_where(&mut self, axis: usize, value: f64) {
        for (i, x) in self.rest_positions.iter().enumerate() {
            if (x[axis] - value).abs() <= 1e-12 * value.abs().max(1.0) {
                self.pinned.insert(i);
            }
        }
    }

    pub fn rest_state<const P: usize>(&self) -> Vec<Vec3<P>> {
        self.rest_positions.iter().map(|&x| Vec3::from_f64(x)).collect()
    }

    /// `F = Ds·Dm⁻¹` of one tet.
    pub fn deformation_gradient<const P: usize>(&self, positions: &[Vec3<P>], tet: usize) -> Mat3<P> {
        let t = &self.tets[tet];
        let x0 = positions[t[0]];
        let ds = Mat3::from_cols(positions[t[1]] - x0, positions[t[2]] - x0, positions[t[3]] - x0);
        ds.mul_mat(&Mat3::from_f64(self.dm_inv[tet]))
    }
}

/// Voxel grid of `dims` cells of size `h`, five tets per cell. Alternate
/// cells use the mirrored split so that shared faces have matching
/// diagonals.
pub fn hex_to_tets(dims: [usize; 3], h: f64, origin: [f64; 3], material: &Material<0>) -> Result<TetMesh> {
    if dims.contains(&0) {
        return Err(Error::InvalidMesh(format!("grid dimensions must be positive, got {dims:?}")));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidMesh(format!("cell size must be positive, got {h}")));
    }
    let [nx, ny, nz] = dims;
    let node = |i: usize, j: usize, k: usize| (k * (ny + 1) + j) * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                nodes.push([origin[0] + i as f64 * h, origin[1] + j as f64 * h, origin[2] + k as f64 * h]);
            }
        }
    }
    // corners by local offset bits (x, y, z)
    const EVEN: [[[usize; 3]; 4]; 5] = [
        [[0, 0, 0], [1, 1, 0], [1, 0, 1], [0, 1, 1]],
        [[1, 0, 0], [0, 0, 0], [1, 1, 0], [1, 0, 1]],
        [[0, 1, 0], [0, 0, 0], [1, 1, 0], [0, 1, 1]],
        [[0, 0, 1], [0, 0, 0], [1, 0, 1], [0, 1, 1]],
        [[1, 1, 1], [1, 1, 0], [1, 0, 1], [0, 1, 1]],
    ];
    const ODD: [[[usize; 3]; 4]; 5] = [
        [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]],
        [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]],
        [[1, 1, 0], [1, 0, 0], [0, 1, 0], [1, 1, 1]],
        [[1, 0, 1], [1, 0, 0], [0, 0, 1], [1, 1, 1]],
        [[0, 1, 1], [0, 1, 0], [0, 0, 1], [1, 1, 1]],
    ];
    let mut tets = Vec::with_capacity(5 * nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let pattern = if (i + j + k) % 2 == 0 { &EVEN } else { &ODD };
                for t in pattern {
                    tets.push(t.map(|[a, b, c]| node(i + a, j + b, k + c)));
                }
            }
        }
    }
    material.validate()?;
    TetMesh::new(nodes, tets, material.rho0)
}
