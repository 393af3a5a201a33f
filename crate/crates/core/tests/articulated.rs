use propsim_core::articulated::{Body, ExternalForces, Joint, JointKind, KinematicTree, Model, SimState};
use propsim_core::diffcore::{DScalar, Transform};

const M1: f64 = 0.3;
const M2: f64 = 0.2;
const L1: f64 = 0.25;
const L2: f64 = 0.15;
const G: f64 = 9.81;

fn double_pendulum() -> KinematicTree {
    let bodies = vec![Body::massless("world"), Body::point_mass("upper", M1, [0.0, L1, 0.0]), Body::point_mass("lower", M2, [0.0, L2, 0.0])];
    let x = JointKind::Revolute { axis: [1.0, 0.0, 0.0] };
    let joints = vec![
        Joint::new("shoulder", x, 0, 1, Transform::identity()),
        Joint::new("elbow", x, 1, 2, Transform::from_xyz_rpy([0.0, L1, 0.0], [0.0; 3])),
    ];
    KinematicTree::new(bodies, joints).unwrap()
}

/// Bob positions in the yz plane, written out by hand.
fn bobs(q: [f64; 2]) -> [[f64; 2]; 2] {
    let p1 = [L1 * q[0].cos(), L1 * q[0].sin()];
    let p2 = [p1[0] + L2 * (q[0] + q[1]).cos(), p1[1] + L2 * (q[0] + q[1]).sin()];
    [p1, p2]
}

/// Σ m JᵀJ with Jacobians from central differences of the bob positions.
fn oracle_mass_matrix(q: [f64; 2]) -> [[f64; 2]; 2] {
    let h = 1e-6;
    let mut jac = [[[0.0; 2]; 2]; 2]; // [bob][coord][dof]
    for d in 0..2 {
        let mut qp = q;
        let mut qm = q;
        qp[d] += h;
        qm[d] -= h;
        let (bp, bm) = (bobs(qp), bobs(qm));
        for b in 0..2 {
            for c in 0..2 {
                jac[b][c][d] = (bp[b][c] - bm[b][c]) / (2.0 * h);
            }
        }
    }
    let mut out = [[0.0; 2]; 2];
    for (b, m) in [M1, M2].into_iter().enumerate() {
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] += m * (jac[b][0][i] * jac[b][0][j] + jac[b][1][i] * jac[b][1][j]);
            }
        }
    }
    out
}

fn potential(q: [f64; 2]) -> f64 {
    let b = bobs(q);
    G * (M1 * b[0][1] + M2 * b[1][1])
}

fn consts(x: &[f64]) -> Vec<DScalar<0>> {
    x.iter().map(|&v| DScalar::constant(v)).collect()
}

#[test]
fn mass_matrix_matches_kinetic_energy_oracle() {
    let model = Model::<0>::new(&double_pendulum());
    for q in [[0.0, 0.0], [0.4, -1.1], [2.0, 0.7]] {
        let h = model.mass_matrix(&consts(&q)).unwrap().values();
        let o = oracle_mass_matrix(q);
        for i in 0..2 {
            for j in 0..2 {
                assert!((h[i][j] - o[i][j]).abs() < 1e-8, "q {q:?} H[{i}][{j}] {} vs {}", h[i][j], o[i][j]);
            }
        }
    }
}

#[test]
fn bias_forces_match_lagrangian_oracle() {
    let model = Model::<0>::new(&double_pendulum());
    let ext = ExternalForces::gravity([0.0, 0.0, -G]);
    let h = 1e-5;
    for (q, qd) in [([0.3, 0.5], [1.0, -2.0]), ([-1.2, 0.1], [0.4, 3.0])] {
        // C = Ḣq̇ − ½ ∂(q̇ᵀHq̇)/∂q + ∂V/∂q
        let mut dh = [[[0.0; 2]; 2]; 2];
        let mut dv = [0.0; 2];
        for k in 0..2 {
            let mut qp = q;
            let mut qm = q;
            qp[k] += h;
            qm[k] -= h;
            let (hp, hm) = (oracle_mass_matrix(qp), oracle_mass_matrix(qm));
            for i in 0..2 {
                for j in 0..2 {
                    dh[k][i][j] = (hp[i][j] - hm[i][j]) / (2.0 * h);
                }
            }
            dv[k] = (potential(qp) - potential(qm)) / (2.0 * h);
        }
        let mut c = [0.0; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    c[i] += dh[k][i][j] * qd[k] * qd[j] - 0.5 * dh[i][j][k] * qd[j] * qd[k];
                }
            }
            c[i] += dv[i];
        }
        let got = model.bias_forces(&consts(&q), &consts(&qd), &ext).unwrap();
        for i in 0..2 {
            assert!((got[i].v - c[i]).abs() < 1e-5, "{:?} vs {c:?}", got.iter().map(|x| x.v).collect::<Vec<_>>());
        }
    }
}

#[test]
fn inverse_and_forward_dynamics_agree() {
    let model = Model::<0>::new(&double_pendulum());
    let ext = ExternalForces::gravity([0.0, 0.0, -G]);
    let state = SimState::from_values(&[0.2, -0.4], &[0.7, 1.5]);
    let tau = consts(&[0.05, -0.02]);
    let qdd = model.forward_dynamics(&state, &tau, &ext).unwrap();
    let back = model.inverse_dynamics(&state.q, &state.qdot, &qdd, &ext).unwrap();
    for i in 0..2 {
        assert!((back[i].v - tau[i].v).abs() < 1e-12);
    }
}

#[test]
fn composite_inertia_of_rod_and_tip() {
    // uniform rod (length 2a along y) with a point mass at its tip, about x
    let (m_rod, a, m_tip) = (0.4, 0.1, 0.05);
    let rod_i = m_rod * (2.0 * a) * (2.0 * a) / 12.0;
    let rod = Body::new("rod", m_rod, [0.0, a, 0.0], [[rod_i, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, rod_i]]);
    let bodies = vec![Body::massless("w"), rod, Body::point_mass("tip", m_tip, [0.0; 3])];
    let joints = vec![
        Joint::new("hinge", JointKind::Revolute { axis: [1.0, 0.0, 0.0] }, 0, 1, Transform::identity()),
        Joint::new("weld", JointKind::Fixed, 1, 2, Transform::from_xyz_rpy([0.0, 2.0 * a, 0.0], [0.0; 3])),
    ];
    let model = Model::<0>::new(&KinematicTree::new(bodies, joints).unwrap());
    let expect = m_rod * 4.0 * a * a / 3.0 + m_tip * 4.0 * a * a;
    let h = model.mass_matrix(&consts(&[0.9])).unwrap();
    assert!((h[(0, 0)].v - expect).abs() < 1e-15);
}

#[test]
fn locked_joint_equals_reduced_model() {
    let full = Model::<0>::new(&double_pendulum());
    let locked = Model::<0>::new(&double_pendulum().lock(0, vec![0.6]).unwrap());
    let hf = full.mass_matrix(&consts(&[0.6, -0.3])).unwrap();
    let hl = locked.mass_matrix(&consts(&[-0.3])).unwrap();
    assert!((hf[(1, 1)].v - hl[(0, 0)].v).abs() < 1e-15);
    let ext = ExternalForces::gravity([0.0, 0.0, -G]);
    let cf = full.bias_forces(&consts(&[0.6, -0.3]), &consts(&[0.0, 0.8]), &ext).unwrap();
    let cl = locked.bias_forces(&consts(&[-0.3]), &consts(&[0.8]), &ext).unwrap();
    assert!((cf[1].v - cl[0].v).abs() < 1e-12);
}

#[test]
fn attached_object_adds_inertia() {
    let tree = double_pendulum();
    let with = tree.attach_fixed(Body::sphere("ball", 0.05, 0.01), 2, Transform::from_xyz_rpy([0.0, L2, 0.0], [0.0; 3])).unwrap();
    assert_eq!(with.n_dof(), 2);
    let q = consts(&[0.0, 0.0]);
    let h0 = Model::<0>::new(&tree).mass_matrix(&q).unwrap();
    let h1 = Model::<0>::new(&with).mass_matrix(&q).unwrap();
    let r = L1 + L2;
    let extra = 0.05 * r * r + 0.4 * 0.05 * 0.01 * 0.01;
    assert!((h1[(0, 0)].v - h0[(0, 0)].v - extra).abs() < 1e-14);
}

#[test]
fn mass_tangent_matches_finite_difference() {
    let tree = double_pendulum();
    let ext = ExternalForces::gravity([0.0, 0.0, -G]);
    let state = SimState::from_values(&[0.2, -0.4], &[0.7, 1.5]);
    let qdd_at = |m: f64| {
        let mut model = Model::<0>::new(&tree);
        model.set_body_mass(2, DScalar::constant(m), None).unwrap();
        model.forward_dynamics(&state, &consts(&[0.0, 0.0]), &ext).unwrap()
    };
    let mut model = Model::<1>::new(&tree);
    model.set_body_mass(2, DScalar::variable(M2, 0), None).unwrap();
    let state1 = SimState::<1>::from_values(&[0.2, -0.4], &[0.7, 1.5]);
    let zero = vec![DScalar::<1>::ZERO; 2];
    let qdd = model.forward_dynamics(&state1, &zero, &ExternalForces::gravity([0.0, 0.0, -G])).unwrap();
    let h = 1e-6;
    let (p, m) = (qdd_at(M2 + h), qdd_at(M2 - h));
    for i in 0..2 {
        let fd = (p[i].v - m[i].v) / (2.0 * h);
        assert!((qdd[i].d[0] - fd).abs() <= 1e-6 * fd.abs().max(1.0), "{} vs {fd}", qdd[i].d[0]);
    }
}

#[test]
fn free_joint_falls_with_gravity() {
    let bodies = vec![Body::massless("world"), Body::cuboid("brick", 0.5, [0.02, 0.03, 0.04])];
    let joints = vec![Joint::new("float", JointKind::Free, 0, 1, Transform::identity())];
    let tree = KinematicTree::new(bodies, joints).unwrap();
    assert_eq!(tree.n_dof(), 6);
    assert_eq!(tree.coordinate_names()[3], "float_rz");
    let model = Model::<0>::new(&tree);
    let state = SimState::from_values(&[0.0, 0.0, 0.0, 0.3, -0.2, 0.1], &[0.0; 6]);
    let qdd = model.forward_dynamics(&state, &consts(&[0.0; 6]), &ExternalForces::gravity([0.0, 0.0, -G])).unwrap();
    let want = [0.0, 0.0, -G, 0.0, 0.0, 0.0];
    for i in 0..6 {
        assert!((qdd[i].v - want[i]).abs() < 1e-12, "{i}: {}", qdd[i].v);
    }
}
