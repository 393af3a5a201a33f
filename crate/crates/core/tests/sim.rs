use std::f64::consts::{FRAC_PI_2, PI};

use propsim_core::articulated::{Body, Joint, JointKind, KinematicTree};
use propsim_core::contact::ContactParams;
use propsim_core::diffcore::{DScalar, Transform};
use propsim_core::sim::{
    energy_probe, simulate, ContainerSetup, ObjectModel, ParamTarget, Scenario, SimConfig, Simulator, TorqueEntry, TorqueSchedule,
};

const G: f64 = 9.81;

fn pendulum(m: f64, l: f64) -> KinematicTree {
    let bodies = vec![Body::massless("world"), Body::point_mass("bob", m, [0.0, l, 0.0])];
    let joints = vec![Joint::new("hinge", JointKind::Revolute { axis: [1.0, 0.0, 0.0] }, 0, 1, Transform::identity())];
    KinematicTree::new(bodies, joints).unwrap()
}

fn pendulum_scenario(l: f64, amplitude: f64, substeps: usize, duration: f64) -> Scenario {
    let config = SimConfig { substeps, duration, ..SimConfig::default() };
    let mut s = Scenario::new("pendulum", pendulum(0.05, l), config);
    // hanging straight down is q = −π/2
    s.initial_q = vec![-FRAC_PI_2 + amplitude];
    s
}

#[test]
fn small_oscillation_period() {
    let l = 0.1;
    let s = pendulum_scenario(l, 0.02, 64, 10.0);
    let traj = simulate::<0>(&s, &[]).unwrap();
    let x: Vec<f64> = traj.joint_series(0).iter().map(|q| q + FRAC_PI_2).collect();
    let mut ups = Vec::new();
    for i in 1..x.len() {
        if x[i - 1] < 0.0 && x[i] >= 0.0 {
            let frac = -x[i - 1] / (x[i] - x[i - 1]);
            ups.push(traj.times[i - 1] + frac * (traj.times[i] - traj.times[i - 1]));
        }
    }
    let measured = (ups[ups.len() - 1] - ups[0]) / (ups.len() - 1) as f64;
    let expect = 2.0 * PI * (l / G).sqrt();
    assert!((measured - expect).abs() < 0.01 * expect, "{measured} vs {expect}");
}

#[test]
fn energy_stays_in_band() {
    let s = pendulum_scenario(0.1, 1.0, 64, 10.0);
    let sim = Simulator::<0>::new(&s, &[]).unwrap();
    let dt = s.config.dt();
    let mut state = sim.initial_state();
    let (mut lo, mut hi, mut ke_max) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for _ in 0..s.config.frames() * s.config.substeps {
        state = sim.step(&state, &[0.0], dt).unwrap();
        let e = sim.energy(&state).unwrap();
        lo = lo.min(e.total());
        hi = hi.max(e.total());
        ke_max = ke_max.max(e.kinetic);
    }
    assert!((hi - lo) < 0.01 * ke_max, "band {} vs max kinetic {ke_max}", hi - lo);
}

#[test]
fn zero_acceleration_step() {
    let mut s = pendulum_scenario(0.1, 0.0, 4, 0.1);
    s.config.gravity = [0.0; 3];
    s.initial_qdot = vec![0.5];
    let sim = Simulator::<0>::new(&s, &[]).unwrap();
    let dt = s.config.dt();
    let st = sim.initial_state();
    let next = sim.step(&st, &[0.0], dt).unwrap();
    assert_eq!(next.robot.qdot[0].v, 0.5);
    assert_eq!(next.robot.q[0].v, st.robot.q[0].v + 0.5 * dt);
}

#[test]
fn constant_acceleration_step() {
    // from rest at the horizontal, gravity gives q̈ = −g/l exactly
    let mut s = pendulum_scenario(0.1, FRAC_PI_2, 4, 0.1);
    s.initial_q = vec![0.0];
    let sim = Simulator::<0>::new(&s, &[]).unwrap();
    let dt = s.config.dt();
    let next = sim.step(&sim.initial_state(), &[0.0], dt).unwrap();
    let qdd = -G / 0.1;
    assert!((next.robot.qdot[0].v - qdd * dt).abs() < 1e-12);
    assert!((next.robot.q[0].v - qdd * dt * dt).abs() < 1e-15);
}

#[test]
fn rest_without_gravity_is_constant() {
    let mut s = pendulum_scenario(0.1, 0.3, 8, 0.5);
    s.config.gravity = [0.0; 3];
    let traj = simulate::<0>(&s, &[]).unwrap();
    assert_eq!(traj.len(), 31);
    assert!(traj.joint_series(0).iter().all(|&q| q == s.initial_q[0]));
}

#[test]
fn repeated_runs_are_identical() {
    let mut s = pendulum_scenario(0.1, 0.5, 16, 1.0);
    s.schedule = TorqueSchedule::new(vec![TorqueEntry::new("hinge", 0.1, 0.4, 0.01)]);
    let a = simulate::<1>(&s, &[(ParamTarget::KE, DScalar::variable(1e4, 0))]).unwrap();
    let b = simulate::<1>(&s, &[(ParamTarget::KE, DScalar::variable(1e4, 0))]).unwrap();
    assert_eq!(a, b);
}

#[test]
fn potential_of_raised_mass() {
    let s = pendulum_scenario(0.1, 0.0, 4, 0.1);
    let sim = Simulator::<0>::new(&s, &[]).unwrap();
    let mut st = sim.initial_state();
    st.robot.q[0] = DScalar::constant(0.0);
    let datum = energy_probe(&s, &st).unwrap();
    assert_eq!(datum.kinetic, 0.0);
    assert_eq!(datum.potential, 0.0);
    assert_eq!(datum.elastic, 0.0);
    st.robot.q[0] = DScalar::constant(FRAC_PI_2);
    let raised = energy_probe(&s, &st).unwrap();
    assert!((raised.potential - 0.05 * G * 0.1).abs() < 1e-15);
}

#[test]
fn divergence_is_reported() {
    let mut s = pendulum_scenario(0.1, 0.0, 1, 1.0);
    s.schedule = TorqueSchedule::new(vec![TorqueEntry::new("hinge", 0.0, 1.0, 1e6)]);
    let err = simulate::<0>(&s, &[]).unwrap_err();
    assert!(err.is_divergence(), "{err}");
}

/// A free-floating box (six-coordinate joint) with a sphere rattling inside.
fn box_and_ball(gravity: [f64; 3]) -> Scenario {
    let half = [0.03, 0.03, 0.03];
    let bodies = vec![Body::massless("world"), Body::cuboid("box", 0.05, half)];
    let joints = vec![Joint::new("float", JointKind::Free, 0, 1, Transform::identity())];
    let tree = KinematicTree::new(bodies, joints).unwrap();
    let config = SimConfig { substeps: 64, duration: 1.0, gravity, ..SimConfig::default() };
    let mut s = Scenario::new("rattle", tree, config);
    s.object = ObjectModel::Container(ContainerSetup {
        carrier: 1,
        box_pose: Transform::identity(),
        half_extents: half,
        sphere: Body::sphere("ball", 0.012, 0.01),
        radius: 0.01,
        initial_position: [0.0, 0.0, 0.0],
    });
    s
}

#[test]
fn contact_conserves_momentum() {
    let mut s = box_and_ball([0.0; 3]);
    s.initial_qdot = vec![0.2, -0.1, 0.05, 0.0, 0.0, 0.0];
    let sim = Simulator::<0>::new(&s, &[]).unwrap();
    let dt = s.config.dt();
    let momentum = |st: &propsim_core::sim::CoupledState<0>| {
        let propsim_core::sim::ObjectState::Rigid(ball) = &st.object else { unreachable!() };
        let v = ball.lin_vel.values();
        std::array::from_fn::<f64, 3, _>(|k| 0.05 * st.robot.qdot[k].v + 0.012 * v[k])
    };
    let mut st = sim.initial_state();
    let p0 = momentum(&st);
    let norm0 = p0.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut contacts_seen = false;
    for _ in 0..(1.0 / dt).round() as usize {
        st = sim.step(&st, &[0.0; 6], dt).unwrap();
        let propsim_core::sim::ObjectState::Rigid(ball) = &st.object else { unreachable!() };
        contacts_seen |= ball.lin_vel.norm().v > 0.0;
    }
    assert!(contacts_seen);
    let p = momentum(&st);
    let drift = (0..3).map(|k| (p[k] - p0[k]).powi(2)).sum::<f64>().sqrt();
    assert!(drift < 1e-3 * norm0, "drift {drift}");
}

#[test]
fn resting_sphere_carries_its_weight() {
    // box welded to the world, sphere settling on its floor
    let half = [0.03, 0.03, 0.03];
    let bodies = vec![Body::massless("world"), Body::cuboid("box", 0.05, half)];
    let joints = vec![Joint::new("weld", JointKind::Fixed, 0, 1, Transform::identity())];
    let tree = KinematicTree::new(bodies, joints).unwrap();
    let config = SimConfig { substeps: 64, duration: 2.0, ..SimConfig::default() };
    let mut s = Scenario::new("rest", tree, config);
    let m = 0.012;
    s.object = ObjectModel::Container(ContainerSetup {
        carrier: 1,
        box_pose: Transform::identity(),
        half_extents: half,
        sphere: Body::sphere("ball", m, 0.01),
        radius: 0.01,
        initial_position: [0.0, 0.0, -0.019],
    });
    let sim = Simulator::<0>::new(&s, &[]).unwrap();
    let dt = s.config.dt();
    let mut st = sim.initial_state();
    for _ in 0..s.config.frames() * s.config.substeps {
        st = sim.step(&st, &[], dt).unwrap();
    }
    let propsim_core::sim::ObjectState::Rigid(ball) = &st.object else { unreachable!() };
    let depth = ball.pose.pos.z().v - (-0.03 + 0.01);
    let normal = ContactParams::<0>::default().k_e.v * -depth;
    assert!((normal - m * G).abs() < 0.02 * m * G, "normal force {normal}");
    assert!(ball.lin_vel.norm().v < 1e-6);
}

#[test]
fn schedule_naming_locked_joint_is_rejected() {
    let mut s = pendulum_scenario(0.1, 0.0, 4, 0.1);
    s.tree = s.tree.lock(0, vec![0.0]).unwrap();
    s.initial_q.clear();
    s.initial_qdot.clear();
    s.schedule = TorqueSchedule::new(vec![TorqueEntry::new("hinge", 0.0, 0.1, 1.0)]);
    assert!(simulate::<0>(&s, &[]).is_err());
}
