#![allow(dead_code)]

use std::path::PathBuf;

use proptest::prelude::*;
use propsim_cli::formats::{
    CmaesFile, ContactFile, JointFile, JointKindFile, LinkFile, ObjectFile, OptimFile, Origin, PadFile, ParamFile, RobotModelFile,
    ScenarioFile, SimFile, SupervisionFile, TorqueFile,
};
use propsim_core::diffcore::{DScalar, Vec3};
use propsim_core::sim::Trajectory;

pub fn demo_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../demo")
}

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/corpus")
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e3..1e3f64, prop::num::f64::NORMAL | prop::num::f64::ZERO | prop::num::f64::SUBNORMAL]
}

fn positive() -> impl Strategy<Value = f64> {
    1e-6..1e3f64
}

fn vec3() -> impl Strategy<Value = [f64; 3]> {
    [finite(), finite(), finite()]
}

fn name() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_]{0,11}"
}

fn origin() -> impl Strategy<Value = Origin> {
    (vec3(), [-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64]).prop_map(|(xyz, rpy)| Origin { xyz, rpy })
}

fn unit_axis() -> impl Strategy<Value = [f64; 3]> {
    (0..3usize, prop::bool::ANY).prop_map(|(i, neg)| {
        let mut a = [0.0; 3];
        a[i] = if neg { -1.0 } else { 1.0 };
        a
    })
}

/// Cuboid link with a physically valid inertia.
fn link(name: String) -> impl Strategy<Value = LinkFile> {
    (positive(), vec3(), [1e-3..1.0f64, 1e-3..1.0f64, 1e-3..1.0f64]).prop_map(move |(mass, com, [a, b, c])| {
        let k = mass / 12.0;
        LinkFile { name: name.clone(), mass, com, inertia: [k * (b * b + c * c), k * (a * a + c * c), k * (a * a + b * b), 0.0, 0.0, 0.0] }
    })
}

/// A valid tree: link `i > 0` hangs from a random earlier link.
pub fn robot() -> impl Strategy<Value = RobotModelFile> {
    (name(), 2..7usize)
        .prop_flat_map(|(robot_name, n)| {
            let links: Vec<_> = (0..n).map(|i| link(format!("link{i}"))).collect();
            let joints: Vec<_> = (1..n)
                .map(|i| {
                    let kind = prop_oneof![Just(JointKindFile::Revolute), Just(JointKindFile::Prismatic), Just(JointKindFile::Fixed)];
                    (kind, unit_axis(), 0..i, origin(), 0.0..5.0f64).prop_map(move |(kind, axis, parent, origin, damping)| JointFile {
                        name: format!("joint{i}"),
                        kind,
                        axis: (kind != JointKindFile::Fixed).then_some(axis),
                        parent: format!("link{parent}"),
                        child: format!("link{i}"),
                        origin,
                        damping,
                    })
                })
                .collect();
            (Just(robot_name), links, joints)
        })
        .prop_map(|(name, links, joints)| RobotModelFile { name, links, joints, locked: Vec::new() })
}

fn object() -> impl Strategy<Value = ObjectFile> {
    prop_oneof![
        Just(ObjectFile::None),
        (name(), origin(), positive(), 0.0..0.1f64).prop_map(|(link, origin, mass, radius)| ObjectFile::FixedJoint { link, origin, mass, radius }),
        (name(), origin(), [positive(), positive(), positive()], positive(), positive(), vec3()).prop_map(
            |(link, box_origin, half_extents, sphere_mass, sphere_radius, sphere_position)| ObjectFile::Container {
                link,
                box_origin,
                half_extents,
                sphere_mass,
                sphere_radius,
                sphere_position,
            }
        ),
        (
            [1..5usize, 1..5usize, 1..5usize],
            positive(),
            vec3(),
            (positive(), positive(), positive(), 0.0..10.0f64),
            prop::sample::subsequence(vec!["-x", "+x", "-y", "+y", "-z", "+z"], 0..3),
            prop::collection::vec((name(), origin(), [positive(), positive()], positive()), 0..3),
        )
            .prop_map(|(cells, cell_size, origin, (k_mu, k_lambda, density, damping), faces, pads)| ObjectFile::Squeeze {
                cells,
                cell_size,
                origin,
                k_mu,
                k_lambda,
                density,
                damping,
                pinned_faces: faces.into_iter().map(String::from).collect(),
                pads: pads.into_iter().map(|(link, origin, half_extents, thickness)| PadFile { link, origin, half_extents, thickness }).collect(),
            }),
    ]
}

fn torque() -> impl Strategy<Value = TorqueFile> {
    (name(), 0.0..1.0f64, 0.0..1.0f64, finite(), prop::bool::ANY).prop_map(|(joint, start, len, value, current)| TorqueFile {
        joint,
        start,
        end: start + len,
        torque: (!current).then_some(value),
        current_ma: current.then_some(value),
        torque_constant: current.then_some(1.5e-3),
    })
}

fn param() -> impl Strategy<Value = ParamFile> {
    let names = prop::sample::select(vec!["mass", "k_mu", "k_lambda", "k_e", "k_d", "k_f", "mu"]);
    (names, 0.0..1.0f64, positive(), prop::option::of(prop::collection::vec(positive(), 1..6)), positive(), 1..8usize).prop_map(
        |(name, lower, span, seeds, pivot, count)| {
            let explicit = seeds.is_some();
            ParamFile {
                name: name.into(),
                lower,
                upper: lower + span,
                seeds,
                pivot: (!explicit).then_some(pivot),
                count: (!explicit).then_some(count),
            }
        },
    )
}

pub fn scenario() -> impl Strategy<Value = ScenarioFile> {
    let sim = (1.0..240.0f64, 1..128usize, vec3(), 0.01..5.0f64).prop_map(|(frame_rate, substeps, gravity, duration)| SimFile {
        frame_rate,
        substeps,
        gravity,
        duration,
    });
    let contact = (positive(), positive(), positive(), 0.0..2.0f64).prop_map(|(k_e, k_d, k_f, mu)| ContactFile { k_e, k_d, k_f, mu });
    let optim = (positive(), 1..500usize, (0.0..1.0f64, 0.0..1.0f64), positive(), (positive(), positive(), positive()), 1..50usize, prop::bool::ANY)
        .prop_map(|(lr0, iterations, (beta1, beta2), eps, (final_lr_ratio, loss_tol, step_tol), patience, log_space)| OptimFile {
            lr0,
            iterations,
            beta1,
            beta2,
            eps,
            final_lr_ratio,
            loss_tol,
            step_tol,
            patience,
            log_space,
        });
    let cmaes = (1..5000usize, positive()).prop_map(|(budget, sigma0)| CmaesFile { budget, sigma0 });
    let supervision = (prop::collection::vec(name(), 0..4), prop::option::of(positive())).prop_map(|(joints, object_weight)| SupervisionFile { joints, object_weight });
    let maps = (prop::collection::btree_map(name(), finite(), 0..4), prop::collection::btree_map(name(), finite(), 0..4));
    (
        (name(), name(), prop::collection::vec(name(), 0..4), maps),
        (sim, object(), contact),
        (prop::collection::vec(torque(), 0..4), prop::collection::vec(param(), 0..3)),
        (optim, cmaes, supervision),
    )
        .prop_map(
            |((name, robot, locked, (initial_positions, initial_velocities)), (sim, object, contact), (torques, params), (optim, cmaes, supervision))| {
                ScenarioFile {
                    name,
                    robot: format!("{robot}.json"),
                    locked,
                    initial_positions,
                    initial_velocities,
                    sim,
                    object,
                    contact,
                    torques,
                    params,
                    optim,
                    cmaes,
                    supervision,
                }
            },
        )
}

/// Joint positions and optional object track; velocities are not stored
/// in trajectory files.
pub fn trajectory() -> impl Strategy<Value = Trajectory<0>> {
    (1..6usize, 1..40usize)
        .prop_flat_map(|(joints, rows)| {
            (
                Just(joints),
                -10.0..10.0f64,
                prop::collection::vec(1e-6..1.0f64, rows - 1),
                prop::collection::vec(prop::collection::vec(finite(), joints), rows),
                prop::option::of(prop::collection::vec(vec3(), rows)),
            )
        })
        .prop_map(|(joints, t0, steps, q, object)| {
            let mut times = vec![t0];
            for dt in steps {
                let next = times[times.len() - 1] + dt;
                times.push(next);
            }
            Trajectory {
                times,
                joint_names: (0..joints).map(|j| format!("joint{j}")).collect(),
                joint_positions: q.into_iter().map(|row| row.into_iter().map(DScalar::constant).collect()).collect(),
                joint_velocities: Vec::new(),
                object_positions: object.map(|o| o.into_iter().map(Vec3::from_f64).collect()),
            }
        })
}

/// Fields of a result JSON that vary between identical runs.
pub fn strip_timing(json: &str) -> String {
    json.lines().filter(|l| !l.trim_start().starts_with("\"wall_time_s\"")).collect::<Vec<_>>().join("\n")
}
