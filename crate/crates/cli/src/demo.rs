//! The shipped demo: a 5-joint desktop manipulator and synthetic
//! identification scenarios with pre-generated ground truth.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use propsim_core::articulated::Model;
use propsim_core::diffcore::{DScalar, Transform};
use propsim_core::sim::simulate;
use propsim_core::Error;

use crate::formats::{
    write_json, write_trajectory, CmaesFile, ContactFile, JointFile, JointKindFile, LinkFile, ObjectFile, OptimFile, Origin, PadFile,
    ParamFile, RobotModelFile, ScenarioFile, SimFile, Strictness, SupervisionFile, TorqueFile,
};

pub const ROBOT_FILE: &str = "robot.json";

/// Wall-mounted base: gravity along −y, parallel to the pitch joints.
const WALL_GRAVITY: [f64; 3] = [0.0, -9.81, 0.0];

/// Gear friction of the finger drive, N·s/m.
const GRIPPER_DAMPING: f64 = 10.0;

pub const HEAVY_BALL: f64 = 0.050;
pub const LIGHT_BALL: f64 = 0.020;
pub const SHAKEN_SPHERE: f64 = 0.012;
pub const STIFF_CUBE: (f64, f64) = (5097.6, 5430.4);
pub const SOFT_CUBE: (f64, f64) = (749.6, 264.3);

fn cuboid_link(name: &str, mass: f64, com: [f64; 3], half: [f64; 3]) -> LinkFile {
    let [a, b, c] = half.map(|h| 4.0 * h * h);
    let k = mass / 12.0;
    LinkFile { name: name.into(), mass, com, inertia: [k * (b + c), k * (a + c), k * (a + b), 0.0, 0.0, 0.0] }
}

fn massless(name: &str) -> LinkFile {
    LinkFile { name: name.into(), mass: 0.0, com: [0.0; 3], inertia: [0.0; 6] }
}

fn joint(name: &str, kind: JointKindFile, axis: Option<[f64; 3]>, parent: &str, child: &str, xyz: [f64; 3]) -> JointFile {
    JointFile { name: name.into(), kind, axis, parent: parent.into(), child: child.into(), origin: Origin::xyz(xyz), damping: 0.0 }
}

/// Four revolute joints (yaw, then three pitch joints about y) and a
/// prismatic finger closing along −y.
pub fn robot_model() -> RobotModelFile {
    use JointKindFile::*;
    let y = Some([0.0, 1.0, 0.0]);
    RobotModelFile {
        name: "desk_manipulator_5dof".into(),
        links: vec![
            massless("world"),
            cuboid_link("link1", 0.098, [0.0, 0.0, 0.03], [0.02, 0.02, 0.03]),
            cuboid_link("link2", 0.138, [0.01, 0.0, 0.065], [0.015, 0.015, 0.07]),
            cuboid_link("link3", 0.133, [0.07, 0.0, 0.0], [0.07, 0.015, 0.015]),
            cuboid_link("link4", 0.143, [0.05, 0.0, 0.0], [0.05, 0.02, 0.015]),
            cuboid_link("finger", 0.02, [0.01, 0.0, 0.0], [0.01, 0.005, 0.01]),
            massless("end_effector"),
        ],
        joints: vec![
            joint("joint1", Revolute, Some([0.0, 0.0, 1.0]), "world", "link1", [0.012, 0.0, 0.017]),
            joint("joint2", Revolute, y, "link1", "link2", [0.0, 0.0, 0.0595]),
            joint("joint3", Revolute, y, "link2", "link3", [0.024, 0.0, 0.128]),
            joint("joint4", Revolute, y, "link3", "link4", [0.124, 0.0, 0.0]),
            JointFile { damping: GRIPPER_DAMPING, ..joint("gripper", Prismatic, Some([0.0, -1.0, 0.0]), "link4", "finger", [0.0817, 0.021, 0.0]) },
            joint("end_effector_joint", Fixed, None, "link4", "end_effector", [0.126, 0.0, 0.0]),
        ],
        locked: Vec::new(),
    }
}

fn locked_except(active: &str) -> Vec<String> {
    ["joint1", "joint2", "joint3", "joint4", "gripper"].iter().filter(|j| **j != active).map(|j| j.to_string()).collect()
}

fn base(name: &str, active: &str, sim: SimFile, object: ObjectFile) -> ScenarioFile {
    ScenarioFile {
        name: name.into(),
        robot: ROBOT_FILE.into(),
        locked: locked_except(active),
        initial_positions: BTreeMap::new(),
        initial_velocities: BTreeMap::new(),
        sim,
        object,
        contact: ContactFile::default(),
        torques: Vec::new(),
        params: Vec::new(),
        optim: OptimFile::default(),
        cmaes: CmaesFile::default(),
        supervision: SupervisionFile { joints: vec![active.into()], object_weight: None },
    }
}

fn torque(joint: &str, start: f64, end: f64, torque: f64) -> TorqueFile {
    TorqueFile { joint: joint.into(), start, end, torque: Some(torque), current_ma: None, torque_constant: None }
}

/// World pose of `link` with the scenario's locks applied at rest.
fn link_pose(robot: &RobotModelFile, scenario: &ScenarioFile, link: &str) -> Result<Transform<0>, Error> {
    let path = Path::new(ROBOT_FILE);
    let tree = robot.to_tree(path, &scenario.locked, &scenario.initial_positions)?;
    let body = tree.body_index(link).ok_or_else(|| Error::InvalidConfig(format!("unknown link '{link}'")))?;
    let q = vec![DScalar::<0>::ZERO; tree.n_dof()];
    Ok(Model::new(&tree).forward_kinematics(&q)?[body])
}

/// Joint 2 driven by a constant torque with a ball welded past the end
/// effector.
pub fn fixed_joint(mass: f64) -> ScenarioFile {
    let sim = SimFile { gravity: WALL_GRAVITY, ..SimFile::default() };
    let object = ObjectFile::FixedJoint { link: "end_effector".into(), origin: Origin::xyz([0.02, 0.0, 0.0]), mass, radius: 0.02 };
    let mut s = base("fixed_joint", "joint2", sim, object);
    s.torques = vec![torque("joint2", 0.0, 0.6, 0.05)];
    s.params = vec![ParamFile { name: "mass".into(), lower: 0.0, upper: 10.0, seeds: Some(vec![0.0, 0.001, 0.005, 0.095, 0.191]), pivot: None, count: None }];
    s
}

/// Joint 3 shakes a box holding a loose sphere that starts at rest on the
/// box floor.
pub fn container(robot: &RobotModelFile, tracked: bool) -> Result<ScenarioFile, Error> {
    let sim = SimFile { gravity: WALL_GRAVITY, substeps: 32, ..SimFile::default() };
    let (half, radius, mass) = ([0.03, 0.012, 0.05], 0.01, SHAKEN_SPHERE);
    let box_origin = Origin::xyz([0.03, 0.0, 0.0]);
    let placeholder = ObjectFile::None;
    let mut s = base(if tracked { "container_tracked" } else { "container" }, "joint3", sim, placeholder);
    let center = link_pose(robot, &s, "end_effector")?.compose(&box_origin.transform()).pos.values();
    let sag = mass * 9.81 / s.contact.k_e;
    let position = [center[0], center[1] - half[1] + radius - sag, center[2]];
    s.object = ObjectFile::Container {
        link: "end_effector".into(),
        box_origin,
        half_extents: half,
        sphere_mass: mass,
        sphere_radius: radius,
        sphere_position: position,
    };
    s.contact.mu = 0.1;
    s.torques = vec![
        torque("joint3", 0.0, 0.1, 0.1),
        torque("joint3", 0.1, 0.3, -0.1),
        torque("joint3", 0.3, 0.5, 0.1),
        torque("joint3", 0.5, 0.6, -0.1),
    ];
    s.params = vec![ParamFile { name: "mass".into(), lower: 0.0, upper: 1.0, seeds: None, pivot: Some(0.01), count: Some(5) }];
    s.optim.loss_tol = 1e-10;
    if tracked {
        s.supervision.object_weight = Some(1.0);
    }
    Ok(s)
}

/// Every pairing of three half-decade-spaced values around `pivot`, so the
/// restarts also cover the ratio k_λ/k_μ.
fn seed_grid(pivot: f64) -> (Vec<f64>, Vec<f64>) {
    let values = [-0.5, 0.0, 0.5].map(|e: f64| pivot * 10f64.powf(e));
    values.iter().flat_map(|&a| values.iter().map(move |&b| (a, b))).unzip()
}

/// The gripper finger presses a voxel cube against a fixed jaw.
pub fn squeeze(robot: &RobotModelFile, stiff: bool) -> Result<ScenarioFile, Error> {
    // The soft cube settles slower against the finger damping.
    let duration = if stiff { 0.6 } else { 1.2 };
    let sim = SimFile { gravity: WALL_GRAVITY, substeps: 64, duration, ..SimFile::default() };
    let (cells, h) = ([3, 3, 3], 0.01);
    let pad_origin = Origin { xyz: [0.02, -0.005, 0.0], rpy: [FRAC_PI_2, 0.0, 0.0] };
    let name = if stiff { "squeeze_stiff" } else { "squeeze_soft" };
    let mut s = base(name, "gripper", sim, ObjectFile::None);
    let pad = link_pose(robot, &s, "finger")?.compose(&pad_origin.transform()).pos.values();
    let side = h * cells[0] as f64;
    let origin = [pad[0] - 0.5 * side, pad[1] - side, pad[2] - 0.5 * side];
    let (k_mu, k_lambda) = if stiff { STIFF_CUBE } else { SOFT_CUBE };
    s.object = ObjectFile::Squeeze {
        cells,
        cell_size: h,
        origin,
        k_mu,
        k_lambda,
        density: if stiff { 852.0 } else { 370.0 },
        damping: 5.0,
        pinned_faces: vec!["-y".into()],
        pads: vec![PadFile { link: "finger".into(), origin: pad_origin, half_extents: [0.025, 0.025], thickness: 0.01 }],
    };
    s.contact = ContactFile { k_e: 200.0, k_d: 0.01, k_f: 0.05, mu: 0.5 };
    // Two load levels; the finger's own weight (0.196 N) adds to each.
    let (low, high) = if stiff { (0.3, 2.0) } else { (-0.13, 0.8) };
    s.torques = vec![torque("gripper", 0.0, 0.5 * duration, low), torque("gripper", 0.5 * duration, duration, high)];
    let (mu_seeds, lambda_seeds) = seed_grid(if stiff { 3000.0 } else { 500.0 });
    s.params = vec![
        ParamFile { name: "k_mu".into(), lower: 1.0, upper: 1e6, seeds: Some(mu_seeds), pivot: None, count: None },
        ParamFile { name: "k_lambda".into(), lower: 1.0, upper: 1e6, seeds: Some(lambda_seeds), pivot: None, count: None },
    ];
    // Losses here are mm² scale; the defaults would stop or stall early.
    s.optim.eps = 1e-14;
    s.optim.loss_tol = 1e-14;
    Ok(s)
}

/// Scenario files of the demo, keyed by file stem.
pub fn scenarios() -> Result<Vec<ScenarioFile>, Error> {
    let robot = robot_model();
    Ok(vec![
        fixed_joint(HEAVY_BALL),
        container(&robot, false)?,
        container(&robot, true)?,
        squeeze(&robot, true)?,
        squeeze(&robot, false)?,
    ])
}

/// Writes the robot, every scenario and its ground-truth trajectory
/// (`<name>_gt.csv`) into `dir`.
pub fn write_demo(dir: &Path) -> Result<Vec<PathBuf>, Error> {
    let mut written = vec![dir.join(ROBOT_FILE)];
    write_json(&written[0], &robot_model())?;
    for s in scenarios()? {
        let path = dir.join(format!("{}.json", s.name));
        write_json(&path, &s)?;
        let run = ScenarioFile::load(&path, Strictness::Strict)?;
        let gt = simulate::<0>(&run.scenario, &[])?;
        let gt_path = dir.join(format!("{}_gt.csv", s.name));
        write_trajectory(&gt_path, &gt)?;
        written.push(path);
        written.push(gt_path);
    }
    Ok(written)
}
