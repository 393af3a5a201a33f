use std::collections::BTreeMap;
use std::path::Path;

use propsim_core::articulated::Body;
use propsim_core::contact::ContactParams;
use propsim_core::sim::{ContainerSetup, ObjectModel, PadSetup, ParamTarget, Scenario, SimConfig, SqueezeSetup, TorqueEntry, TorqueSchedule};
use propsim_core::softbody::{hex_to_tets, Material};
use propsim_core::sysid::{log_spaced_seeds, CmaesConfig, OptimConfig, ParamEntry, ParamSpec};
use propsim_core::Error;
use serde::{Deserialize, Serialize};

use super::robot::{Origin, RobotModelFile};
use super::{format_error, read_json, sibling, Strictness};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimFile {
    /// Hz
    pub frame_rate: f64,
    pub substeps: usize,
    /// m/s²
    pub gravity: [f64; 3],
    /// s
    pub duration: f64,
}

impl Default for SimFile {
    fn default() -> Self {
        let c = SimConfig::default();
        Self { frame_rate: c.frame_rate, substeps: c.substeps, gravity: c.gravity, duration: c.duration }
    }
}

impl SimFile {
    pub fn to_config(&self) -> SimConfig {
        SimConfig { frame_rate: self.frame_rate, substeps: self.substeps, gravity: self.gravity, duration: self.duration }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactFile {
    /// N/m
    pub k_e: f64,
    /// N·s/m
    pub k_d: f64,
    /// N·s/m
    pub k_f: f64,
    pub mu: f64,
}

impl Default for ContactFile {
    fn default() -> Self {
        let c = ContactParams::<0>::default();
        Self { k_e: c.k_e.v, k_d: c.k_d.v, k_f: c.k_f.v, mu: c.mu.v }
    }
}

/// Torque in N·m (or force in N) given directly, or as a motor current
/// times a torque constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorqueFile {
    pub joint: String,
    /// s
    pub start: f64,
    /// s
    pub end: f64,
    #[serde(default)]
    pub torque: Option<f64>,
    /// mA
    #[serde(default)]
    pub current_ma: Option<f64>,
    /// N·m/A
    #[serde(default)]
    pub torque_constant: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PadFile {
    /// Link carrying the pad.
    pub link: String,
    /// Pad frame in the link frame; the pad pushes along its local +z.
    pub origin: Origin,
    /// m
    pub half_extents: [f64; 2],
    /// m
    pub thickness: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectFile {
    None,
    /// Solid sphere welded to a link.
    FixedJoint {
        link: String,
        origin: Origin,
        /// kg
        mass: f64,
        /// m; zero for a point mass
        #[serde(default)]
        radius: f64,
    },
    /// Hollow box on a link with a loose solid sphere inside.
    Container {
        link: String,
        box_origin: Origin,
        /// m
        half_extents: [f64; 3],
        /// kg
        sphere_mass: f64,
        /// m
        sphere_radius: f64,
        /// World position of the sphere center at t = 0, m.
        sphere_position: [f64; 3],
    },
    /// Voxel cube pressed by pads.
    Squeeze {
        cells: [usize; 3],
        /// m
        cell_size: f64,
        /// World position of the grid's minimum corner, m.
        origin: [f64; 3],
        /// Pa
        k_mu: f64,
        /// Pa
        k_lambda: f64,
        /// kg/m³
        density: f64,
        /// 1/s
        #[serde(default)]
        damping: f64,
        /// Faces held in place: "-x", "+x", "-y", "+y", "-z" or "+z".
        #[serde(default)]
        pinned_faces: Vec<String>,
        pads: Vec<PadFile>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamFile {
    /// One of mass, k_mu, k_lambda, k_e, k_d, k_f, mu.
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    /// Explicit seeds, one per restart.
    #[serde(default)]
    pub seeds: Option<Vec<f64>>,
    /// Otherwise `count` seeds log-spaced over two decades around `pivot`.
    #[serde(default)]
    pub pivot: Option<f64>,
    #[serde(default)]
    pub count: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimFile {
    pub lr0: f64,
    pub iterations: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub final_lr_ratio: f64,
    /// rad²
    pub loss_tol: f64,
    pub step_tol: f64,
    pub patience: usize,
    pub log_space: bool,
}

impl Default for OptimFile {
    fn default() -> Self {
        Self::from(&OptimConfig::default())
    }
}

impl From<&OptimConfig> for OptimFile {
    fn from(c: &OptimConfig) -> Self {
        Self {
            lr0: c.lr0,
            iterations: c.iterations,
            beta1: c.beta1,
            beta2: c.beta2,
            eps: c.eps,
            final_lr_ratio: c.final_lr_ratio,
            loss_tol: c.loss_tol,
            step_tol: c.step_tol,
            patience: c.patience,
            log_space: c.log_space,
        }
    }
}

impl OptimFile {
    pub fn to_config(&self) -> OptimConfig {
        OptimConfig {
            lr0: self.lr0,
            iterations: self.iterations,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
            final_lr_ratio: self.final_lr_ratio,
            loss_tol: self.loss_tol,
            step_tol: self.step_tol,
            patience: self.patience,
            log_space: self.log_space,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CmaesFile {
    pub budget: usize,
    /// Initial step in log θ.
    pub sigma0: f64,
}

impl Default for CmaesFile {
    fn default() -> Self {
        let c = CmaesConfig::default();
        Self { budget: c.budget, sigma0: c.sigma0 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SupervisionFile {
    /// Supervised coordinates; empty means all.
    pub joints: Vec<String>,
    /// Adds the object-position channel with this weight.
    pub object_weight: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub name: String,
    /// Robot model path, relative to this file.
    pub robot: String,
    /// Joints locked in addition to those in the robot file.
    #[serde(default)]
    pub locked: Vec<String>,
    /// Initial coordinates by name, rad or m; also the hold position of
    /// locked joints. Missing entries are zero.
    #[serde(default)]
    pub initial_positions: BTreeMap<String, f64>,
    #[serde(default)]
    pub initial_velocities: BTreeMap<String, f64>,
    #[serde(default)]
    pub sim: SimFile,
    pub object: ObjectFile,
    #[serde(default)]
    pub contact: ContactFile,
    #[serde(default)]
    pub torques: Vec<TorqueFile>,
    #[serde(default)]
    pub params: Vec<ParamFile>,
    #[serde(default)]
    pub optim: OptimFile,
    #[serde(default)]
    pub cmaes: CmaesFile,
    #[serde(default)]
    pub supervision: SupervisionFile,
}

/// A loaded scenario file with everything needed for a run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub spec: Option<ParamSpec>,
    pub optim: OptimConfig,
    pub cmaes: CmaesConfig,
    pub supervision: SupervisionFile,
}

fn face(path: &Path, s: &str) -> Result<(usize, bool), Error> {
    let axis = match s.get(1..) {
        Some("x") => 0,
        Some("y") => 1,
        Some("z") => 2,
        _ => return Err(format_error(path, "object.pinned_faces", format!("unknown face '{s}'"))),
    };
    match s.as_bytes()[0] {
        b'-' => Ok((axis, false)),
        b'+' => Ok((axis, true)),
        _ => Err(format_error(path, "object.pinned_faces", format!("unknown face '{s}'"))),
    }
}

impl ScenarioFile {
    pub fn read(path: &Path, strictness: Strictness) -> Result<Self, Error> {
        read_json(path, strictness)
    }

    /// Loads the referenced robot and builds the run configuration.
    pub fn load(path: &Path, strictness: Strictness) -> Result<RunConfig, Error> {
        let file = Self::read(path, strictness)?;
        let robot_path = sibling(path, &file.robot);
        let robot: RobotModelFile = read_json(&robot_path, strictness)?;
        file.build(path, &robot, &robot_path)
    }

    pub fn build(&self, path: &Path, robot: &RobotModelFile, robot_path: &Path) -> Result<RunConfig, Error> {
        let err = |field: &str, e: Error| format_error(path, field, e.to_string());
        if let Some(name) = self.locked.iter().find(|n| !robot.joints.iter().any(|j| &j.name == *n)) {
            return Err(format_error(path, "locked", format!("unknown joint '{name}'")));
        }
        let tree = robot.to_tree(robot_path, &self.locked, &self.initial_positions)?;
        let config = self.sim.to_config();
        config.validate().map_err(|e| err("sim", e))?;

        let coords = tree.coordinate_names();
        let locked_names: Vec<&str> = tree.locked().keys().map(|&j| tree.joints()[j].name.as_str()).collect();
        for name in self.initial_positions.keys().chain(self.initial_velocities.keys()) {
            if !coords.contains(name) && !locked_names.contains(&name.as_str()) {
                return Err(format_error(path, "initial_positions", format!("unknown coordinate '{name}'")));
            }
        }
        for name in self.initial_velocities.keys() {
            if !coords.contains(name) {
                return Err(format_error(path, "initial_velocities", format!("'{name}' is not a free coordinate")));
            }
        }

        let mut scenario = Scenario::new(self.name.clone(), tree, config);
        scenario.initial_q = coords.iter().map(|n| self.initial_positions.get(n).copied().unwrap_or(0.0)).collect();
        scenario.initial_qdot = coords.iter().map(|n| self.initial_velocities.get(n).copied().unwrap_or(0.0)).collect();
        scenario.contact = ContactParams::new(self.contact.k_e, self.contact.k_d, self.contact.k_f, self.contact.mu);

        let link = |name: &str, field: &str| {
            scenario.tree.body_index(name).ok_or_else(|| format_error(path, field, format!("unknown link '{name}'")))
        };
        scenario.object = match &self.object {
            ObjectFile::None => ObjectModel::None,
            ObjectFile::FixedJoint { link: l, origin, mass, radius } => {
                let parent = link(l, "object.link")?;
                if !(*radius >= 0.0 && radius.is_finite()) {
                    return Err(format_error(path, "object.radius", "radius must be non-negative"));
                }
                let body = Body::sphere("object", *mass, *radius);
                body.validate().map_err(|e| err("object.mass", e))?;
                scenario.tree = scenario.tree.attach_fixed(body, parent, origin.transform()).map_err(|e| err("object", e))?;
                ObjectModel::Attached { body: scenario.tree.bodies().len() - 1 }
            }
            ObjectFile::Container { link: l, box_origin, half_extents, sphere_mass, sphere_radius, sphere_position } => {
                let sphere = Body::sphere("sphere", *sphere_mass, *sphere_radius);
                ObjectModel::Container(ContainerSetup {
                    carrier: link(l, "object.link")?,
                    box_pose: box_origin.transform(),
                    half_extents: *half_extents,
                    sphere,
                    radius: *sphere_radius,
                    initial_position: *sphere_position,
                })
            }
            ObjectFile::Squeeze { cells, cell_size, origin, k_mu, k_lambda, density, damping, pinned_faces, pads } => {
                let mut material = Material::new(*k_mu, *k_lambda, *density);
                material.rayleigh_damping = *damping;
                material.validate().map_err(|e| err("object", e))?;
                let mut mesh = hex_to_tets(*cells, *cell_size, *origin, &material).map_err(|e| err("object.cells", e))?;
                for f in pinned_faces {
                    let (axis, max) = face(path, f)?;
                    let value = if max { origin[axis] + cells[axis] as f64 * cell_size } else { origin[axis] };
                    mesh.pin_where(axis, value);
                }
                let pads = pads
                    .iter()
                    .map(|p| {
                        Ok(PadSetup { body: link(&p.link, "object.pads.link")?, pose: p.origin.transform(), half_extents: p.half_extents, thickness: p.thickness })
                    })
                    .collect::<Result<Vec<_>, Error>>()?;
                ObjectModel::Squeeze(SqueezeSetup { mesh, material, pads })
            }
        };

        let mut entries = Vec::with_capacity(self.torques.len());
        for (i, t) in self.torques.iter().enumerate() {
            let field = format!("torques[{i}]");
            let entry = match (t.torque, t.current_ma, t.torque_constant) {
                (Some(tau), None, None) => TorqueEntry::new(t.joint.clone(), t.start, t.end, tau),
                (None, Some(ma), Some(kt)) => TorqueEntry::from_current(t.joint.clone(), t.start, t.end, ma, kt),
                (None, Some(_), None) => return Err(format_error(path, field, "current_ma requires torque_constant")),
                _ => return Err(format_error(path, field, "give either torque or current_ma with torque_constant")),
            };
            entries.push(entry);
        }
        scenario.schedule = TorqueSchedule::new(entries);
        scenario.validate().map_err(|e| err("scenario", e))?;

        let spec = if self.params.is_empty() {
            None
        } else {
            let mut entries = Vec::with_capacity(self.params.len());
            for (i, p) in self.params.iter().enumerate() {
                let field = format!("params[{i}]");
                let target: ParamTarget = p.name.parse().map_err(|e| err(&field, e))?;
                scenario.param_value(target).map_err(|e| err(&field, e))?;
                let seeds = match (&p.seeds, p.pivot) {
                    (Some(s), None) => s.clone(),
                    (None, Some(pivot)) => log_spaced_seeds(pivot, p.count.unwrap_or(5)),
                    _ => return Err(format_error(path, field, "give either seeds or pivot")),
                };
                entries.push(ParamEntry { target, lower: p.lower, upper: p.upper, seeds });
            }
            let spec = ParamSpec { entries };
            spec.validate().map_err(|e| err("params", e))?;
            Some(spec)
        };
        let optim = self.optim.to_config();
        optim.validate().map_err(|e| err("optim", e))?;
        let cmaes = CmaesConfig { budget: self.cmaes.budget, sigma0: self.cmaes.sigma0, ..CmaesConfig::default() };
        Ok(RunConfig { scenario, spec, optim, cmaes, supervision: self.supervision.clone() })
    }
}
