use std::fmt;
use std::str::FromStr;

use crate::articulated::{Body, KinematicTree};
use crate::contact::ContactParams;
use crate::diffcore::{DScalar, Transform};
use crate::error::{Error, Result};
use crate::softbody::{Material, TetMesh};

use super::config::{SimConfig, TorqueSchedule};

/// Physical quantity that a scenario can expose to identification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamTarget {
    Mass,
    KMu,
    KLambda,
    KE,
    KD,
    KF,
    Mu,
}

impl ParamTarget {
    pub const ALL: [ParamTarget; 7] = [Self::Mass, Self::KMu, Self::KLambda, Self::KE, Self::KD, Self::KF, Self::Mu];

    pub fn name(self) -> &'static str {
        match self {
            Self::Mass => "mass",
            Self::KMu => "k_mu",
            Self::KLambda => "k_lambda",
            Self::KE => "k_e",
            Self::KD => "k_d",
            Self::KF => "k_f",
            Self::Mu => "mu",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Self::Mass => "kg",
            Self::KMu | Self::KLambda => "Pa",
            Self::KE => "N/m",
            Self::KD | Self::KF => "N*s/m",
            Self::Mu => "1",
        }
    }
}

impl fmt::Display for ParamTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParamTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown parameter '{s}'")))
    }
}

/// Hollow box carried by a robot body, with a loose sphere inside.
#[derive(Clone, Debug, PartialEq)]
pub struct ContainerSetup {
    pub carrier: usize,
    /// Box center and axes in the carrier frame.
    pub box_pose: Transform<0>,
    pub half_extents: [f64; 3],
    pub sphere: Body,
    pub radius: f64,
    /// World position of the sphere center at t = 0, m.
    pub initial_position: [f64; 3],
}

/// Flat pad on a robot body that presses on soft-body nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct PadSetup {
    pub body: usize,
    /// Pad frame in the body frame; the pad pushes along its local +z.
    pub pose: Transform<0>,
    pub half_extents: [f64; 2],
    pub thickness: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SqueezeSetup {
    /// Rest positions in world coordinates.
    pub mesh: TetMesh,
    pub material: Material<0>,
    pub pads: Vec<PadSetup>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ObjectModel {
    None,
    /// A body already welded into the tree.
    Attached { body: usize },
    Container(ContainerSetup),
    Squeeze(SqueezeSetup),
}

/// Everything needed to run one simulation except the identified
/// parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub tree: KinematicTree,
    pub initial_q: Vec<f64>,
    pub initial_qdot: Vec<f64>,
    pub object: ObjectModel,
    pub contact: ContactParams<0>,
    pub config: SimConfig,
    pub schedule: TorqueSchedule,
}

impl Scenario {
    /// A robot at rest with no object.
    pub fn new(name: impl Into<String>, tree: KinematicTree, config: SimConfig) -> Self {
        let n = tree.n_dof();
        Self {
            name: name.into(),
            tree,
            initial_q: vec![0.0; n],
            initial_qdot: vec![0.0; n],
            object: ObjectModel::None,
            contact: ContactParams::default(),
            config,
            schedule: TorqueSchedule::default(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.object {
            ObjectModel::None => "robot",
            ObjectModel::Attached { .. } => "fixed_joint",
            ObjectModel::Container(_) => "container",
            ObjectModel::Squeeze(_) => "squeeze",
        }
    }

    pub fn has_object_positions(&self) -> bool {
        matches!(self.object, ObjectModel::Container(_) | ObjectModel::Squeeze(_))
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.tree.n_dof();
        if self.initial_q.len() != n {
            return Err(Error::Dimension { what: "initial positions", expected: n, got: self.initial_q.len() });
        }
        if self.initial_qdot.len() != n {
            return Err(Error::Dimension { what: "initial velocities", expected: n, got: self.initial_qdot.len() });
        }
        if !self.initial_q.iter().chain(&self.initial_qdot).all(|x| x.is_finite()) {
            return Err(Error::InvalidConfig("initial state must be finite".into()));
        }
        self.config.validate()?;
        self.contact.validate()?;
        self.schedule.resolve(&self.tree)?;
        let nb = self.tree.bodies().len();
        let check_body = |b: usize| if b < nb { Ok(()) } else { Err(Error::InvalidParent(b)) };
        match &self.object {
            ObjectModel::None => {}
            ObjectModel::Attached { body } => {
                check_body(*body)?;
                if *body == self.tree.root() {
                    return Err(Error::InvalidConfig("attached object cannot be the root body".into()));
                }
            }
            ObjectModel::Container(c) => {
                check_body(c.carrier)?;
                c.sphere.validate()?;
                if !(c.sphere.mass > 0.0) {
                    return Err(Error::ZeroMass(c.sphere.name.clone()));
                }
                if !(c.radius > 0.0) || c.half_extents.iter().any(|h| !(*h > c.radius)) {
                    return Err(Error::InvalidConfig("sphere must fit inside the box".into()));
                }
            }
            ObjectModel::Squeeze(s) => {
                s.material.validate()?;
                if s.pads.is_empty() {
                    return Err(Error::InvalidConfig("squeeze needs at least one pad".into()));
                }
                for p in &s.pads {
                    check_body(p.body)?;
                    if p.half_extents.iter().any(|h| !(*h > 0.0)) || !(p.thickness > 0.0) {
                        return Err(Error::InvalidConfig("pad dimensions must be positive".into()));
                    }
                }
            }
        }
        Ok(())
    }

    /// Current value of a parameter in this scenario.
    pub fn param_value(&self, target: ParamTarget) -> Result<f64> {
        let missing = || Error::InvalidConfig(format!("scenario '{}' has no parameter '{target}'", self.name));
        Ok(match target {
            ParamTarget::Mass => match &self.object {
                ObjectModel::Attached { body } => self.tree.bodies()[*body].mass,
                ObjectModel::Container(c) => c.sphere.mass,
                _ => return Err(missing()),
            },
            ParamTarget::KMu | ParamTarget::KLambda => match &self.object {
                ObjectModel::Squeeze(s) => {
                    if target == ParamTarget::KMu {
                        s.material.k_mu.v
                    } else {
                        s.material.k_lambda.v
                    }
                }
                _ => return Err(missing()),
            },
            ParamTarget::KE => self.contact.k_e.v,
            ParamTarget::KD => self.contact.k_d.v,
            ParamTarget::KF => self.contact.k_f.v,
            ParamTarget::Mu => self.contact.mu.v,
        })
    }

    /// Overwrites a parameter value, e.g. to generate ground truth.
    pub fn set_param(&mut self, target: ParamTarget, value: f64) -> Result<()> {
        self.param_value(target)?;
        let c = DScalar::constant(value);
        match target {
            ParamTarget::Mass => match &mut self.object {
                ObjectModel::Attached { body } => self.tree.set_body_mass(*body, value)?,
                ObjectModel::Container(s) => s.sphere = Body::sphere(s.sphere.name.clone(), value, s.radius),
                _ => unreachable!(),
            },
            ParamTarget::KMu | ParamTarget::KLambda => {
                if let ObjectModel::Squeeze(s) = &mut self.object {
                    if target == ParamTarget::KMu {
                        s.material.k_mu = c;
                    } else {
                        s.material.k_lambda = c;
                    }
                }
            }
            ParamTarget::KE => self.contact.k_e = c,
            ParamTarget::KD => self.contact.k_d = c,
            ParamTarget::KF => self.contact.k_f = c,
            ParamTarget::Mu => self.contact.mu = c,
        }
        Ok(())
    }
}
