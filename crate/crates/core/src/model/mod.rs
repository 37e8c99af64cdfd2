//! Body/seat data model: segments, joints, restraints, contact geometry and
//! the environment, loaded from a TOML config with lengths in cm (mirroring
//! the usual anthropometric-table convention) and held internally in SI.

mod config;
mod validate;

pub use config::{load_model, serialize_model};
pub use validate::{validate_model, ValidationReport};

use nalgebra::Vector3;
use thiserror::Error;

/// Standard gravity used by the shipped configs, m/s².
pub const STANDARD_GRAVITY: f64 = -9.81;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("unknown {kind} `{name}` referenced by {referrer}")]
    Reference {
        kind: &'static str,
        name: String,
        referrer: String,
    },
    #[error("invalid model: {0}")]
    Invalid(String),
}

/// One rigid body of the model. The body frame sits at the segment CoG with
/// axes parallel to the model reference frame at the initial posture.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub name: String,
    /// kg
    pub mass: f64,
    /// (Ixx, Iyy, Izz) about the CoG in the segment frame, kg·m².
    pub inertia_diag: Vector3<f64>,
    /// CoG position in the model reference frame, m.
    pub cog: Vector3<f64>,
    /// Contact surface attached to this segment, if any.
    pub surface: Option<SurfaceGeom>,
}

/// Contact surface shape in its owner's frame.
#[derive(Debug, Clone, PartialEq)]
pub enum GeomShape {
    /// |x/a|^n + |y/b|^n + |z/c|^n = 1 with even degree n (n = 2 is an
    /// ordinary ellipsoid).
    Superellipsoid {
        semi_axes: Vector3<f64>,
        degree: u32,
    },
    /// Infinite half-space boundary through `point` with outward `normal`.
    Plane {
        point: Vector3<f64>,
        normal: Vector3<f64>,
    },
}

/// A surface bound to a segment: shape centered at `offset` in the body frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGeom {
    pub shape: GeomShape,
    /// Shape center relative to the owner frame (the segment CoG), m.
    pub offset: Vector3<f64>,
}

/// A named environment surface, rigidly attached to the seat frame.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvGeom {
    pub name: String,
    /// Shape in seat-frame coordinates (m). Plane `point` is absolute in the
    /// seat frame; superellipsoids are centered at `center`.
    pub shape: GeomShape,
    /// Superellipsoid center in the seat frame, m (zero for planes).
    pub center: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum JointKind {
    /// 3-DoF ball joint, coordinates stored as a unit quaternion.
    Spherical,
    /// 2-DoF: rotation about `axis1` (fixed in parent) then `axis2` (fixed in child).
    Universal {
        axis1: Vector3<f64>,
        axis2: Vector3<f64>,
    },
    /// 1-DoF hinge about `axis`.
    Revolute { axis: Vector3<f64> },
    /// 4-DoF: translation along `axis` (in the parent frame) plus a spherical rotation.
    SphericalTranslation { axis: Vector3<f64> },
    /// 1-DoF slider along `axis`.
    Prismatic { axis: Vector3<f64> },
    /// 0-DoF rigid connection.
    Locked,
    /// 6-DoF free joint (base attachment only).
    Free,
}

impl JointKind {
    /// Number of velocity coordinates.
    pub fn dof(&self) -> usize {
        match self {
            JointKind::Spherical => 3,
            JointKind::Universal { .. } => 2,
            JointKind::Revolute { .. } | JointKind::Prismatic { .. } => 1,
            JointKind::SphericalTranslation { .. } => 4,
            JointKind::Locked => 0,
            JointKind::Free => 6,
        }
    }

    /// Number of position coordinates (quaternion blocks take 4 slots).
    pub fn q_len(&self) -> usize {
        match self {
            JointKind::Spherical => 4,
            JointKind::Universal { .. } => 2,
            JointKind::Revolute { .. } | JointKind::Prismatic { .. } => 1,
            JointKind::SphericalTranslation { .. } => 5,
            JointKind::Locked => 0,
            JointKind::Free => 7,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            JointKind::Spherical => "spherical",
            JointKind::Universal { .. } => "universal",
            JointKind::Revolute { .. } => "revolute",
            JointKind::SphericalTranslation { .. } => "spherical_translation",
            JointKind::Prismatic { .. } => "prismatic",
            JointKind::Locked => "locked",
            JointKind::Free => "free",
        }
    }
}

/// An internal joint of the kinematic tree.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpec {
    pub name: String,
    pub parent: String,
    pub child: String,
    pub kind: JointKind,
    /// Joint center in the model reference frame at the initial posture, m.
    pub position: Vector3<f64>,
}

/// Which frame the root segment attaches to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseFrame {
    /// Inertial frame.
    World,
    /// The kinematically prescribed (vibrating) seat frame.
    Seat,
}

/// Root attachment of the tree.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseSpec {
    pub segment: String,
    pub frame: BaseFrame,
    pub kind: JointKind,
    /// Joint anchor in the model reference frame, m (unused for `Free`).
    pub position: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RestraintMode {
    /// Passive spring–damper on the joint coordinates.
    Cardan,
    /// Spring–damper plus integral action (drift elimination).
    Pid,
}

/// Per-DoF resistance law attached to one joint. Rotational DoFs use
/// N·m/rad and N·m·s/rad, translational DoFs N/m and N·s/m.
#[derive(Debug, Clone, PartialEq)]
pub struct RestraintSpec {
    /// Joint name, or `"base"` for the root joint.
    pub joint: String,
    pub mode: RestraintMode,
    pub stiffness: Vec<f64>,
    pub damping: Vec<f64>,
    pub integral_gain: Vec<f64>,
    pub setpoint: Vec<f64>,
    /// Integral accumulator bound per DoF (rad·s or m·s).
    pub integral_clamp: Vec<f64>,
}

/// Penetration contact pair: `slave` must name a segment superellipsoid,
/// `master` an environment geom or another segment surface.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactPairSpec {
    pub slave: String,
    pub master: String,
    /// N/m
    pub stiffness: f64,
    /// N·s/m
    pub damping: f64,
    pub friction_mu: f64,
    /// Friction regularization velocity, m/s.
    pub v_reg: f64,
}

/// Soft-tissue style point-to-point spring–damper.
#[derive(Debug, Clone, PartialEq)]
pub struct PointRestraintSpec {
    pub name: String,
    pub segment: String,
    /// Attachment point in the model reference frame at the initial posture, m.
    pub point: Vector3<f64>,
    /// Anchor frame: a segment name, `"seat"`, or `"world"`.
    pub anchor_frame: String,
    /// Anchor point in the anchor frame, m.
    pub anchor: Vector3<f64>,
    /// N/m
    pub stiffness: f64,
    /// N·s/m
    pub damping: f64,
}

/// Output probe: a point fixed in a segment.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkerSpec {
    pub name: String,
    pub segment: String,
    /// Marker position in the model reference frame at the initial posture, m.
    pub point: Vector3<f64>,
}

/// The complete, validated body/seat model. Immutable after load; safe to
/// share read-only across concurrent simulations.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyModel {
    pub name: String,
    /// m/s², normally (0, 0, −9.81).
    pub gravity: Vector3<f64>,
    pub segments: Vec<Segment>,
    pub base: BaseSpec,
    pub joints: Vec<JointSpec>,
    pub restraints: Vec<RestraintSpec>,
    pub contacts: Vec<ContactPairSpec>,
    pub environment: Vec<EnvGeom>,
    pub point_restraints: Vec<PointRestraintSpec>,
    pub markers: Vec<MarkerSpec>,
}

impl BodyModel {
    pub fn segment_index(&self, name: &str) -> Option<usize> {
        self.segments.iter().position(|s| s.name == name)
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    /// Sum of internal joint DoF (base excluded).
    pub fn internal_dof(&self) -> usize {
        self.joints.iter().map(|j| j.kind.dof()).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.segments.iter().map(|s| s.mass).sum()
    }

    /// The 12-segment reference occupant model shipped with the crate.
    pub fn reference() -> BodyModel {
        load_model(include_str!("../../assets/reference_model.toml"))
            .expect("embedded reference model must parse")
    }

    /// DoF count of the restraint attached to `joint_name` (base included).
    pub fn joint_dof_by_name(&self, joint_name: &str) -> Option<usize> {
        if joint_name == "base" {
            return Some(self.base.kind.dof());
        }
        self.joints
            .iter()
            .find(|j| j.name == joint_name)
            .map(|j| j.kind.dof())
    }
}
