//! TOML schema for the model config, plus the cm→m unit conversion.
//!
//! The canonical schema is documented in the repository README; the shipped
//! reference config in `assets/reference_model.toml` exercises every table.

use super::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
struct Cfg {
    name: Option<String>,
    /// "cm" (default, matching anthropometric tables) or "m".
    length_unit: Option<String>,
    gravity: Option<[f64; 3]>,
    base: BaseCfg,
    #[serde(default)]
    segments: Vec<SegmentCfg>,
    #[serde(default)]
    joints: Vec<JointCfg>,
    #[serde(default)]
    restraints: Vec<RestraintCfg>,
    #[serde(default)]
    environment: Vec<EnvGeomCfg>,
    #[serde(default)]
    contacts: Vec<ContactCfg>,
    #[serde(default)]
    point_restraints: Vec<PointRestraintCfg>,
    #[serde(default)]
    markers: Vec<MarkerCfg>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SegmentCfg {
    name: String,
    mass: f64,
    /// (Ixx, Iyy, Izz) kg·m²
    inertia: [f64; 3],
    /// length units
    cog: [f64; 3],
    surface: Option<SurfaceCfg>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SurfaceCfg {
    degree: u32,
    semi_axes: [f64; 3],
    #[serde(default)]
    offset: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize)]
struct JointCfg {
    name: String,
    parent: String,
    child: String,
    kind: String,
    position: [f64; 3],
    axis: Option<[f64; 3]>,
    axis1: Option<[f64; 3]>,
    axis2: Option<[f64; 3]>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BaseCfg {
    segment: String,
    kind: String,
    frame: Option<String>,
    position: Option<[f64; 3]>,
    axis: Option<[f64; 3]>,
    axis1: Option<[f64; 3]>,
    axis2: Option<[f64; 3]>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RestraintCfg {
    joint: String,
    mode: Option<String>,
    stiffness: Vec<f64>,
    damping: Vec<f64>,
    integral_gain: Option<Vec<f64>>,
    setpoint: Option<Vec<f64>>,
    integral_clamp: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EnvGeomCfg {
    name: String,
    kind: String,
    // superellipsoid fields
    degree: Option<u32>,
    semi_axes: Option<[f64; 3]>,
    center: Option<[f64; 3]>,
    // plane fields
    point: Option<[f64; 3]>,
    normal: Option<[f64; 3]>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ContactCfg {
    slave: String,
    master: String,
    stiffness: f64,
    damping: f64,
    friction: f64,
    v_reg: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PointRestraintCfg {
    name: String,
    segment: String,
    point: [f64; 3],
    anchor_frame: String,
    anchor: [f64; 3],
    stiffness: f64,
    damping: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct MarkerCfg {
    name: String,
    segment: String,
    point: Option<[f64; 3]>,
}

const DEFAULT_FRICTION_V_REG: f64 = 0.01;

fn vec3(a: [f64; 3]) -> Vector3<f64> {
    Vector3::new(a[0], a[1], a[2])
}

fn arr3(v: &Vector3<f64>) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn unit_axis(a: [f64; 3], what: &str) -> Result<Vector3<f64>, ModelError> {
    let v = vec3(a);
    let n = v.norm();
    if !(n.is_finite() && n > 1e-12) {
        return Err(ModelError::Invalid(format!("{what}: axis must be nonzero")));
    }
    Ok(v / n)
}

fn joint_kind(
    kind: &str,
    axis: Option<[f64; 3]>,
    axis1: Option<[f64; 3]>,
    axis2: Option<[f64; 3]>,
    ctx: &str,
) -> Result<JointKind, ModelError> {
    let need_axis = |a: Option<[f64; 3]>| {
        a.ok_or_else(|| ModelError::Invalid(format!("{ctx}: `{kind}` joint needs an `axis`")))
    };
    match kind {
        "spherical" => Ok(JointKind::Spherical),
        "universal" => {
            let a1 = axis1
                .ok_or_else(|| ModelError::Invalid(format!("{ctx}: universal joint needs `axis1`")))?;
            let a2 = axis2
                .ok_or_else(|| ModelError::Invalid(format!("{ctx}: universal joint needs `axis2`")))?;
            Ok(JointKind::Universal {
                axis1: unit_axis(a1, ctx)?,
                axis2: unit_axis(a2, ctx)?,
            })
        }
        "revolute" => Ok(JointKind::Revolute {
            axis: unit_axis(need_axis(axis)?, ctx)?,
        }),
        "spherical_translation" => Ok(JointKind::SphericalTranslation {
            axis: unit_axis(need_axis(axis)?, ctx)?,
        }),
        "prismatic" => Ok(JointKind::Prismatic {
            axis: unit_axis(need_axis(axis)?, ctx)?,
        }),
        "locked" => Ok(JointKind::Locked),
        "free" => Ok(JointKind::Free),
        other => Err(ModelError::Invalid(format!(
            "{ctx}: unknown joint kind `{other}`"
        ))),
    }
}

fn kind_fields(kind: &JointKind) -> (Option<[f64; 3]>, Option<[f64; 3]>, Option<[f64; 3]>) {
    match kind {
        JointKind::Universal { axis1, axis2 } => (None, Some(arr3(axis1)), Some(arr3(axis2))),
        JointKind::Revolute { axis }
        | JointKind::SphericalTranslation { axis }
        | JointKind::Prismatic { axis } => (Some(arr3(axis)), None, None),
        _ => (None, None, None),
    }
}

/// Parse a model config, convert lengths to meters and check that every
/// cross-reference resolves. Structural totals (connectivity, inertia
/// triangle) are reported by [`validate_model`], not rejected here.
pub fn load_model(config_text: &str) -> Result<BodyModel, ModelError> {
    let cfg: Cfg = toml::from_str(config_text).map_err(|e| ModelError::Parse(e.to_string()))?;

    let scale = match cfg.length_unit.as_deref() {
        None | Some("cm") => 0.01,
        Some("m") => 1.0,
        Some(other) => {
            return Err(ModelError::Invalid(format!(
                "length_unit must be \"cm\" or \"m\", got `{other}`"
            )))
        }
    };
    let len = |a: [f64; 3]| vec3(a) * scale;

    let mut segments = Vec::with_capacity(cfg.segments.len());
    for s in &cfg.segments {
        if segments.iter().any(|p: &Segment| p.name == s.name) {
            return Err(ModelError::Invalid(format!("duplicate segment `{}`", s.name)));
        }
        if !(s.mass.is_finite() && s.mass > 0.0) {
            return Err(ModelError::Invalid(format!(
                "segment `{}`: mass must be positive, got {}",
                s.name, s.mass
            )));
        }
        if s.inertia.iter().any(|i| !(i.is_finite() && *i > 0.0)) {
            return Err(ModelError::Invalid(format!(
                "segment `{}`: inertia components must be positive",
                s.name
            )));
        }
        let surface = match &s.surface {
            None => None,
            Some(e) => Some(SurfaceGeom {
                shape: superellipsoid_shape(e.degree, e.semi_axes, scale, &s.name)?,
                offset: len(e.offset),
            }),
        };
        segments.push(Segment {
            name: s.name.clone(),
            mass: s.mass,
            inertia_diag: vec3(s.inertia),
            cog: len(s.cog),
            surface,
        });
    }

    let seg_exists = |name: &str| segments.iter().any(|s| s.name == name);

    let mut joints = Vec::with_capacity(cfg.joints.len());
    for j in &cfg.joints {
        if joints.iter().any(|p: &JointSpec| p.name == j.name) {
            return Err(ModelError::Invalid(format!("duplicate joint `{}`", j.name)));
        }
        for (role, name) in [("parent", &j.parent), ("child", &j.child)] {
            if !seg_exists(name) {
                return Err(ModelError::Reference {
                    kind: "segment",
                    name: name.clone(),
                    referrer: format!("joint `{}` ({role})", j.name),
                });
            }
        }
        if j.parent == j.child {
            return Err(ModelError::Invalid(format!(
                "joint `{}`: parent and child must differ",
                j.name
            )));
        }
        let kind = joint_kind(&j.kind, j.axis, j.axis1, j.axis2, &format!("joint `{}`", j.name))?;
        if matches!(kind, JointKind::Free) {
            return Err(ModelError::Invalid(format!(
                "joint `{}`: `free` is only valid for the base",
                j.name
            )));
        }
        let position = len(j.position);
        if position.iter().any(|c| !c.is_finite()) {
            return Err(ModelError::Invalid(format!(
                "joint `{}`: position must be finite",
                j.name
            )));
        }
        joints.push(JointSpec {
            name: j.name.clone(),
            parent: j.parent.clone(),
            child: j.child.clone(),
            kind,
            position,
        });
    }

    if !seg_exists(&cfg.base.segment) {
        return Err(ModelError::Reference {
            kind: "segment",
            name: cfg.base.segment.clone(),
            referrer: "base".into(),
        });
    }
    let base_kind = joint_kind(&cfg.base.kind, cfg.base.axis, cfg.base.axis1, cfg.base.axis2, "base")?;
    let base_frame = match cfg.base.frame.as_deref() {
        None | Some("world") => BaseFrame::World,
        Some("seat") => BaseFrame::Seat,
        Some(other) => {
            return Err(ModelError::Invalid(format!(
                "base.frame must be \"world\" or \"seat\", got `{other}`"
            )))
        }
    };
    let base_position = match cfg.base.position {
        Some(p) => len(p),
        None => {
            let root = segments.iter().find(|s| s.name == cfg.base.segment).unwrap();
            root.cog
        }
    };
    let base = BaseSpec {
        segment: cfg.base.segment.clone(),
        frame: base_frame,
        kind: base_kind,
        position: base_position,
    };

    let mut environment = Vec::with_capacity(cfg.environment.len());
    for g in &cfg.environment {
        if environment.iter().any(|p: &EnvGeom| p.name == g.name) || seg_exists(&g.name) {
            return Err(ModelError::Invalid(format!(
                "environment geom `{}`: name already in use",
                g.name
            )));
        }
        let (shape, center) = match g.kind.as_str() {
            "plane" => {
                let point = g.point.ok_or_else(|| {
                    ModelError::Invalid(format!("environment `{}`: plane needs `point`", g.name))
                })?;
                let normal = g.normal.ok_or_else(|| {
                    ModelError::Invalid(format!("environment `{}`: plane needs `normal`", g.name))
                })?;
                let shape = GeomShape::Plane {
                    point: len(point),
                    normal: unit_axis(normal, &format!("environment `{}`", g.name))?,
                };
                (shape, Vector3::zeros())
            }
            "superellipsoid" => {
                let degree = g.degree.ok_or_else(|| {
                    ModelError::Invalid(format!("environment `{}`: needs `degree`", g.name))
                })?;
                let semi = g.semi_axes.ok_or_else(|| {
                    ModelError::Invalid(format!("environment `{}`: needs `semi_axes`", g.name))
                })?;
                let shape = superellipsoid_shape(degree, semi, scale, &g.name)?;
                (shape, len(g.center.unwrap_or([0.0; 3])))
            }
            other => {
                return Err(ModelError::Invalid(format!(
                    "environment `{}`: unknown kind `{other}`",
                    g.name
                )))
            }
        };
        environment.push(EnvGeom {
            name: g.name.clone(),
            shape,
            center,
        });
    }

    let geom_names: Vec<&str> = segments
        .iter()
        .filter(|s| s.surface.is_some())
        .map(|s| s.name.as_str())
        .chain(environment.iter().map(|g| g.name.as_str()))
        .collect();

    let mut contacts = Vec::with_capacity(cfg.contacts.len());
    for c in &cfg.contacts {
        for (role, name) in [("slave", &c.slave), ("master", &c.master)] {
            if !geom_names.contains(&name.as_str()) {
                return Err(ModelError::Reference {
                    kind: "contact geom",
                    name: name.clone(),
                    referrer: format!("contact pair ({role})"),
                });
            }
        }
        let slave_is_ellipsoid = segments
            .iter()
            .find(|s| s.name == c.slave)
            .and_then(|s| s.surface.as_ref())
            .map(|e| matches!(e.shape, GeomShape::Superellipsoid { .. }))
            .unwrap_or(false);
        if !slave_is_ellipsoid {
            return Err(ModelError::Invalid(format!(
                "contact pair: slave `{}` must be a segment superellipsoid",
                c.slave
            )));
        }
        let v_reg = c.v_reg.unwrap_or(DEFAULT_FRICTION_V_REG);
        if c.stiffness < 0.0 || c.damping < 0.0 || c.friction < 0.0 || v_reg <= 0.0 {
            return Err(ModelError::Invalid(format!(
                "contact pair {}/{}: parameters out of range",
                c.slave, c.master
            )));
        }
        contacts.push(ContactPairSpec {
            slave: c.slave.clone(),
            master: c.master.clone(),
            stiffness: c.stiffness,
            damping: c.damping,
            friction_mu: c.friction,
            v_reg,
        });
    }

    let mut restraints = Vec::with_capacity(cfg.restraints.len());
    for r in &cfg.restraints {
        let dof = if r.joint == "base" {
            base.kind.dof()
        } else {
            joints
                .iter()
                .find(|j| j.name == r.joint)
                .ok_or_else(|| ModelError::Reference {
                    kind: "joint",
                    name: r.joint.clone(),
                    referrer: "restraint".into(),
                })?
                .kind
                .dof()
        };
        let mode = match r.mode.as_deref() {
            None | Some("pid") => RestraintMode::Pid,
            Some("cardan") => RestraintMode::Cardan,
            Some(other) => {
                return Err(ModelError::Invalid(format!(
                    "restraint `{}`: unknown mode `{other}`",
                    r.joint
                )))
            }
        };
        let integral_gain = r.integral_gain.clone().unwrap_or_else(|| vec![0.0; dof]);
        let setpoint = r.setpoint.clone().unwrap_or_else(|| vec![0.0; dof]);
        let integral_clamp = match &r.integral_clamp {
            Some(c) => c.clone(),
            // Default: bound the integral torque contribution at 10× the
            // proportional torque scale of the joint.
            None => r
                .stiffness
                .iter()
                .zip(&integral_gain)
                .map(|(kp, ki)| if *ki > 0.0 { 10.0 * kp / ki } else { f64::INFINITY })
                .collect(),
        };
        for (label, arr) in [
            ("stiffness", &r.stiffness),
            ("damping", &r.damping),
            ("integral_gain", &integral_gain),
            ("setpoint", &setpoint),
            ("integral_clamp", &integral_clamp),
        ] {
            if arr.len() != dof {
                return Err(ModelError::Invalid(format!(
                    "restraint `{}`: {label} has {} entries, joint has {dof} DoF",
                    r.joint,
                    arr.len()
                )));
            }
        }
        if r.stiffness.iter().chain(&r.damping).chain(&integral_gain).any(|v| *v < 0.0) {
            return Err(ModelError::Invalid(format!(
                "restraint `{}`: gains must be non-negative",
                r.joint
            )));
        }
        restraints.push(RestraintSpec {
            joint: r.joint.clone(),
            mode,
            stiffness: r.stiffness.clone(),
            damping: r.damping.clone(),
            integral_gain,
            setpoint,
            integral_clamp,
        });
    }

    let mut point_restraints = Vec::with_capacity(cfg.point_restraints.len());
    for p in &cfg.point_restraints {
        if !seg_exists(&p.segment) {
            return Err(ModelError::Reference {
                kind: "segment",
                name: p.segment.clone(),
                referrer: format!("point restraint `{}`", p.name),
            });
        }
        if p.anchor_frame != "seat" && p.anchor_frame != "world" && !seg_exists(&p.anchor_frame) {
            return Err(ModelError::Reference {
                kind: "anchor frame",
                name: p.anchor_frame.clone(),
                referrer: format!("point restraint `{}`", p.name),
            });
        }
        if p.stiffness < 0.0 || p.damping < 0.0 {
            return Err(ModelError::Invalid(format!(
                "point restraint `{}`: stiffness/damping must be non-negative",
                p.name
            )));
        }
        point_restraints.push(PointRestraintSpec {
            name: p.name.clone(),
            segment: p.segment.clone(),
            point: len(p.point),
            anchor_frame: p.anchor_frame.clone(),
            anchor: len(p.anchor),
            stiffness: p.stiffness,
            damping: p.damping,
        });
    }

    let mut markers = Vec::with_capacity(cfg.markers.len());
    for m in &cfg.markers {
        let seg = segments
            .iter()
            .find(|s| s.name == m.segment)
            .ok_or_else(|| ModelError::Reference {
                kind: "segment",
                name: m.segment.clone(),
                referrer: format!("marker `{}`", m.name),
            })?;
        markers.push(MarkerSpec {
            name: m.name.clone(),
            segment: m.segment.clone(),
            point: m.point.map(len).unwrap_or(seg.cog),
        });
    }

    let gravity = cfg
        .gravity
        .map(vec3)
        .unwrap_or_else(|| Vector3::new(0.0, 0.0, STANDARD_GRAVITY));

    Ok(BodyModel {
        name: cfg.name.unwrap_or_default(),
        gravity,
        segments,
        base,
        joints,
        restraints,
        contacts,
        environment,
        point_restraints,
        markers,
    })
}

fn superellipsoid_shape(
    degree: u32,
    semi: [f64; 3],
    scale: f64,
    owner: &str,
) -> Result<GeomShape, ModelError> {
    if degree < 2 || degree % 2 != 0 {
        return Err(ModelError::Invalid(format!(
            "`{owner}`: superellipsoid degree must be even and >= 2, got {degree}"
        )));
    }
    let semi_axes = vec3(semi) * scale;
    if semi_axes.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(ModelError::Invalid(format!(
            "`{owner}`: superellipsoid semi-axes must be positive"
        )));
    }
    Ok(GeomShape::Superellipsoid { semi_axes, degree })
}

/// Serialize a model back to config text (meters, `length_unit = "m"`), such
/// that `load_model(serialize_model(m)) == m`.
pub fn serialize_model(model: &BodyModel) -> String {
    let (base_axis, base_axis1, base_axis2) = kind_fields(&model.base.kind);
    let cfg = Cfg {
        name: Some(model.name.clone()),
        length_unit: Some("m".into()),
        gravity: Some(arr3(&model.gravity)),
        base: BaseCfg {
            segment: model.base.segment.clone(),
            kind: model.base.kind.label().into(),
            frame: Some(match model.base.frame {
                BaseFrame::World => "world".into(),
                BaseFrame::Seat => "seat".into(),
            }),
            position: Some(arr3(&model.base.position)),
            axis: base_axis,
            axis1: base_axis1,
            axis2: base_axis2,
        },
        segments: model
            .segments
            .iter()
            .map(|s| SegmentCfg {
                name: s.name.clone(),
                mass: s.mass,
                inertia: arr3(&s.inertia_diag),
                cog: arr3(&s.cog),
                surface: s.surface.as_ref().map(|e| {
                    let GeomShape::Superellipsoid { semi_axes, degree } = &e.shape else {
                        unreachable!("segment surfaces are superellipsoids")
                    };
                    SurfaceCfg {
                        degree: *degree,
                        semi_axes: arr3(semi_axes),
                        offset: arr3(&e.offset),
                    }
                }),
            })
            .collect(),
        joints: model
            .joints
            .iter()
            .map(|j| {
                let (axis, axis1, axis2) = kind_fields(&j.kind);
                JointCfg {
                    name: j.name.clone(),
                    parent: j.parent.clone(),
                    child: j.child.clone(),
                    kind: j.kind.label().into(),
                    position: arr3(&j.position),
                    axis,
                    axis1,
                    axis2,
                }
            })
            .collect(),
        restraints: model
            .restraints
            .iter()
            .map(|r| RestraintCfg {
                joint: r.joint.clone(),
                mode: Some(
                    match r.mode {
                        RestraintMode::Cardan => "cardan",
                        RestraintMode::Pid => "pid",
                    }
                    .into(),
                ),
                stiffness: r.stiffness.clone(),
                damping: r.damping.clone(),
                integral_gain: Some(r.integral_gain.clone()),
                setpoint: Some(r.setpoint.clone()),
                integral_clamp: Some(r.integral_clamp.clone()),
            })
            .collect(),
        environment: model
            .environment
            .iter()
            .map(|g| match &g.shape {
                GeomShape::Plane { point, normal } => EnvGeomCfg {
                    name: g.name.clone(),
                    kind: "plane".into(),
                    degree: None,
                    semi_axes: None,
                    center: None,
                    point: Some(arr3(point)),
                    normal: Some(arr3(normal)),
                },
                GeomShape::Superellipsoid { semi_axes, degree } => EnvGeomCfg {
                    name: g.name.clone(),
                    kind: "superellipsoid".into(),
                    degree: Some(*degree),
                    semi_axes: Some(arr3(semi_axes)),
                    center: Some(arr3(&g.center)),
                    point: None,
                    normal: None,
                },
            })
            .collect(),
        contacts: model
            .contacts
            .iter()
            .map(|c| ContactCfg {
                slave: c.slave.clone(),
                master: c.master.clone(),
                stiffness: c.stiffness,
                damping: c.damping,
                friction: c.friction_mu,
                v_reg: Some(c.v_reg),
            })
            .collect(),
        point_restraints: model
            .point_restraints
            .iter()
            .map(|p| PointRestraintCfg {
                name: p.name.clone(),
                segment: p.segment.clone(),
                point: arr3(&p.point),
                anchor_frame: p.anchor_frame.clone(),
                anchor: arr3(&p.anchor),
                stiffness: p.stiffness,
                damping: p.damping,
            })
            .collect(),
        markers: model
            .markers
            .iter()
            .map(|m| MarkerCfg {
                name: m.name.clone(),
                segment: m.segment.clone(),
                point: Some(arr3(&m.point)),
            })
            .collect(),
    };
    toml::to_string_pretty(&cfg).expect("model serialization cannot fail")
}
