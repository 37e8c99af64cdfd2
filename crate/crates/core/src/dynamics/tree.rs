//! Compiled kinematic tree: topologically ordered bodies, per-joint motion
//! subspaces and forward kinematics.

use super::spatial::{body_inertia, RelPose, SpatialVec};
use super::state::State;
use crate::model::{
    BaseFrame, BodyModel, ContactPairSpec, GeomShape, JointKind, ModelError, RestraintSpec,
};
use nalgebra::{Matrix3, Matrix6, Quaternion, Rotation3, Unit, UnitQuaternion, Vector3};

#[derive(Debug, Clone)]
pub struct CompiledBody {
    pub name: String,
    pub mass: f64,
    pub inertia_diag: Vector3<f64>,
    /// 6×6 spatial inertia in body coordinates (frame at the CoG).
    pub inertia: Matrix6<f64>,
}

#[derive(Debug, Clone)]
pub struct CompiledJoint {
    pub name: String,
    pub kind: JointKind,
    /// Parent body index; `None` attaches to the base frame.
    pub parent: Option<usize>,
    pub q_off: usize,
    pub q_len: usize,
    pub v_off: usize,
    pub dof: usize,
    /// Joint anchor in the parent frame.
    pub anchor_parent: Vector3<f64>,
    /// Joint anchor in the child body frame.
    pub anchor_child: Vector3<f64>,
    /// Full parent→child pose for `Locked` joints.
    pub locked_pose: RelPose,
}

#[derive(Debug, Clone)]
pub enum GeomOwner {
    /// Segment surface: body index + center offset in the body frame.
    Body(usize, Vector3<f64>),
    /// Environment surface riding the seat frame; superellipsoid center.
    Seat(Vector3<f64>),
}

#[derive(Debug, Clone)]
pub struct CompiledGeom {
    pub name: String,
    pub shape: GeomShape,
    pub owner: GeomOwner,
}

#[derive(Debug, Clone)]
pub struct CompiledContact {
    pub slave: usize,
    pub master: usize,
    pub spec: ContactPairSpec,
}

#[derive(Debug, Clone)]
pub struct CompiledRestraint {
    pub joint: usize,
    pub spec: RestraintSpec,
    /// Offset into `State::pid_integrals`.
    pub int_off: usize,
}

#[derive(Debug, Clone)]
pub enum Anchor {
    World(Vector3<f64>),
    Seat(Vector3<f64>),
    Body(usize, Vector3<f64>),
}

#[derive(Debug, Clone)]
pub struct CompiledPointRestraint {
    pub body: usize,
    /// Attachment in the body frame.
    pub offset: Vector3<f64>,
    pub anchor: Anchor,
    pub stiffness: f64,
    pub damping: f64,
}

#[derive(Debug, Clone)]
pub struct CompiledMarker {
    pub name: String,
    pub body: usize,
    /// Marker point in the body frame.
    pub offset: Vector3<f64>,
}

/// A [`BodyModel`] compiled for simulation. Bodies are topologically ordered
/// (parents before children); `joints[i]` connects `bodies[i]` to its parent.
#[derive(Debug, Clone)]
pub struct Tree {
    pub name: String,
    pub gravity: Vector3<f64>,
    pub base_frame: BaseFrame,
    pub bodies: Vec<CompiledBody>,
    pub joints: Vec<CompiledJoint>,
    pub nq: usize,
    pub nv: usize,
    /// Total PID integral slots.
    pub ni: usize,
    pub restraints: Vec<CompiledRestraint>,
    pub geoms: Vec<CompiledGeom>,
    pub contacts: Vec<CompiledContact>,
    pub point_restraints: Vec<CompiledPointRestraint>,
    pub markers: Vec<CompiledMarker>,
    /// CoG of each body in the model reference frame (initial posture).
    initial_cog: Vec<Vector3<f64>>,
}

/// Per-joint motion data evaluated at a state.
#[derive(Debug, Clone)]
pub struct JointMotion {
    pub cols: [SpatialVec; 6],
    pub dof: usize,
    /// Joint-space velocity S·q̇ in child coordinates.
    pub vj: SpatialVec,
    /// Apparent derivative term Ṡ·q̇ in child coordinates.
    pub cj: SpatialVec,
}

impl Default for JointMotion {
    fn default() -> Self {
        JointMotion {
            cols: [SpatialVec::ZERO; 6],
            dof: 0,
            vj: SpatialVec::ZERO,
            cj: SpatialVec::ZERO,
        }
    }
}

/// Prescribed motion of the base frame (world-aligned, translation only).
#[derive(Debug, Clone, Copy, Default)]
pub struct BaseMotion {
    pub pos: Vector3<f64>,
    pub vel: Vector3<f64>,
    pub acc: Vector3<f64>,
}

/// Forward-kinematics cache.
#[derive(Debug, Clone)]
pub struct Kinematics {
    pub rel: Vec<RelPose>,
    pub motion: Vec<JointMotion>,
    /// Body→world rotation.
    pub rot: Vec<Matrix3<f64>>,
    /// Body origin (CoG) in world coordinates.
    pub pos: Vec<Vector3<f64>>,
    /// Spatial velocity in body coordinates.
    pub vel: Vec<SpatialVec>,
    /// Base frame spatial velocity in base coordinates.
    pub base_vel: SpatialVec,
}

impl Tree {
    pub fn new(model: &BodyModel) -> Result<Tree, ModelError> {
        let n = model.segments.len();
        let root = model
            .segment_index(&model.base.segment)
            .ok_or_else(|| ModelError::Reference {
                kind: "segment",
                name: model.base.segment.clone(),
                referrer: "base".into(),
            })?;

        // Breadth-first order over parent→child joints.
        let mut order: Vec<usize> = vec![root];
        let mut joint_of: Vec<Option<usize>> = vec![None; n]; // joint index per segment
        let mut visited = vec![false; n];
        visited[root] = true;
        let mut cursor = 0;
        while cursor < order.len() {
            let seg = order[cursor];
            cursor += 1;
            for (ji, j) in model.joints.iter().enumerate() {
                let p = model.segment_index(&j.parent).unwrap();
                let c = model.segment_index(&j.child).unwrap();
                if p == seg {
                    if visited[c] {
                        return Err(ModelError::Invalid(format!(
                            "joint `{}`: segment `{}` has multiple parents",
                            j.name, j.child
                        )));
                    }
                    visited[c] = true;
                    joint_of[c] = Some(ji);
                    order.push(c);
                }
            }
        }
        if order.len() != n {
            return Err(ModelError::Invalid(
                "joint graph does not span all segments from the base".into(),
            ));
        }

        let seg_to_body: Vec<usize> = {
            let mut map = vec![0; n];
            for (bi, &si) in order.iter().enumerate() {
                map[si] = bi;
            }
            map
        };

        let mut bodies = Vec::with_capacity(n);
        let mut joints = Vec::with_capacity(n);
        let mut initial_cog = Vec::with_capacity(n);
        let mut nq = 0;
        let mut nv = 0;
        for (bi, &si) in order.iter().enumerate() {
            let seg = &model.segments[si];
            bodies.push(CompiledBody {
                name: seg.name.clone(),
                mass: seg.mass,
                inertia_diag: seg.inertia_diag,
                inertia: body_inertia(seg.mass, &seg.inertia_diag),
            });
            initial_cog.push(seg.cog);

            let (name, kind, parent, anchor) = if bi == 0 {
                (
                    "base".to_string(),
                    model.base.kind.clone(),
                    None,
                    model.base.position,
                )
            } else {
                let j = &model.joints[joint_of[si].unwrap()];
                let p = model.segment_index(&j.parent).unwrap();
                (
                    j.name.clone(),
                    j.kind.clone(),
                    Some(seg_to_body[p]),
                    j.position,
                )
            };
            let parent_cog = match parent {
                Some(pb) => initial_cog[pb],
                None => Vector3::zeros(), // base frame origin = reference origin
            };
            let (anchor_parent, anchor_child) = if matches!(kind, JointKind::Free) {
                (Vector3::zeros(), Vector3::zeros())
            } else {
                (anchor - parent_cog, anchor - seg.cog)
            };
            let locked_pose = RelPose {
                rot: Matrix3::identity(),
                pos: anchor_parent - anchor_child,
            };
            let j = CompiledJoint {
                name,
                kind,
                parent,
                q_off: nq,
                q_len: 0,
                v_off: nv,
                dof: 0,
                anchor_parent,
                anchor_child,
                locked_pose,
            };
            let (ql, dof) = (j.kind.q_len(), j.kind.dof());
            nq += ql;
            nv += dof;
            joints.push(CompiledJoint {
                q_len: ql,
                dof,
                ..j
            });
        }

        // Geoms: segment surfaces first (named by segment), then environment.
        let mut geoms: Vec<CompiledGeom> = Vec::new();
        for (bi, &si) in order.iter().enumerate() {
            let seg = &model.segments[si];
            if let Some(surface) = &seg.surface {
                geoms.push(CompiledGeom {
                    name: seg.name.clone(),
                    shape: surface.shape.clone(),
                    owner: GeomOwner::Body(bi, surface.offset),
                });
            }
        }
        for env in &model.environment {
            geoms.push(CompiledGeom {
                name: env.name.clone(),
                shape: env.shape.clone(),
                owner: GeomOwner::Seat(env.center),
            });
        }
        let geom_index = |name: &str| geoms.iter().position(|g| g.name == name);

        let mut contacts = Vec::with_capacity(model.contacts.len());
        for c in &model.contacts {
            let slave = geom_index(&c.slave).ok_or_else(|| ModelError::Reference {
                kind: "contact geom",
                name: c.slave.clone(),
                referrer: "contact pair".into(),
            })?;
            let master = geom_index(&c.master).ok_or_else(|| ModelError::Reference {
                kind: "contact geom",
                name: c.master.clone(),
                referrer: "contact pair".into(),
            })?;
            contacts.push(CompiledContact {
                slave,
                master,
                spec: c.clone(),
            });
        }

        let mut restraints = Vec::with_capacity(model.restraints.len());
        let mut ni = 0;
        for r in &model.restraints {
            let ji = if r.joint == "base" {
                0
            } else {
                joints
                    .iter()
                    .position(|j| j.name == r.joint)
                    .ok_or_else(|| ModelError::Reference {
                        kind: "joint",
                        name: r.joint.clone(),
                        referrer: "restraint".into(),
                    })?
            };
            match joints[ji].kind {
                JointKind::Free => {
                    return Err(ModelError::Invalid(format!(
                        "restraint on free joint `{}` is not supported",
                        r.joint
                    )))
                }
                JointKind::Locked => {
                    return Err(ModelError::Invalid(format!(
                        "restraint on locked joint `{}`",
                        r.joint
                    )))
                }
                _ => {}
            }
            restraints.push(CompiledRestraint {
                joint: ji,
                spec: r.clone(),
                int_off: ni,
            });
            ni += joints[ji].dof;
        }

        let body_of_segment = |name: &str| {
            model
                .segment_index(name)
                .map(|si| seg_to_body[si])
                .ok_or_else(|| ModelError::Reference {
                    kind: "segment",
                    name: name.to_string(),
                    referrer: "tree".into(),
                })
        };

        let mut point_restraints = Vec::with_capacity(model.point_restraints.len());
        for p in &model.point_restraints {
            let body = body_of_segment(&p.segment)?;
            let offset = p.point - model.segments[order[body]].cog;
            let anchor = match p.anchor_frame.as_str() {
                "world" => Anchor::World(p.anchor),
                "seat" => Anchor::Seat(p.anchor),
                seg => {
                    let ab = body_of_segment(seg)?;
                    Anchor::Body(ab, p.anchor - model.segments[order[ab]].cog)
                }
            };
            point_restraints.push(CompiledPointRestraint {
                body,
                offset,
                anchor,
                stiffness: p.stiffness,
                damping: p.damping,
            });
        }

        let mut markers = Vec::with_capacity(model.markers.len());
        for m in &model.markers {
            let body = body_of_segment(&m.segment)?;
            markers.push(CompiledMarker {
                name: m.name.clone(),
                body,
                offset: m.point - model.segments[order[body]].cog,
            });
        }

        Ok(Tree {
            name: model.name.clone(),
            gravity: model.gravity,
            base_frame: model.base.frame,
            bodies,
            joints,
            nq,
            nv,
            ni,
            restraints,
            geoms,
            contacts,
            point_restraints,
            markers,
            initial_cog,
        })
    }

    /// Neutral state: identity joint coordinates at the initial posture.
    pub fn initial_state(&self) -> State {
        let mut state = State::zeros(self.nq, self.nv, self.ni);
        for (i, j) in self.joints.iter().enumerate() {
            let q = &mut state.q.as_mut_slice()[j.q_off..j.q_off + j.q_len];
            match j.kind {
                JointKind::Spherical | JointKind::SphericalTranslation { .. } => q[0] = 1.0,
                JointKind::Free => {
                    q[0] = 1.0;
                    let cog = self.initial_cog[i];
                    q[4] = cog.x;
                    q[5] = cog.y;
                    q[6] = cog.z;
                }
                _ => {}
            }
        }
        state
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    pub fn body_index(&self, name: &str) -> Option<usize> {
        self.bodies.iter().position(|b| b.name == name)
    }

    pub fn total_mass(&self) -> f64 {
        self.bodies.iter().map(|b| b.mass).sum()
    }

    /// Parent→child pose of joint `i` at `state`.
    pub fn joint_rel_pose(&self, state: &State, i: usize) -> RelPose {
        let j = &self.joints[i];
        let q = &state.q.as_slice()[j.q_off..j.q_off + j.q_len];
        joint_pose(j, q)
    }

    /// Freeze `names` joints at their pose in `state`, yielding a new tree and
    /// the mapped state (locked coordinates dropped, the rest copied).
    pub fn lock_joints(&self, state: &State, names: &[String]) -> Result<(Tree, State), ModelError> {
        for name in names {
            if self.joint_index(name).is_none() {
                return Err(ModelError::Reference {
                    kind: "joint",
                    name: name.clone(),
                    referrer: "lock list".into(),
                });
            }
        }
        let mut tree = self.clone();
        let mut nq = 0;
        let mut nv = 0;
        let mut ni = 0;
        let mut qmap: Vec<(usize, usize, usize)> = Vec::new(); // (new_off, old_off, len)
        let mut vmap: Vec<(usize, usize, usize)> = Vec::new();
        for i in 0..tree.joints.len() {
            if names.contains(&tree.joints[i].name) {
                let pose = self.joint_rel_pose(state, i);
                let j = &mut tree.joints[i];
                j.kind = JointKind::Locked;
                j.locked_pose = pose;
                j.q_off = nq;
                j.v_off = nv;
                j.q_len = 0;
                j.dof = 0;
            } else {
                let j = &mut tree.joints[i];
                qmap.push((nq, j.q_off, j.q_len));
                vmap.push((nv, j.v_off, j.dof));
                j.q_off = nq;
                j.v_off = nv;
                nq += j.q_len;
                nv += j.dof;
            }
        }
        // Restraints on locked joints disappear with their integrals.
        let joint_dofs: Vec<usize> = tree.joints.iter().map(|j| j.dof).collect();
        let mut imap: Vec<(usize, usize, usize)> = Vec::new();
        tree.restraints.retain(|r| joint_dofs[r.joint] > 0);
        for r in &mut tree.restraints {
            let dof = joint_dofs[r.joint];
            imap.push((ni, r.int_off, dof));
            r.int_off = ni;
            ni += dof;
        }
        tree.nq = nq;
        tree.nv = nv;
        tree.ni = ni;

        let mut new_state = State::zeros(nq, nv, ni);
        for (dst, src, len) in qmap {
            new_state.q.as_mut_slice()[dst..dst + len]
                .copy_from_slice(&state.q.as_slice()[src..src + len]);
        }
        for (dst, src, len) in vmap {
            new_state.qd.as_mut_slice()[dst..dst + len]
                .copy_from_slice(&state.qd.as_slice()[src..src + len]);
        }
        for (dst, src, len) in imap {
            new_state.pid_integrals[dst..dst + len]
                .copy_from_slice(&state.pid_integrals[src..src + len]);
        }
        new_state.time = state.time;
        Ok((tree, new_state))
    }

    /// Forward kinematics: poses, joint motion subspaces and body velocities.
    pub fn forward_kinematics(&self, state: &State, base: &BaseMotion) -> Kinematics {
        let n = self.bodies.len();
        let mut kin = Kinematics {
            rel: Vec::with_capacity(n),
            motion: Vec::with_capacity(n),
            rot: Vec::with_capacity(n),
            pos: Vec::with_capacity(n),
            vel: Vec::with_capacity(n),
            base_vel: SpatialVec::new(Vector3::zeros(), base.vel),
        };
        for (i, j) in self.joints.iter().enumerate() {
            let q = &state.q.as_slice()[j.q_off..j.q_off + j.q_len];
            let qd = &state.qd.as_slice()[j.v_off..j.v_off + j.dof];
            let rel = joint_pose(j, q);
            let motion = joint_motion(j, q, qd, &rel);

            let (parent_rot, parent_pos, parent_vel) = match j.parent {
                Some(p) => (kin.rot[p], kin.pos[p], kin.vel[p]),
                None => (Matrix3::identity(), base.pos, kin.base_vel),
            };
            let rot = parent_rot * rel.rot;
            let pos = parent_pos + parent_rot * rel.pos;
            let vel = rel.motion_to_child(&parent_vel) + motion.vj;

            kin.rel.push(rel);
            kin.motion.push(motion);
            kin.rot.push(rot);
            kin.pos.push(pos);
            kin.vel.push(vel);
        }
        kin
    }
}

/// Unit quaternion from 4 state slots (w, x, y, z), renormalized.
pub fn quat_from_slots(q: &[f64]) -> UnitQuaternion<f64> {
    UnitQuaternion::from_quaternion(Quaternion::new(q[0], q[1], q[2], q[3]))
}

fn rot_about(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    Rotation3::from_axis_angle(&Unit::new_normalize(*axis), angle).into_inner()
}

/// Parent→child pose of a joint at coordinates `q`.
pub fn joint_pose(j: &CompiledJoint, q: &[f64]) -> RelPose {
    let dp = j.anchor_parent;
    let dc = j.anchor_child;
    match &j.kind {
        JointKind::Spherical => {
            let r = quat_from_slots(q).to_rotation_matrix().into_inner();
            RelPose {
                rot: r,
                pos: dp - r * dc,
            }
        }
        JointKind::Universal { axis1, axis2 } => {
            let r = rot_about(axis1, q[0]) * rot_about(axis2, q[1]);
            RelPose {
                rot: r,
                pos: dp - r * dc,
            }
        }
        JointKind::Revolute { axis } => {
            let r = rot_about(axis, q[0]);
            RelPose {
                rot: r,
                pos: dp - r * dc,
            }
        }
        JointKind::SphericalTranslation { axis } => {
            let r = quat_from_slots(q).to_rotation_matrix().into_inner();
            RelPose {
                rot: r,
                pos: dp + axis * q[4] - r * dc,
            }
        }
        JointKind::Prismatic { axis } => RelPose {
            rot: Matrix3::identity(),
            pos: dp + axis * q[0] - dc,
        },
        JointKind::Free => {
            let r = quat_from_slots(q).to_rotation_matrix().into_inner();
            RelPose {
                rot: r,
                pos: Vector3::new(q[4], q[5], q[6]),
            }
        }
        JointKind::Locked => j.locked_pose,
    }
}

/// Motion subspace columns, joint velocity and the Ṡq̇ term, all in child
/// body coordinates. Rotational columns are `[a; d_c × a]` for an axis `a`
/// through the anchor at `d_c`.
pub fn joint_motion(j: &CompiledJoint, q: &[f64], qd: &[f64], rel: &RelPose) -> JointMotion {
    let dc = j.anchor_child;
    let rot_col = |a: Vector3<f64>| SpatialVec::new(a, dc.cross(&a));
    let mut m = JointMotion {
        dof: j.dof,
        ..Default::default()
    };
    match &j.kind {
        JointKind::Spherical => {
            for k in 0..3 {
                m.cols[k] = rot_col(Vector3::ith_axis(k).into_inner());
            }
            let omega = Vector3::new(qd[0], qd[1], qd[2]);
            m.vj = SpatialVec::new(omega, dc.cross(&omega));
        }
        JointKind::Universal { axis1, axis2 } => {
            // axis1 expressed in child coordinates.
            let a1c = rot_about(axis2, -q[1]) * axis1;
            m.cols[0] = rot_col(a1c);
            m.cols[1] = rot_col(*axis2);
            m.vj = m.cols[0] * qd[0] + m.cols[1] * qd[1];
            let a1dot = -(axis2.cross(&a1c)) * qd[1];
            m.cj = rot_col(a1dot) * qd[0];
        }
        JointKind::Revolute { axis } => {
            m.cols[0] = rot_col(*axis);
            m.vj = m.cols[0] * qd[0];
        }
        JointKind::SphericalTranslation { axis } => {
            for k in 0..3 {
                m.cols[k] = rot_col(Vector3::ith_axis(k).into_inner());
            }
            let u = rel.rot.transpose() * axis;
            m.cols[3] = SpatialVec::new(Vector3::zeros(), u);
            let omega = Vector3::new(qd[0], qd[1], qd[2]);
            m.vj = SpatialVec::new(omega, dc.cross(&omega) + u * qd[3]);
            m.cj = SpatialVec::new(Vector3::zeros(), -(omega.cross(&u)) * qd[3]);
        }
        JointKind::Prismatic { axis } => {
            m.cols[0] = SpatialVec::new(Vector3::zeros(), *axis);
            m.vj = m.cols[0] * qd[0];
        }
        JointKind::Free => {
            for k in 0..3 {
                let e = Vector3::ith_axis(k).into_inner();
                m.cols[k] = SpatialVec::new(e, Vector3::zeros());
                m.cols[k + 3] = SpatialVec::new(Vector3::zeros(), e);
            }
            m.vj = SpatialVec::new(
                Vector3::new(qd[0], qd[1], qd[2]),
                Vector3::new(qd[3], qd[4], qd[5]),
            );
        }
        JointKind::Locked => {}
    }
    m
}
